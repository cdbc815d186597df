#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "bdrl/dense_net.hpp"
#include "bdrl/rng.hpp"
#include "bdrl/snapshot.hpp"
#include "test_util.hpp"

using bdrl::Activation;
using bdrl::DenseNet;
using bdrl::LayerSpec;
using bdrl::SeededRng;

TEST_CASE("save and load round-trip a network bit-exactly") {
  bdrl_test::TempDir dir;
  std::vector<LayerSpec> specs{{5, Activation::relu},
                               {4, Activation::softmax}};
  SeededRng rng(123);
  DenseNet net(3, specs, rng);
  const std::string path = dir.file("net.bin");
  bdrl::save_net(net, path);

  DenseNet loaded = bdrl::load_net(path);
  REQUIRE(loaded.input_dim() == 3);
  REQUIRE(loaded.layer_count() == 2);
  CHECK(loaded.layer_width(0) == 5);
  CHECK(loaded.layer_width(1) == 4);
  CHECK(loaded.layer_activation(0) == Activation::relu);
  CHECK(loaded.layer_activation(1) == Activation::softmax);
  REQUIRE(loaded.param_count() == net.param_count());
  for (std::size_t i = 0; i < net.param_count(); ++i) {
    CHECK(loaded.get_param(i) == net.get_param(i));
  }
}

TEST_CASE("snapshot files start with the magic bytes") {
  bdrl_test::TempDir dir;
  std::vector<LayerSpec> specs{{1, Activation::identity}};
  DenseNet net(1, specs);
  const std::string path = dir.file("net.bin");
  bdrl::save_net(net, path);
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "BDRL");
}

TEST_CASE("loading a missing file fails") {
  bdrl_test::TempDir dir;
  CHECK_THROWS_AS(bdrl::load_net(dir.file("absent.bin")), std::runtime_error);
}

TEST_CASE("corrupt magic is rejected") {
  bdrl_test::TempDir dir;
  const std::string path = dir.file("bad.bin");
  std::ofstream(path, std::ios::binary) << "XXXXgarbage-bytes-here";
  CHECK_THROWS_AS(bdrl::load_net(path), std::runtime_error);
}

TEST_CASE("a truncated snapshot is rejected") {
  bdrl_test::TempDir dir;
  std::vector<LayerSpec> specs{{6, Activation::tanh}};
  SeededRng rng(9);
  DenseNet net(4, specs, rng);
  const std::string full = dir.file("full.bin");
  bdrl::save_net(net, full);

  std::ifstream in(full, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() > 16);
  const std::string cut = dir.file("cut.bin");
  std::ofstream(cut, std::ios::binary)
      << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(bdrl::load_net(cut), std::runtime_error);
}
