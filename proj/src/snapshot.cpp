#include "bdrl/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace bdrl {
namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");
static_assert(sizeof(double) == 8, "snapshot format assumes 64-bit doubles");

constexpr char kMagic[4] = {'B', 'D', 'R', 'L'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64s(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("load_net: truncated snapshot: " + path);
  return v;
}

void read_f64s(std::istream& in, double* data, std::size_t n,
               const std::string& path) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("load_net: truncated snapshot: " + path);
}

}  // namespace

void save_net(const DenseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_net: cannot open " + path);

  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Tensor& w = net.weights(l);
    write_u32(out, static_cast<std::uint32_t>(w.cols()));
    write_u32(out, static_cast<std::uint32_t>(w.rows()));
    write_u32(out, static_cast<std::uint32_t>(net.layer_activation(l)));
    write_f64s(out, w.data(), w.size());
    write_f64s(out, net.biases(l).data(), net.biases(l).size());
  }
  if (!out) throw std::runtime_error("save_net: write failed: " + path);
}

DenseNet load_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_net: cannot open " + path);

  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("load_net: bad magic in " + path);
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw std::runtime_error("load_net: unsupported snapshot version in " + path);
  }
  const std::uint32_t layer_count = read_u32(in, path);
  if (layer_count == 0) {
    throw std::runtime_error("load_net: snapshot has no layers: " + path);
  }

  std::size_t input_dim = 0;
  std::vector<LayerSpec> specs;
  struct RawLayer {
    std::vector<double> w;
    std::vector<double> b;
  };
  std::vector<RawLayer> raw;
  std::size_t prev_out = 0;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const std::uint32_t in_dim = read_u32(in, path);
    const std::uint32_t out_dim = read_u32(in, path);
    const std::uint32_t act_code = read_u32(in, path);
    if (in_dim == 0 || out_dim == 0 || act_code > 5) {
      throw std::runtime_error("load_net: corrupt layer header in " + path);
    }
    if (l == 0) {
      input_dim = in_dim;
    } else if (in_dim != prev_out) {
      throw std::runtime_error("load_net: inconsistent layer dims in " + path);
    }
    prev_out = out_dim;
    specs.push_back(LayerSpec{out_dim, static_cast<Activation>(act_code)});
    RawLayer layer;
    layer.w.resize(static_cast<std::size_t>(in_dim) * out_dim);
    layer.b.resize(out_dim);
    read_f64s(in, layer.w.data(), layer.w.size(), path);
    read_f64s(in, layer.b.data(), layer.b.size(), path);
    raw.push_back(std::move(layer));
  }

  DenseNet net(input_dim, specs);
  for (std::size_t l = 0; l < raw.size(); ++l) {
    std::copy(raw[l].w.begin(), raw[l].w.end(), net.weights(l).data());
    net.biases(l) = std::move(raw[l].b);
  }
  return net;
}

}  // namespace bdrl
