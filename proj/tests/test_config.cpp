#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "bdrl/config.hpp"
#include "test_util.hpp"

using bdrl::KvFile;

TEST_CASE("parsing skips blanks and comments and trims whitespace") {
  const KvFile kv = KvFile::parse_text(
      "# leading comment\n"
      "\n"
      "  alpha = 1 \n"
      "\t beta.gamma=  hello world \n"
      "   # indented comment\n");
  CHECK(kv.has("alpha"));
  CHECK(kv.get_int("alpha", 0) == 1);
  CHECK(kv.get_string("beta.gamma", "") == "hello world");
  CHECK_FALSE(kv.has("missing"));
}

TEST_CASE("malformed lines are rejected with their line number") {
  CHECK_THROWS_WITH_AS(KvFile::parse_text("a = 1\nnonsense\n"),
                       doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(KvFile::parse_text("= 3\n"),
                       doctest::Contains("line 1"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(KvFile::parse_text("a = 1\n\n# c\na = 2\n"),
                       doctest::Contains("line 4"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(KvFile::parse_text("a = 1\na = 2\n"),
                       doctest::Contains("duplicate key 'a'"),
                       std::invalid_argument);
}

TEST_CASE("typed getters return values or fall back when absent") {
  const KvFile kv = KvFile::parse_text(
      "i = -42\n"
      "d = 2.5\n"
      "s = text\n"
      "list = 1, 2,3\n");
  CHECK(kv.get_int("i", 0) == -42);
  CHECK(kv.get_double("d", 0.0) == 2.5);
  CHECK(kv.get_double("i", 0.0) == -42.0);
  CHECK(kv.get_string("s", "") == "text");
  CHECK(kv.get_int_list("list", {}) == std::vector<std::uint64_t>{1, 2, 3});

  CHECK(kv.get_int("absent", 7) == 7);
  CHECK(kv.get_double("absent", 1.5) == 1.5);
  CHECK(kv.get_string("absent", "fb") == "fb");
  CHECK(kv.get_bool("absent", true));
  CHECK(kv.get_int_list("absent", {9}) == std::vector<std::uint64_t>{9});
}

TEST_CASE("type errors name the offending key") {
  const KvFile kv = KvFile::parse_text(
      "word = abc\n"
      "frac = 2.5\n"
      "badlist = 1,x,3\n"
      "emptylist = ,\n");
  CHECK_THROWS_WITH_AS(kv.get_int("word", 0), doctest::Contains("'word'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(kv.get_int("frac", 0), doctest::Contains("'frac'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(kv.get_double("word", 0.0), doctest::Contains("'word'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(kv.get_bool("word", false), doctest::Contains("'word'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(kv.get_int_list("badlist", {}),
                       doctest::Contains("'badlist'"), std::invalid_argument);
  CHECK_THROWS_AS(kv.get_int_list("emptylist", {}), std::invalid_argument);
}

TEST_CASE("booleans accept true/false, on/off and 1/0") {
  const KvFile kv = KvFile::parse_text(
      "a = true\nb = on\nc = 1\nd = false\ne = off\nf = 0\n");
  CHECK(kv.get_bool("a", false));
  CHECK(kv.get_bool("b", false));
  CHECK(kv.get_bool("c", false));
  CHECK_FALSE(kv.get_bool("d", true));
  CHECK_FALSE(kv.get_bool("e", true));
  CHECK_FALSE(kv.get_bool("f", true));
}

TEST_CASE("serialisation preserves insertion order and round trips") {
  KvFile kv;
  kv.set("zeta", "last? no: first");
  kv.set_int("count", -3);
  kv.set_double("ratio", 0.1);
  kv.set_bool("flag", true);
  kv.set_int_list("seeds", {5, 1, 3});
  kv.set("zeta", "updated");  // overwrite keeps the original position

  const std::string text = kv.serialize();
  CHECK(text ==
        "zeta = updated\n"
        "count = -3\n"
        "ratio = 0.10000000000000001\n"
        "flag = true\n"
        "seeds = 5,1,3\n");

  const KvFile back = KvFile::parse_text(text);
  CHECK(back.keys() == kv.keys());
  CHECK(back.get_string("zeta", "") == "updated");
  CHECK(back.get_int("count", 0) == -3);
  CHECK(back.get_double("ratio", 0.0) == 0.1);
  CHECK(back.get_bool("flag", false));
  CHECK(back.get_int_list("seeds", {}) == std::vector<std::uint64_t>{5, 1, 3});
}

TEST_CASE("write_file and parse_file round trip through disk") {
  bdrl_test::TempDir dir;
  const std::string path = dir.file("run.cfg");
  KvFile kv;
  kv.set_double("x", 1.0 / 3.0);
  kv.set("name", "trial");
  kv.write_file(path);

  const KvFile back = KvFile::parse_file(path);
  CHECK(back.get_double("x", 0.0) == 1.0 / 3.0);
  CHECK(back.get_string("name", "") == "trial");
}

TEST_CASE("a missing config file names its path") {
  bdrl_test::TempDir dir;
  const std::string path = dir.file("nope.cfg");
  CHECK_THROWS_WITH_AS(KvFile::parse_file(path), doctest::Contains("nope.cfg"),
                       std::runtime_error);
}

TEST_CASE("format_double survives a text round trip exactly") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 3.048, 1e-300, -2.5e17, 6.02e23}) {
    const std::string text = bdrl::format_double(v);
    CHECK(std::stod(text) == v);
  }
  CHECK(bdrl::format_double(2.0) == "2");
}
