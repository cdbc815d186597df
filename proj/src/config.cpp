#include "bdrl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bdrl {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

KvFile KvFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

KvFile KvFile::parse_text(const std::string& text) {
  KvFile kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key");
    }
    if (kv.values_.count(key)) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": duplicate key '" + key + "'");
    }
    kv.set(key, value);
  }
  return kv;
}

bool KvFile::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& KvFile::raw(const std::string& key) const {
  return values_.at(key);
}

std::string KvFile::get_string(const std::string& key,
                               const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

std::int64_t KvFile::get_int(const std::string& key,
                             std::int64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + key +
                                "': expected integer, got '" + v + "'");
  }
  return out;
}

double KvFile::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw std::invalid_argument("config key '" + key +
                                "': expected number, got '" + v + "'");
  }
  return out;
}

bool KvFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw std::invalid_argument("config key '" + key +
                              "': expected boolean, got '" + v + "'");
}

std::vector<std::uint64_t> KvFile::get_int_list(
    const std::string& key, const std::vector<std::uint64_t>& fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
      throw std::invalid_argument("config key '" + key +
                                  "': expected integer list, got '" + v + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) {
    throw std::invalid_argument("config key '" + key + "': empty list");
  }
  return out;
}

void KvFile::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) order_.push_back(key);
  values_[key] = value;
}

void KvFile::set_int(const std::string& key, std::int64_t value) {
  set(key, std::to_string(value));
}

void KvFile::set_double(const std::string& key, double value) {
  set(key, format_double(value));
}

void KvFile::set_bool(const std::string& key, bool value) {
  set(key, value ? "true" : "false");
}

void KvFile::set_int_list(const std::string& key,
                          const std::vector<std::uint64_t>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ',';
    joined += std::to_string(values[i]);
  }
  set(key, joined);
}

std::string KvFile::serialize() const {
  std::string out;
  for (const std::string& key : order_) {
    out += key;
    out += " = ";
    out += values_.at(key);
    out += '\n';
  }
  return out;
}

void KvFile::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << serialize();
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace bdrl
