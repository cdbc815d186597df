#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bdrl {

// Flat `key = value` text format used for experiment configs and run
// manifests.  Lines starting with '#' (and blank lines) are ignored;
// whitespace around keys and values is trimmed.  Keys are unique.
class KvFile {
 public:
  KvFile() = default;

  // Parse from a file / from text.  Throws std::runtime_error for a
  // missing file and std::invalid_argument (naming the line) for
  // malformed content or duplicate keys.
  static KvFile parse_file(const std::string& path);
  static KvFile parse_text(const std::string& text);

  bool has(const std::string& key) const;
  const std::vector<std::string>& keys() const { return order_; }

  // Typed getters with a fallback.  Type errors name the key.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated unsigned integer list.
  std::vector<std::uint64_t> get_int_list(
      const std::string& key, const std::vector<std::uint64_t>& fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, std::int64_t value);
  void set_double(const std::string& key, double value);
  void set_bool(const std::string& key, bool value);
  void set_int_list(const std::string& key,
                    const std::vector<std::uint64_t>& values);

  // Serialises keys in insertion order.
  std::string serialize() const;
  void write_file(const std::string& path) const;

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

// Full round-trip formatting for doubles in text outputs ("%.17g").
std::string format_double(double v);

}  // namespace bdrl
