#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace floatgnc {

/// Flat `key = value` configuration with dotted namespaces and `#` comments.
/// All values are stored as strings; doubles are serialized with enough
/// digits that parse(serialize(c)) reproduces c exactly. Insertion order is
/// preserved so serialization is stable.
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text);
  static Config parse_file(const std::string& path);
  std::string serialize() const;
  void write_file(const std::string& path) const;

  bool has(const std::string& key) const;
  const std::vector<std::string>& keys() const { return order_; }

  // Getters throw std::runtime_error when the key is missing or the value
  // does not parse as the requested type.
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  /// Comma-separated list of doubles; enforces the expected count when n >= 0.
  std::vector<double> get_doubles(const std::string& key, int n = -1) const;

  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, std::int64_t value);
  void set_bool(const std::string& key, bool value);
  void set_string(const std::string& key, const std::string& value);
  void set_doubles(const std::string& key, const std::vector<double>& values);

  /// Overlays `other` on top of this config (other wins on conflicts).
  void merge_from(const Config& other);

  bool operator==(const Config& other) const;

 private:
  const std::string& raw(const std::string& key) const;
  void set_raw(const std::string& key, std::string value);

  std::vector<std::string> order_;
  std::unordered_map<std::string, std::string> values_;
};

/// Canonical double formatting used across all text formats (%.17g).
std::string format_double(double v);

}  // namespace floatgnc
