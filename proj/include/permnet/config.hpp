#pragma once

// Flat `key = value` configuration files.
//
//   # comment
//   num_bs = 4
//   road_offsets_m = 50, 100, 150
//
// Blank lines and `#` comments are ignored. Keys are unique. Errors carry
// the 1-based line number.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace permnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigEntry {
  std::string value;
  int line = 0;
};

class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text,
                         const std::string& source = "<config>");
  static ConfigMap load(const std::string& path);

  bool contains(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<long long> get_ints(const std::string& key,
                                  const std::vector<long long>& fallback) const;

  /// Throws ConfigError naming the line of the first key not in `known`.
  void reject_unknown(const std::vector<std::string>& known) const;

  /// Canonical text (sorted `key = value` lines).
  std::string canonical() const;
  void set(const std::string& key, const std::string& value);

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;
  const ConfigEntry* find(const std::string& key) const;

  std::string source_;
  std::map<std::string, ConfigEntry> entries_;
};

/// 64-bit FNV-1a; stable across platforms, used to tag outputs.
std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t v);

}  // namespace permnet
