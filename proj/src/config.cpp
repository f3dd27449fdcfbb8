#include "permnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace permnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_int(const std::string& s, long long& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text, const std::string& source) {
  ConfigMap cfg;
  cfg.source_ = source;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line) +
                        ": expected `key = value`");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(source + ":" + std::to_string(line) + ": empty key");
    }
    if (cfg.entries_.count(key) != 0) {
      throw ConfigError(source + ":" + std::to_string(line) +
                        ": duplicate key `" + key + "`");
    }
    cfg.entries_[key] = {value, line};
  }
  return cfg;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

const ConfigEntry* ConfigMap::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void ConfigMap::fail(const std::string& key, const std::string& msg) const {
  const auto* e = find(key);
  throw ConfigError(source_ + ":" + std::to_string(e ? e->line : 0) + ": `" +
                    key + "` " + msg);
}

bool ConfigMap::contains(const std::string& key) const {
  return find(key) != nullptr;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto* e = find(key);
  if (e == nullptr) return fallback;
  double v = 0.0;
  if (!parse_double(e->value, v)) fail(key, "expects a number, got `" + e->value + "`");
  return v;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
  const auto* e = find(key);
  if (e == nullptr) return fallback;
  long long v = 0;
  if (!parse_int(e->value, v)) fail(key, "expects an integer, got `" + e->value + "`");
  return v;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto* e = find(key);
  if (e == nullptr) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "on") return true;
  if (e->value == "false" || e->value == "0" || e->value == "off") return false;
  fail(key, "expects true/false, got `" + e->value + "`");
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto* e = find(key);
  return e == nullptr ? fallback : e->value;
}

std::vector<double> ConfigMap::get_doubles(
    const std::string& key, const std::vector<double>& fallback) const {
  const auto* e = find(key);
  if (e == nullptr) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(e->value)) {
    double v = 0.0;
    if (!parse_double(item, v)) fail(key, "has non-numeric item `" + item + "`");
    out.push_back(v);
  }
  return out;
}

std::vector<long long> ConfigMap::get_ints(
    const std::string& key, const std::vector<long long>& fallback) const {
  const auto* e = find(key);
  if (e == nullptr) return fallback;
  std::vector<long long> out;
  for (const auto& item : split_list(e->value)) {
    long long v = 0;
    if (!parse_int(item, v)) fail(key, "has non-integer item `" + item + "`");
    out.push_back(v);
  }
  return out;
}

void ConfigMap::reject_unknown(const std::vector<std::string>& known) const {
  const std::set<std::string> allowed(known.begin(), known.end());
  const ConfigEntry* first = nullptr;
  std::string first_key;
  for (const auto& [key, entry] : entries_) {
    if (allowed.count(key) == 0 && (first == nullptr || entry.line < first->line)) {
      first = &entry;
      first_key = key;
    }
  }
  if (first != nullptr) {
    throw ConfigError(source_ + ":" + std::to_string(first->line) +
                      ": unknown key `" + first_key + "`");
  }
}

std::string ConfigMap::canonical() const {
  std::string out;
  for (const auto& [key, entry] : entries_) {
    out += key + " = " + entry.value + "\n";
  }
  return out;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  entries_[key] = {value, 0};
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace permnet
