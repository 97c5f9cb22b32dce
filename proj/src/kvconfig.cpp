// SPDX-License-Identifier: Apache-2.0
#include "snn/kvconfig.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "snn/error.hpp"

namespace snn {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view text, std::string_view what) {
  const auto t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw InvalidArgument(std::string(what) + ": expected a number, got '" + t + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view text, std::string_view what) {
  const auto t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw InvalidArgument(std::string(what) + ": expected a non-negative integer, got '" + t +
                          "'");
  }
  return v;
}

KeyValues KeyValues::parse(std::string_view text, std::string_view origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw DataError(std::string(origin) + ":" + std::to_string(lineno) +
                      ": expected 'key = value'");
    }
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw DataError(std::string(origin) + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!kv.values_.emplace(key, value).second) {
      throw DataError(std::string(origin) + ":" + std::to_string(lineno) + ": duplicate key '" +
                      key + "'");
    }
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string KeyValues::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument(origin_ + ": missing key '" + key + "'");
  return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key) const {
  return parse_double(get_string(key), origin_ + ": " + key);
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::uint64_t KeyValues::get_uint(const std::string& key) const {
  return parse_uint(get_string(key), origin_ + ": " + key);
}

std::uint64_t KeyValues::get_uint(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_uint(key) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = get_string(key);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw InvalidArgument(origin_ + ": " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> KeyValues::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
  }
  return out;
}

}  // namespace snn
