// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace snn {

/// `key = value` lines; `#` starts a comment; blank lines ignored.
/// Duplicate keys are rejected.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, std::string_view origin = "config");
  static KeyValues load(const std::string& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, std::string>& entries() const { return values_; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Keys not in `known`; callers treat these as errors.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
};

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);
std::uint64_t parse_uint(std::string_view text, std::string_view what);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

}  // namespace snn
