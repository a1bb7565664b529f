#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sizesym {

/// Flat `section.key -> value` settings read from a TOML-like text file:
///   # comment
///   [section]
///   key = value        (value may be double-quoted)
/// Keys before the first section header have no prefix.
class Settings {
 public:
  Settings() = default;
  explicit Settings(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  static Settings parse(const std::string& text, const std::string& origin = "config");
  static Settings load(const std::string& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  /// Later values win.
  void merge(const Settings& other);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Entries under `section.` with the prefix removed.
  std::map<std::string, std::string> section(const std::string& name) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Canonical text form, sorted by key; parse(to_text()) round-trips.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace sizesym
