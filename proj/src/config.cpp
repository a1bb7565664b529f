#include "sizesym/config.hpp"

#include <sstream>

#include "sizesym/corpus.hpp"
#include "sizesym/error.hpp"

namespace sizesym {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Settings Settings::parse(const std::string& text, const std::string& origin) {
  Settings s;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else {
      const auto hash = value.find(" #");
      if (hash != std::string::npos) value = trim(value.substr(0, hash));
    }
    const std::string full = section.empty() ? key : section + "." + key;
    if (s.values_.contains(full)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + full + "'");
    s.values_[full] = value;
  }
  return s;
}

Settings Settings::load(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError("cannot read config file '" + path + "': " + e.what());
  }
  return parse(text, path);
}

void Settings::merge(const Settings& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::optional<std::string> Settings::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Settings::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

int Settings::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const int out = std::stoi(*v, &used);
    if (used == v->size()) return out;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("'" + key + "' must be an integer, got '" + *v + "'");
}

std::uint64_t Settings::get_uint(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    if (!v->empty() && (*v)[0] != '-') {
      const auto out = std::stoull(*v, &used);
      if (used == v->size()) return out;
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError("'" + key + "' must be a non-negative integer, got '" + *v + "'");
}

double Settings::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used == v->size()) return out;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("'" + key + "' must be a number, got '" + *v + "'");
}

bool Settings::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("'" + key + "' must be true or false, got '" + *v + "'");
}

std::map<std::string, std::string> Settings::section(const std::string& name) const {
  std::map<std::string, std::string> out;
  const std::string prefix = name + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  }
  return out;
}

std::string Settings::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = \"" + v + "\"\n";
  return out;
}

}  // namespace sizesym
