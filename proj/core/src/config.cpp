#include "ncmest/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ncmest {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
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

}  // namespace

KvConfig KvConfig::parse_string(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  cfg.origin_ = origin;
  std::stringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value, got '" +
                        line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key '" + key +
                        "' appears before any [section]");
    cfg.sections_[section][key] = value;
    cfg.lines_[section + "." + key] = lineno;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

bool KvConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

void KvConfig::set(const std::string& section, const std::string& key,
                   const std::string& value) {
  sections_[section][key] = value;
}

std::string KvConfig::get_string(const std::string& section, const std::string& key,
                                 const std::string& fallback) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double KvConfig::get_double(const std::string& section, const std::string& key,
                            double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(origin_ + ": key " + section + "." + key + ": bad number '" + v + "'");
  return x;
}

int KvConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  const double x = get_double(section, key, 0.0);
  return static_cast<int>(x);
}

std::uint64_t KvConfig::get_u64(const std::string& section, const std::string& key,
                                std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(origin_ + ": key " + section + "." + key + ": bad integer '" + v + "'");
  return x;
}

bool KvConfig::get_bool(const std::string& section, const std::string& key,
                        bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_string(section, key, "");
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(origin_ + ": key " + section + "." + key + ": bad boolean '" + v + "'");
}

std::vector<double> KvConfig::get_doubles(const std::string& section, const std::string& key,
                                          const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(get_string(section, key, ""))) {
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0')
      throw ConfigError(origin_ + ": key " + section + "." + key + ": bad list item '" + item +
                        "'");
    out.push_back(x);
  }
  return out;
}

std::vector<int> KvConfig::get_ints(const std::string& section, const std::string& key,
                                    const std::vector<int>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<int> out;
  for (const double x : get_doubles(section, key, {})) out.push_back(static_cast<int>(x));
  return out;
}

std::vector<std::string> KvConfig::get_strings(const std::string& section,
                                               const std::string& key,
                                               const std::vector<std::string>& fallback) const {
  if (!has(section, key)) return fallback;
  return split_list(get_string(section, key, ""));
}

void KvConfig::check_schema(const std::vector<std::string>& allowed) const {
  for (const auto& [section, kv] : sections_) {
    for (const auto& [key, value] : kv) {
      (void)value;
      const std::string full = section + "." + key;
      if (std::find(allowed.begin(), allowed.end(), full) == allowed.end()) {
        const auto it = lines_.find(full);
        const std::string where =
            it == lines_.end() ? origin_ : origin_ + ":" + std::to_string(it->second);
        throw ConfigError(where + ": unknown key '" + full + "'");
      }
    }
  }
}

}  // namespace ncmest
