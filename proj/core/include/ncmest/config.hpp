#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncmest {

// Raised on malformed or out-of-schema config input; carries a line/key
// diagnostic in what().
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat sectioned key-value file:
//   [section]
//   key = value        # comment
// Values are strings; typed getters parse on access. Unknown keys are caught
// by check_schema so a typo fails before any work starts.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& section, const std::string& key,
                            const std::vector<int>& fallback) const;
  std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  // Throws ConfigError naming the first key not present in the allowed set.
  // Entries are "section.key".
  void check_schema(const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }
  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::map<std::string, int> lines_;  // "section.key" -> line number
};

}  // namespace ncmest
