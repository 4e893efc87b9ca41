#ifndef PNPBO_HARNESS_CONFIG_HPP
#define PNPBO_HARNESS_CONFIG_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnpbo::harness {

// Config file syntax error with 1-based line/column.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line, int column)
      : std::runtime_error(what + " at line " + std::to_string(line) + ", column " +
                           std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Flat sectioned key-value file:
//
//   [section]
//   key = value
//   # comment
//
// Keys are addressed as "section.key". Values stay strings until read.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  // Rejects keys outside the allowed set (exact names or "section.*").
  void validate_keys(const std::vector<std::string>& allowed) const;

  // FNV-1a over the canonical sorted "key=value" lines.
  std::uint64_t hash() const;
  std::string canonical() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::map<std::string, int> key_lines_;
};

}  // namespace pnpbo::harness

#endif
