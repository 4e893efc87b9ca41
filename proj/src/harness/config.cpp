#include "pnpbo/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace pnpbo::harness {

namespace {

std::string trim(const std::string& s) {
  std::size_t first = s.find_first_not_of(" \t\r");
  std::size_t last = s.find_last_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'", 0, 0);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']' || stripped.size() < 3) {
        throw ConfigError("malformed section header", line_no, 1);
      }
      section = trim(stripped.substr(1, stripped.size() - 2));
      if (section.empty()) {
        throw ConfigError("empty section name", line_no, 2);
      }
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value'", line_no,
                        static_cast<int>(line.find(stripped[0])) + 1);
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("empty key", line_no, 1);
    }
    if (section.empty()) {
      throw ConfigError("key outside any section", line_no, 1);
    }
    const std::string full = section + "." + key;
    if (cfg.entries_.count(full) != 0) {
      throw ConfigError("duplicate key '" + full + "'", line_no, 1);
    }
    cfg.entries_[full] = value;
    cfg.key_lines_[full] = line_no;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError("missing required key '" + key + "'", 0, 0);
  }
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string raw = get(key);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(raw, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != raw.size() || raw.empty()) {
    auto it = key_lines_.find(key);
    throw ConfigError("key '" + key + "' is not a number: '" + raw + "'",
                      it == key_lines_.end() ? 0 : it->second, 1);
  }
  return out;
}

double Config::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
  const std::string raw = get(key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(raw, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != raw.size() || raw.empty()) {
    auto it = key_lines_.find(key);
    throw ConfigError("key '" + key + "' is not an integer: '" + raw + "'",
                      it == key_lines_.end() ? 0 : it->second, 1);
  }
  return out;
}

long long Config::get_int_or(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string raw = get(key);
  std::transform(raw.begin(), raw.end(), raw.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  auto it = key_lines_.find(key);
  throw ConfigError("key '" + key + "' is not a boolean: '" + raw + "'",
                    it == key_lines_.end() ? 0 : it->second, 1);
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const std::string raw = get(key);
  std::vector<double> out;
  std::istringstream in(raw);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) {
      auto it = key_lines_.find(key);
      throw ConfigError("list key '" + key + "' has a non-numeric item '" + t + "'",
                        it == key_lines_.end() ? 0 : it->second, 1);
    }
    out.push_back(v);
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

void Config::validate_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : entries_) {
    bool ok = false;
    for (const auto& pattern : allowed) {
      if (pattern == key) {
        ok = true;
        break;
      }
      if (pattern.size() > 2 && pattern.substr(pattern.size() - 2) == ".*" &&
          key.rfind(pattern.substr(0, pattern.size() - 1), 0) == 0) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      auto it = key_lines_.find(key);
      throw ConfigError("unknown key '" + key + "'",
                        it == key_lines_.end() ? 0 : it->second, 1);
    }
  }
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

std::uint64_t Config::hash() const {
  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : canonical()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pnpbo::harness
