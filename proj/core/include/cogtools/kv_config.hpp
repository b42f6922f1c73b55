#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace cogtools {

// Flat key=value config file: one pair per line, '#' comments, blank lines
// ignored, whitespace around keys and values trimmed. Throws ConfigError on
// malformed lines (naming the line number) or duplicate keys.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(const std::string& text);
  static KvConfig load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;  // throws on non-numeric
  std::optional<double> get_double(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;  // true/false/1/0/yes/no

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cogtools
