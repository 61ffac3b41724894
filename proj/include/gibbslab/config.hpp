#pragma once

// Run configuration: INI-style sections of key = value lines, parsed
// strictly against a schema. Dotted section names ([ldp.mc]) act as nested
// sections. Every entry remembers its line and column for error messages.
//
//   # comment
//   [space]
//   kind = circle
//   resolution = 256

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gibbs {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  int column = 0;  // of the value
  int key_column = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;
};

/// Allowed keys per section.
using ConfigSchema = std::map<std::string, std::set<std::string>>;

class Config {
 public:
  /// Throws Error(Format) with "origin:line:col: message".
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  /// Canonical text: sections and keys in file order, one space around '='.
  std::string serialize() const;
  /// Sections and entries compared by name, key and value only.
  bool operator==(const Config& other) const;

  /// Unknown sections or keys throw Error(Format) at their position.
  void validate(const ConfigSchema& schema) const;

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;
  const ConfigEntry* find(const std::string& section, const std::string& key) const;
  /// Sets (or appends) a value; used for command-line and environment
  /// overrides.
  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string get_string(const std::string& section, const std::string& key,
                         std::optional<std::string> fallback = std::nullopt) const;
  double get_double(const std::string& section, const std::string& key,
                    std::optional<double> fallback = std::nullopt) const;
  long long get_int(const std::string& section, const std::string& key,
                    std::optional<long long> fallback = std::nullopt) const;
  bool get_bool(const std::string& section, const std::string& key,
                std::optional<bool> fallback = std::nullopt) const;
  /// Comma-separated numbers; "a..b" expands to the integers a..b.
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::optional<std::vector<double>> fallback = std::nullopt) const;
  std::vector<int> get_ints(const std::string& section, const std::string& key,
                            std::optional<std::vector<int>> fallback = std::nullopt) const;

  const std::vector<ConfigSection>& sections() const { return sections_; }
  const std::string& origin() const { return origin_; }

 private:
  [[noreturn]] void error_at(const ConfigEntry& e, const std::string& what) const;
  const ConfigEntry& need(const std::string& section, const std::string& key) const;

  std::string origin_ = "<config>";
  std::vector<ConfigSection> sections_;
};

}  // namespace gibbs
