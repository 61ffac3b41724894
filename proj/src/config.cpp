#include "gibbslab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gibbslab/error.hpp"

namespace gibbs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::string where(const std::string& origin, int line, int column) {
  return origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": ";
}

std::optional<double> parse_number(const std::string& s) {
  std::string t = s;
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == '#' || raw[first] == ';') continue;
    const int col = int(first) + 1;
    if (raw[first] == '[') {
      const auto close = raw.find(']', first);
      if (close == std::string::npos)
        fail(ErrorCode::Format, where(origin, line, col) + "missing ']' in section header");
      if (!trim(raw.substr(close + 1)).empty() && trim(raw.substr(close + 1))[0] != '#')
        fail(ErrorCode::Format,
             where(origin, line, int(close) + 2) + "unexpected text after section header");
      const std::string name = trim(raw.substr(first + 1, close - first - 1));
      if (!valid_name(name))
        fail(ErrorCode::Format, where(origin, line, col + 1) + "invalid section name '" + name + "'");
      for (const auto& s : c.sections_)
        if (s.name == name)
          fail(ErrorCode::Format, where(origin, line, col) + "duplicate section [" + name + "]");
      c.sections_.push_back({name, line, {}});
      continue;
    }
    const auto eq = raw.find('=', first);
    if (eq == std::string::npos)
      fail(ErrorCode::Format, where(origin, line, col) + "expected 'key = value'");
    if (c.sections_.empty())
      fail(ErrorCode::Format, where(origin, line, col) + "entry outside of any section");
    const std::string key = trim(raw.substr(first, eq - first));
    if (!valid_name(key))
      fail(ErrorCode::Format, where(origin, line, col) + "invalid key '" + key + "'");
    std::string rest = raw.substr(eq + 1);
    // Trailing comments need whitespace before '#'.
    for (std::size_t i = 1; i < rest.size(); ++i)
      if (rest[i] == '#' && (rest[i - 1] == ' ' || rest[i - 1] == '\t')) {
        rest = rest.substr(0, i);
        break;
      }
    const auto vstart = raw.find_first_not_of(" \t", eq + 1);
    const int vcol = vstart == std::string::npos ? int(eq) + 2 : int(vstart) + 1;
    const std::string value = trim(rest);
    if (value.empty()) fail(ErrorCode::Format, where(origin, line, vcol) + "empty value for '" + key + "'");
    auto& sec = c.sections_.back();
    for (const auto& e : sec.entries)
      if (e.key == key)
        fail(ErrorCode::Format, where(origin, line, col) + "duplicate key '" + key + "' in [" +
                                    sec.name + "] (first at line " + std::to_string(e.line) + ")");
    sec.entries.push_back({key, value, line, vcol, col});
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

std::string Config::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    if (i) out += "\n";
    out += "[" + sections_[i].name + "]\n";
    for (const auto& e : sections_[i].entries) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

bool Config::operator==(const Config& other) const {
  if (sections_.size() != other.sections_.size()) return false;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const auto &a = sections_[i], &b = other.sections_[i];
    if (a.name != b.name || a.entries.size() != b.entries.size()) return false;
    for (std::size_t j = 0; j < a.entries.size(); ++j)
      if (a.entries[j].key != b.entries[j].key || a.entries[j].value != b.entries[j].value)
        return false;
  }
  return true;
}

void Config::validate(const ConfigSchema& schema) const {
  for (const auto& s : sections_) {
    auto it = schema.find(s.name);
    if (it == schema.end())
      fail(ErrorCode::Format, where(origin_, s.line, 2) + "unknown section [" + s.name + "]");
    for (const auto& e : s.entries)
      if (!it->second.count(e.key)) {
        fail(ErrorCode::Format,
             where(origin_, e.line, e.key_column) + "unknown key '" + e.key + "' in [" + s.name + "]");
      }
  }
}

bool Config::has_section(const std::string& section) const {
  return std::any_of(sections_.begin(), sections_.end(),
                     [&](const ConfigSection& s) { return s.name == section; });
}

const ConfigEntry* Config::find(const std::string& section, const std::string& key) const {
  for (const auto& s : sections_)
    if (s.name == section)
      for (const auto& e : s.entries)
        if (e.key == key) return &e;
  return nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto it = std::find_if(sections_.begin(), sections_.end(),
                         [&](const ConfigSection& s) { return s.name == section; });
  if (it == sections_.end()) {
    sections_.push_back({section, 0, {}});
    it = sections_.end() - 1;
  }
  for (auto& e : it->entries)
    if (e.key == key) {
      e.value = value;
      return;
    }
  it->entries.push_back({key, value, 0, 0, 0});
}

void Config::error_at(const ConfigEntry& e, const std::string& what) const {
  fail(ErrorCode::Format, where(origin_, e.line, e.column) + what);
}

const ConfigEntry& Config::need(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) fail(ErrorCode::Format, origin_ + ": missing required key '" + key + "' in [" + section + "]");
  return *e;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               std::optional<std::string> fallback) const {
  if (const auto* e = find(section, key)) return e->value;
  if (fallback) return *fallback;
  return need(section, key).value;
}

double Config::get_double(const std::string& section, const std::string& key,
                          std::optional<double> fallback) const {
  const auto* e = find(section, key);
  if (!e && fallback) return *fallback;
  const auto& entry = e ? *e : need(section, key);
  auto v = parse_number(entry.value);
  if (!v) error_at(entry, "'" + key + "' expects a number, got '" + entry.value + "'");
  return *v;
}

long long Config::get_int(const std::string& section, const std::string& key,
                          std::optional<long long> fallback) const {
  const auto* e = find(section, key);
  if (!e && fallback) return *fallback;
  const auto& entry = e ? *e : need(section, key);
  long long v = 0;
  const auto& s = entry.value;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    // Allow integral scientific notation such as 1e6.
    auto d = parse_number(s);
    if (!d || *d != std::floor(*d) || std::fabs(*d) > 9e15)
      error_at(entry, "'" + key + "' expects an integer, got '" + s + "'");
    v = static_cast<long long>(*d);
  }
  return v;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      std::optional<bool> fallback) const {
  const auto* e = find(section, key);
  if (!e && fallback) return *fallback;
  const auto& entry = e ? *e : need(section, key);
  if (entry.value == "true" || entry.value == "yes" || entry.value == "1") return true;
  if (entry.value == "false" || entry.value == "no" || entry.value == "0") return false;
  error_at(entry, "'" + key + "' expects true or false, got '" + entry.value + "'");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        std::optional<std::vector<double>> fallback) const {
  const auto* e = find(section, key);
  if (!e && fallback) return *fallback;
  const auto& entry = e ? *e : need(section, key);
  std::vector<double> out;
  for (const auto& item : split_list(entry.value)) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      auto a = parse_number(trim(item.substr(0, dots)));
      auto b = parse_number(trim(item.substr(dots + 2)));
      if (!a || !b || *a != std::floor(*a) || *b != std::floor(*b) || *b < *a || *b - *a > 1e6)
        error_at(entry, "bad range '" + item + "' in '" + key + "'");
      for (double x = *a; x <= *b; x += 1.0) out.push_back(x);
      continue;
    }
    auto v = parse_number(item);
    if (!v) error_at(entry, "'" + key + "' expects a list of numbers, got '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& section, const std::string& key,
                                  std::optional<std::vector<int>> fallback) const {
  const auto* e = find(section, key);
  if (!e && fallback) return *fallback;
  const auto& entry = e ? *e : need(section, key);
  std::vector<int> out;
  for (double d : get_doubles(section, key)) {
    if (d != std::floor(d) || std::fabs(d) > 1e9)
      error_at(entry, "'" + key + "' expects a list of integers");
    out.push_back(int(d));
  }
  return out;
}

}  // namespace gibbs
