#include "clbayes/config.hpp"

#include <sstream>

#include "clbayes/csv.hpp"
#include "clbayes/errors.hpp"

namespace clbayes {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  std::size_t b = s.find_last_not_of(" \t");
  return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin, line_no, "expected key=value");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ParseError(origin, line_no, "empty key");
    if (config.entries_.count(key)) throw ParseError(origin, line_no, "duplicate key '" + key + "'");
    config.entries_[key] = value;
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  return parse(read_text_file(path), path);
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::vector<std::string> KeyValueConfig::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw InvalidInput("missing config key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  return parse_double(get_string(key), "config key '" + key + "'");
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key) const {
  return parse_int(get_string(key), "config key '" + key + "'");
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key) const {
  const std::string value = get_string(key);
  long long v = parse_int(value, "config key '" + key + "'");
  if (v < 0) throw InvalidInput("config key '" + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key) const {
  const std::string value = get_string(key);
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw InvalidInput("config key '" + key + "' must be a boolean (0/1/true/false)");
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
  const std::string value = get_string(key);
  std::vector<std::string> items;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      items.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  current = trim(current);
  if (!current.empty() || !items.empty()) items.push_back(current);
  for (const auto& item : items) {
    if (item.empty()) throw InvalidInput("config key '" + key + "' has an empty list item");
  }
  return items;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw InvalidInput("config: empty key");
  entries_[key] = value;
}

void KeyValueConfig::set_double(const std::string& key, double value) {
  set(key, format_double(value));
}

void KeyValueConfig::set_int(const std::string& key, long long value) {
  set(key, std::to_string(value));
}

void KeyValueConfig::set_u64(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void KeyValueConfig::set_bool(const std::string& key, bool value) { set(key, value ? "1" : "0"); }

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out.push_back('=');
    out += v;
    out.push_back('\n');
  }
  return out;
}

void KeyValueConfig::save(const std::string& path) const { write_text_file(path, serialize()); }

}  // namespace clbayes
