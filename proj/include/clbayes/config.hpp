#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace clbayes {

// Flat `key=value` configuration with `#` comments.  Keys are dot-prefixed
// by section (e.g. "chain.total").  Serialisation is canonical: keys sorted,
// numbers in shortest round-trip form, one pair per line.  A config saved
// and reloaded serialises to identical bytes.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text, const std::string& origin);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const;
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list; empty value gives an empty list.
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long long value);
  void set_u64(const std::string& key, std::uint64_t value);
  void set_bool(const std::string& key, bool value);

  std::string serialize() const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace clbayes
