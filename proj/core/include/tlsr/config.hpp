#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tlsr::harness {

/// Flat `key = value` settings. `#` starts a comment; blank lines are
/// ignored; later duplicates override earlier ones.
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text, const std::string& origin = "<string>");
  /// Throws UsageError if the file does not exist, DataError if malformed.
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated numbers; empty when absent.
  std::vector<double> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  /// Sorted `key = value` lines, parseable by parse().
  std::string dump() const;

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_ = "<string>";
};

}  // namespace tlsr::harness
