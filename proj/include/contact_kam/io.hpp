#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace contact_kam {

/// Shortest decimal text that reads back to the same double.
std::string fmt_double(double v);

/// Strict decimal parse (optional exponent); throws on trailing garbage.
double parse_double(std::string_view s);

/// Ordered key-value sidecar, one "key = value" line per entry.
class KeyValueFile {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, double value);
  void set(std::string key, const std::vector<double>& values);
  void write(const std::filesystem::path& path) const;
  std::string str() const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace contact_kam
