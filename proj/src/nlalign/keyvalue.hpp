#pragma once

#include <map>
#include <string>
#include <vector>

namespace nlalign {

/// Parsed `key = value` document. Blank lines and lines starting with '#'
/// are ignored; a trailing "# ..." after a value is a comment.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  /// Comma- or whitespace-separated list of reals.
  std::vector<double> get_doubles(const std::string& key) const;

  /// Keys not in `known` (used to reject typos).
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

double parse_real(const std::string& text, const std::string& what);

}  // namespace nlalign
