#include "nlalign/keyvalue.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <sstream>

#include "nlalign/error.hpp"

namespace nlalign {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

double parse_real(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) throw Error(ErrorCode::Config, "empty value for " + what);
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw Error(ErrorCode::Config, "cannot parse '" + t + "' as a number for " + what);
  }
  return value;
}

KeyValueDoc KeyValueDoc::parse(const std::string& text) {
  KeyValueDoc doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": empty key");
    if (doc.values_.count(key)) {
      throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    doc.values_.emplace(std::move(key), std::move(value));
  }
  return doc;
}

const std::string& KeyValueDoc::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::Config, "missing required key '" + key + "'");
  return it->second;
}

double KeyValueDoc::get_double(const std::string& key) const { return parse_real(get(key), key); }

double KeyValueDoc::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KeyValueDoc::get_long(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double v = get_double(key);
  if (v != static_cast<double>(static_cast<long>(v))) {
    throw Error(ErrorCode::Config, "'" + key + "' must be an integer");
  }
  return static_cast<long>(v);
}

std::string KeyValueDoc::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

std::vector<double> KeyValueDoc::get_doubles(const std::string& key) const {
  std::string raw = get(key);
  std::replace(raw.begin(), raw.end(), ',', ' ');
  std::istringstream in(raw);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_real(token, key));
  return out;
}

std::vector<std::string> KeyValueDoc::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
  }
  return out;
}

}  // namespace nlalign
