#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace rotstar::cli {

/// Malformed configuration; the message carries "<source>:<line>: ..." when
/// the problem comes from a file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "section.key" -> value store read from
///
///   [section]
///   key = value   # comment
///
/// Later assignments (flags) replace earlier ones (file).
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// Sets the value only when the key is still missing.
  void set_default(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& str(const std::string& key) const;
  double number(const std::string& key) const;
  long integer(const std::string& key) const;
  /// Comma-separated list of numbers.
  std::vector<double> numbers(const std::string& key) const;

  /// Nested object, one member per section.
  nlohmann::ordered_json to_json() const;
  static Config from_json(const nlohmann::ordered_json& j);

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Every key a config may carry.
const std::vector<std::string>& known_keys();

}  // namespace rotstar::cli
