#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rotstar::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool known(const std::string& key) {
  const auto& k = known_keys();
  return std::find(k.begin(), k.end(), key) != k.end();
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "run.command",       "run.output_dir",        "run.seed",        "eos.gamma",
      "entropy.rule",      "rotation.rule",         "grid.nr",         "grid.extent",
      "ball.radius",       "variational.p",         "variational.radii", "tolerances.tol",
      "tolerances.grad_tol", "tolerances.max_iters", "inverse.density", "inverse.mode",
      "lane_emden.n",      "verify.dir",
  };
  return keys;
}

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  std::string section, line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' outside a section");
    if (key.empty()) fail("missing key");
    if (value.empty()) fail("missing value for '" + key + "'");
    const std::string full = section + "." + key;
    if (!known(full)) fail("unknown key '" + full + "'");
    c.values_[full] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ":0: cannot open config file");
  return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

void Config::set_default(const std::string& key, const std::string& value) {
  if (!has(key)) set(key, value);
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required setting '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const {
  const std::string& v = str(key);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("'" + key + "' is not a number: " + v);
  return out;
}

long Config::integer(const std::string& key) const {
  const std::string& v = str(key);
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("'" + key + "' is not an integer: " + v);
  return out;
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw ConfigError("'" + key + "' is not a number list: " + str(key));
    out.push_back(v);
  }
  return out;
}

nlohmann::ordered_json Config::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return j;
}

Config Config::from_json(const nlohmann::ordered_json& j) {
  Config c;
  if (!j.is_object()) throw ConfigError("embedded config is not an object");
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ConfigError("embedded config section '" + section + "' is not an object");
    for (const auto& [key, value] : body.items()) {
      if (!value.is_string()) throw ConfigError("embedded config value '" + section + "." + key + "' is not a string");
      c.set(section + "." + key, value.get<std::string>());
    }
  }
  return c;
}

}  // namespace rotstar::cli
