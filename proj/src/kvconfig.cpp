#include "paratts/kvconfig.hpp"

#include <fstream>
#include <sstream>

#include "paratts/errors.hpp"

namespace paratts::kvconfig {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KvConfig KvConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

KvConfig KvConfig::from_text(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw ParseError("config: duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string KvConfig::require_string(const std::string& key) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("config: missing required key '" + key + "'");
  return it->second;
}

long KvConfig::get_long(const std::string& key, long fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' is not an integer: " +
                     it->second);
  }
}

int KvConfig::get_int(const std::string& key, int fallback) {
  return static_cast<int>(get_long(key, fallback));
}

uint64_t KvConfig::get_u64(const std::string& key, uint64_t fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' is not an unsigned integer: " +
                     it->second);
  }
}

double KvConfig::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' is not a number: " +
                     it->second);
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("config: key '" + key + "' is not a boolean: " + v);
}

void KvConfig::finish() const {
  std::string unknown;
  for (const auto& [key, _] : values_) {
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("config: unknown keys: " + unknown);
}

}  // namespace paratts::kvconfig
