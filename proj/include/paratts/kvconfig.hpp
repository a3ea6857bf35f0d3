#ifndef PARATTS_KVCONFIG_HPP_
#define PARATTS_KVCONFIG_HPP_

#include <map>
#include <set>
#include <string>

namespace paratts::kvconfig {

// Flat dotted-key config document: one `key = value` per line, '#' comments.
// Every lookup marks its key consumed; finish() rejects leftovers so typos
// never pass silently.
class KvConfig {
 public:
  static KvConfig from_file(const std::string& path);
  static KvConfig from_text(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  long get_long(const std::string& key, long fallback);
  int get_int(const std::string& key, int fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  uint64_t get_u64(const std::string& key, uint64_t fallback);

  std::string require_string(const std::string& key);

  // Throws ConfigError naming every key never consumed.
  void finish() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace paratts::kvconfig

#endif  // PARATTS_KVCONFIG_HPP_
