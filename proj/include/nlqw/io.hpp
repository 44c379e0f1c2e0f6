#pragma once

#include <map>
#include <string>
#include <vector>

namespace nlqw {

// key = value text config; '#' starts a comment; keys are dotted lowercase.
// Unknown keys are rejected by the consumer via the consumed-tracking below.
struct ConfigMap {
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  std::map<std::string, Entry> kv;
  std::string source;

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_num(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  // throws listing every unconsumed key with its line number
  void reject_unknown() const;
};

ConfigMap parse_config(const std::string& path);
ConfigMap parse_config_text(const std::string& text, const std::string& source_name);

// CSV with header row, RFC 4180 quoting, '.' decimal, UTF-8
std::string csv_quote(const std::string& field);
std::string format_num(double v);  // fixed %.17g-style formatting, deterministic
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace nlqw
