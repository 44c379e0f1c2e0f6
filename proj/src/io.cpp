#include "nlqw/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlqw {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

bool ConfigMap::has(const std::string& key) const { return kv.count(key) > 0; }

std::string ConfigMap::get_str(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  it->second.consumed = true;
  return it->second.value;
}

double ConfigMap::get_num(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  it->second.consumed = true;
  size_t pos = 0;
  double v;
  try {
    v = std::stod(it->second.value, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(source + ":" + std::to_string(it->second.line) +
                             ": value of '" + key + "' is not a number");
  }
  if (pos != it->second.value.size())
    throw std::runtime_error(source + ":" + std::to_string(it->second.line) +
                             ": trailing characters in numeric value of '" + key + "'");
  return v;
}

long ConfigMap::get_int(const std::string& key, long fallback) const {
  double v = get_num(key, double(fallback));
  long r = long(v);
  if (double(r) != v)
    throw std::runtime_error(source + ": value of '" + key + "' is not an integer");
  return r;
}

void ConfigMap::reject_unknown() const {
  std::string msg;
  for (const auto& [key, entry] : kv) {
    if (!entry.consumed) {
      if (!msg.empty()) msg += "; ";
      msg += "unknown key '" + key + "' at " + source + ":" + std::to_string(entry.line);
    }
  }
  if (!msg.empty()) throw std::runtime_error(msg);
}

ConfigMap parse_config_text(const std::string& text, const std::string& source_name) {
  ConfigMap cm;
  cm.source = source_name;
  std::istringstream is(text);
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(source_name + ":" + std::to_string(ln) +
                               ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(source_name + ":" + std::to_string(ln) + ": empty key");
    if (cm.kv.count(key))
      throw std::runtime_error(source_name + ":" + std::to_string(ln) + ": duplicate key '" +
                               key + "'");
    cm.kv[key] = {value, ln, false};
  }
  return cm;
}

ConfigMap parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("parse_config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string csv_quote(const std::string& field) {
  bool need = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!need) return field;
  std::string out = "\"";
  for (char c : field) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  for (size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << csv_quote(header[i]);
  os << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("write_csv: row width mismatch in " + path);
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_quote(row[i]);
    os << '\n';
  }
  if (!os) throw std::runtime_error("write_csv: write failure on " + path);
}

}  // namespace nlqw
