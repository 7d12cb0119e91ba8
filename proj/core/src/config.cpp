#include "floatgnc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace floatgnc {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double(const std::string& key, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  double d = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw std::runtime_error("config: value of '" + key + "' is not a number: '" + v + "'");
  }
  return d;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Config Config::parse(std::string_view text) {
  Config c;
  size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++lineno;

    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: line " + std::to_string(lineno) + " has no '='");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config: line " + std::to_string(lineno) + " has an empty key");
    }
    c.set_raw(key, value);
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::serialize() const {
  std::ostringstream out;
  for (const auto& k : order_) out << k << " = " << values_.at(k) << "\n";
  return out.str();
}

void Config::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
  out << serialize();
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("config: missing key '" + key + "'");
  return it->second;
}

void Config::set_raw(const std::string& key, std::string value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    order_.push_back(key);
    values_.emplace(key, std::move(value));
  } else {
    it->second = std::move(value);
  }
}

double Config::get_double(const std::string& key) const { return parse_double(key, raw(key)); }
double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string& v = raw(key);
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  long long i = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw std::runtime_error("config: value of '" + key + "' is not an integer: '" + v + "'");
  }
  return i;
}
std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: value of '" + key + "' is not a bool: '" + v + "'");
}
bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::string Config::get_string(const std::string& key) const { return raw(key); }
std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key, int n) const {
  const std::string& v = raw(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string t = trim(item);
    if (t.empty()) throw std::runtime_error("config: empty element in list '" + key + "'");
    out.push_back(parse_double(key, t));
  }
  if (n >= 0 && static_cast<int>(out.size()) != n) {
    throw std::runtime_error("config: '" + key + "' expects " + std::to_string(n) +
                             " values, got " + std::to_string(out.size()));
  }
  return out;
}

void Config::set_double(const std::string& key, double value) { set_raw(key, format_double(value)); }
void Config::set_int(const std::string& key, std::int64_t value) { set_raw(key, std::to_string(value)); }
void Config::set_bool(const std::string& key, bool value) { set_raw(key, value ? "true" : "false"); }
void Config::set_string(const std::string& key, const std::string& value) { set_raw(key, value); }

void Config::set_doubles(const std::string& key, const std::vector<double>& values) {
  std::string joined;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ",";
    joined += format_double(values[i]);
  }
  set_raw(key, joined);
}

void Config::merge_from(const Config& other) {
  for (const auto& k : other.order_) set_raw(k, other.values_.at(k));
}

bool Config::operator==(const Config& other) const {
  return order_ == other.order_ && values_ == other.values_;
}

}  // namespace floatgnc
