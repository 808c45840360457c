#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "fpk/error.hpp"

namespace fpk {

/// Shortest round-trip decimal form: every emitted double parses back to
/// the same bits, and identical runs emit identical bytes.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

enum class ReportFormat { Table, KeyValue };

inline const char* to_string(ReportFormat f) {
  return f == ReportFormat::Table ? "table" : "keyvalue";
}

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "table") return ReportFormat::Table;
  if (s == "keyvalue") return ReportFormat::KeyValue;
  throw ConfigError("format must be 'table' or 'keyvalue', got '" + s + "'");
}

/// Ordered list of dot-namespaced keys with string values. KeyValue renders
/// one `key = value` line per entry; Table pads the keys into a column.
class Report {
 public:
  void add(const std::string& key, const std::string& value) {
    rows_.emplace_back(key, value);
  }
  void add(const std::string& key, const char* value) {
    rows_.emplace_back(key, std::string(value));
  }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, bool value) {
    add(key, value ? std::string("true") : std::string("false"));
  }
  void add(const std::string& key, std::size_t value) {
    add(key, std::to_string(value));
  }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }

  const std::vector<std::pair<std::string, std::string>>& rows() const {
    return rows_;
  }

  std::string render(ReportFormat fmt) const {
    std::string out;
    if (fmt == ReportFormat::KeyValue) {
      for (const auto& [k, v] : rows_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
      }
      return out;
    }
    std::size_t width = 0;
    for (const auto& [k, v] : rows_) width = std::max(width, k.size());
    for (const auto& [k, v] : rows_) {
      out += k;
      out.append(width - k.size() + 2, ' ');
      out += v;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

}  // namespace fpk
