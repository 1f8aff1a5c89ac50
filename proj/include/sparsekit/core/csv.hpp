#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sparsekit/core/types.hpp"

namespace sparsekit {

// Shortest round-trip decimal; locale-independent.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  for (int prec = 1; prec < 17; ++prec) {
    char tmp[32];
    std::snprintf(tmp, sizeof tmp, "%.*g", prec, v);
    if (std::strtod(tmp, nullptr) == v) return tmp;
  }
  return buf;
}

inline void write_signal_csv(std::ostream& os, const CVec& x) {
  os << "index,re,im\n";
  for (Eigen::Index i = 0; i < x.size(); ++i)
    os << i << ',' << format_double(x[i].real()) << ',' << format_double(x[i].imag()) << '\n';
}

inline CVec read_signal_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), errc::invalid_argument, "signal csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "index,re,im", errc::invalid_argument, "signal csv: header must be index,re,im");
  std::vector<cplx> vals;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    require(std::getline(ss, a, ',') && std::getline(ss, b, ',') && std::getline(ss, c), errc::invalid_argument,
            "signal csv: malformed row '" + line + "'");
    require(std::stoul(a) == vals.size(), errc::invalid_argument, "signal csv: indices must be 0..n-1 in order");
    vals.emplace_back(std::stod(b), std::stod(c));
  }
  CVec x(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) x[static_cast<Eigen::Index>(i)] = vals[i];
  check_signal(x, "signal csv");
  return x;
}

// Minimal table writer: header first, fields formatted with format_double.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : cols_(std::move(columns)) {}

  CsvTable& row(const std::vector<std::string>& fields) {
    require(fields.size() == cols_.size(), errc::internal, "CsvTable: row width mismatch");
    rows_.push_back(fields);
    return *this;
  }

  const std::vector<std::string>& columns() const { return cols_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string str() const {
    std::ostringstream os;
    write_line(os, cols_);
    for (const auto& r : rows_) write_line(os, r);
    return os.str();
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << f[i];
    os << '\n';
  }
  std::vector<std::string> cols_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string fmt(double v) { return format_double(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(long v) { return std::to_string(v); }

}  // namespace sparsekit
