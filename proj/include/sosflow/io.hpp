#pragma once

// CSV readers and writers. Every number is written with 17 significant digits
// so that files round-trip exactly.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sosflow/bcf.hpp"
#include "sosflow/record.hpp"

namespace sosflow {

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_profile_csv(std::ostream& os, const HeightProfile& h) {
  os << "x,h\n";
  for (int i = 0; i < h.size(); ++i)
    os << format_number(h.grid().x(i)) << ',' << format_number(h[i]) << '\n';
}

inline constexpr const char* kDiagnosticsHeader =
    "step,t,phi,mass,l2,min_slope,max_slope,tv_logslope,pos_mass,neg_mass,sing_pos,sing_neg,evi_viol";

inline void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& recs) {
  os << kDiagnosticsHeader << '\n';
  for (const auto& r : recs) {
    os << r.step;
    for (double v : {r.t, r.phi, r.mass, r.l2, r.min_slope, r.max_slope, r.tv_logslope, r.pos_mass,
                     r.neg_mass, r.sing_pos, r.sing_neg})
      os << ',' << format_number(v);
    os << ',';
    if (r.evi_viol) os << format_number(*r.evi_viol);
    os << '\n';
  }
}

inline void write_steps_csv(std::ostream& os, const StepTrajectory& traj) {
  const int n = traj.states.empty() ? 0 : traj.states.front().size();
  os << 't';
  for (int i = 0; i < n; ++i) os << ",x_" << i;
  os << '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << format_number(traj.times[k]);
    for (double x : traj.states[k].x) os << ',' << format_number(x);
    os << '\n';
  }
}

struct CompareRow {
  int n_steps = 0;
  double l2_error = 0.0;
};

inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "n_steps,L2_error\n";
  for (const auto& r : rows) os << r.n_steps << ',' << format_number(r.l2_error) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

inline std::vector<DiagnosticsRecord> read_diagnostics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || detail::strip_cr(line) != kDiagnosticsHeader)
    throw IoError("diagnostics header mismatch");
  std::vector<DiagnosticsRecord> recs;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 13) throw IoError("line " + std::to_string(lineno) + ": expected 13 columns");
    DiagnosticsRecord r;
    r.step = static_cast<int>(detail::parse_double(c[0], lineno));
    double* fields[] = {&r.t,         &r.phi,       &r.mass,        &r.l2,
                        &r.min_slope, &r.max_slope, &r.tv_logslope, &r.pos_mass,
                        &r.neg_mass,  &r.sing_pos,  &r.sing_neg};
    for (int k = 0; k < 11; ++k) *fields[k] = detail::parse_double(c[k + 1], lineno);
    if (!c[12].empty()) r.evi_viol = detail::parse_double(c[12], lineno);
    recs.push_back(r);
  }
  return recs;
}

/// Reads `x,h` pairs (header line optional) describing one period.
inline std::vector<std::pair<double, double>> read_two_column_csv(std::istream& is) {
  std::vector<std::pair<double, double>> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 2) throw IoError("line " + std::to_string(lineno) + ": expected 2 columns");
    if (lineno == 1 && !c[0].empty() && (std::isalpha(static_cast<unsigned char>(c[0][0])) != 0))
      continue;
    pts.emplace_back(detail::parse_double(c[0], lineno), detail::parse_double(c[1], lineno));
  }
  return pts;
}

/// Resamples samples (x_k, h_k) of one period onto the grid by piecewise
/// linear interpolation of the periodically extended data (h(x + L) = h(x) + 1).
inline HeightProfile resample_profile(const std::vector<std::pair<double, double>>& pts,
                                      const GridSpec& grid) {
  if (pts.size() < 2) throw IoError("initial data needs at least 2 points");
  std::vector<std::pair<double, double>> p(pts);
  std::sort(p.begin(), p.end());
  const double length = grid.length;
  for (std::size_t k = 0; k + 1 < p.size(); ++k)
    if (!(p[k + 1].first > p[k].first) || !(p[k + 1].second > p[k].second))
      throw NonMonotone("initial data must be strictly increasing");
  if (p.front().first < 0.0 || !(p.back().first < length))
    throw IoError("initial data x must lie in [0, L)");
  if (!(p.front().second + 1.0 > p.back().second))
    throw NonMonotone("initial data must rise by less than 1 over one period");
  // Extended knots: last point shifted back one period, then the data, then
  // the first point shifted forward.
  std::vector<std::pair<double, double>> ext;
  ext.emplace_back(p.back().first - length, p.back().second - 1.0);
  ext.insert(ext.end(), p.begin(), p.end());
  ext.emplace_back(p.front().first + length, p.front().second + 1.0);
  std::vector<double> h(grid.n);
  std::size_t k = 0;
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    while (ext[k + 1].first < x) ++k;
    const auto& [xa, ha] = ext[k];
    const auto& [xb, hb] = ext[k + 1];
    h[i] = ha + (x - xa) / (xb - xa) * (hb - ha);
  }
  return HeightProfile(grid, std::move(h));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace sosflow
