#include "bridgec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bridgec {

namespace {

LinearFit ols(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  LinearFit f;
  f.zero_variance = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double sxx_c = sxx - sx * sx / n;
  const double sxy_c = sxy - sx * sy / n;
  const double syy_c = syy - sy * sy / n;
  if (!(sxx_c > 0)) throw std::invalid_argument("fit: x values must not all coincide");
  if (f.zero_variance || syy_c <= 0) {
    // flat data: a zero-slope line through the mean, r^2 reported as 0
    f.zero_variance = true;
    f.r_squared = 0.0;
    f.slope = 0.0;
    f.intercept = sy / n;
  } else {
    f.slope = sxy_c / sxx_c;
    f.intercept = (sy - f.slope * sx) / n;
    f.r_squared = (sxy_c * sxy_c) / (sxx_c * syy_c);
  }
  return f;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

// strips comments and whitespace; returns false for blank lines
bool clean_line(std::string& line) {
  const auto hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
    line.pop_back();
  return !line.empty();
}

void check_header(const std::string& line, const std::string& expected,
                  const std::filesystem::path& path) {
  std::string squashed;
  for (char ch : line)
    if (ch != ' ') squashed.push_back(ch);
  if (squashed != expected)
    throw std::runtime_error(path.string() + ": expected header " + expected);
}

double parse_num(const std::string& s, const std::filesystem::path& path, std::size_t line_no) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                             ": bad number '" + s + "'");
  }
}

}  // namespace

LinearFit fit_series(std::span<const SeriesPoint> points) {
  if (points.size() < 3)
    throw std::invalid_argument("insufficient data: series fit needs at least 3 points");
  std::vector<double> x, y;
  for (const SeriesPoint& p : points) {
    if (p.n_bridges < 0) throw std::invalid_argument("series fit: negative bridge count");
    if (!(p.resistance_ohm >= 0) || !std::isfinite(p.resistance_ohm))
      throw std::invalid_argument("series fit: resistance must be non-negative");
    x.push_back(static_cast<double>(p.n_bridges));
    y.push_back(p.resistance_ohm);
  }
  return ols(x, y);
}

JunctionDelta junction_delta(std::span<const double> before_ohm,
                             std::span<const double> after_ohm) {
  if (before_ohm.size() != after_ohm.size())
    throw std::invalid_argument("junction_delta: before/after length mismatch");
  if (before_ohm.empty()) throw std::invalid_argument("junction_delta: no pairs");
  std::vector<double> rel(before_ohm.size());
  for (std::size_t i = 0; i < before_ohm.size(); ++i) {
    if (!(before_ohm[i] > 0) || !(after_ohm[i] > 0))
      throw std::invalid_argument("junction_delta: resistances must be positive (pair " +
                                  std::to_string(i) + ")");
    rel[i] = (after_ohm[i] - before_ohm[i]) / before_ohm[i];
  }
  JunctionDelta d;
  for (const double r : rel) d.mean_relative_change += r;
  d.mean_relative_change /= static_cast<double>(rel.size());
  double var = 0;
  for (const double r : rel) {
    const double dev = r - d.mean_relative_change;
    var += dev * dev;
  }
  d.dispersion = std::sqrt(var / static_cast<double>(rel.size()));
  return d;
}

LossFit per_bridge_loss(std::span<const QiPoint> sweep, int n_min) {
  std::vector<double> x, y;
  std::set<int> distinct;
  for (const QiPoint& p : sweep) {
    if (!(p.qi > 0)) throw std::invalid_argument("per_bridge_loss: Qi must be positive");
    if (p.n_bridges < n_min) continue;
    x.push_back(static_cast<double>(p.n_bridges));
    y.push_back(1.0 / p.qi);
    distinct.insert(p.n_bridges);
  }
  if (distinct.size() < 3)
    throw std::invalid_argument(
        "insufficient data: loss fit needs at least 3 distinct bridge counts above n_min");
  const LinearFit f = ols(x, y);
  LossFit out;
  out.loss_per_bridge = f.slope;
  out.base_loss = f.intercept;
  out.points_used = static_cast<int>(x.size());
  return out;
}

std::vector<SeriesPoint> load_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path.string());
  std::vector<SeriesPoint> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  int prev_n = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!clean_line(line)) continue;
    if (!header) {
      check_header(line, "n_bridges,resistance_ohm", path);
      header = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                               ": expected 2 fields");
    SeriesPoint p;
    p.n_bridges = static_cast<int>(parse_num(fields[0], path, line_no));
    p.resistance_ohm = parse_num(fields[1], path, line_no);
    if (p.n_bridges <= prev_n)
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                               ": bridge counts must be strictly increasing");
    prev_n = p.n_bridges;
    out.push_back(p);
  }
  if (!header) throw std::runtime_error(path.string() + ": missing header");
  return out;
}

std::vector<JunctionRow> load_junction_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path.string());
  std::vector<JunctionRow> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!clean_line(line)) continue;
    if (!header) {
      check_header(line, "junction_id,r_before_ohm,r_after_ohm", path);
      header = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                               ": expected 3 fields");
    JunctionRow r;
    r.junction_id = fields[0];
    r.before_ohm = parse_num(fields[1], path, line_no);
    r.after_ohm = parse_num(fields[2], path, line_no);
    out.push_back(std::move(r));
  }
  if (!header) throw std::runtime_error(path.string() + ": missing header");
  return out;
}

std::vector<QiPoint> load_qi_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path.string());
  std::vector<QiPoint> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!clean_line(line)) continue;
    if (!header) {
      check_header(line, "n_bridges,qi_low_power", path);
      header = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                               ": expected 2 fields");
    QiPoint p;
    p.n_bridges = static_cast<int>(parse_num(fields[0], path, line_no));
    p.qi = parse_num(fields[1], path, line_no);
    out.push_back(p);
  }
  if (!header) throw std::runtime_error(path.string() + ": missing header");
  return out;
}

}  // namespace bridgec
