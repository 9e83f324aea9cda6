#include "bridgec/exposure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bridgec {

namespace {

constexpr double kPowerFloor = 1e-12;  // P - p0 below this counts as no light

// unclamped model and its partial derivatives
double model(double power, double alpha, double p0, double pc, double z0) {
  return z0 + std::log(pc / (power - p0)) / alpha;
}

struct Params {
  double alpha, p0, pc;
};

bool feasible(const Params& p, double min_power) {
  return p.alpha > 0 && p.pc > 0 && p.p0 >= 0 && min_power - p.p0 > kPowerFloor;
}

// Solves the 3x3 system A x = b in place; returns false when singular.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return true;
}

}  // namespace

void SubstrateCalibration::validate() const {
  if (material.empty()) throw std::invalid_argument("calibration: empty material tag");
  if (!(z0_um > 0) || !std::isfinite(z0_um))
    throw std::invalid_argument("calibration: z0 must be positive");
  if (!(alpha_per_um > 0) || !std::isfinite(alpha_per_um))
    throw std::invalid_argument("calibration: alpha must be positive");
  if (!(p_clear_mw > 0) || !std::isfinite(p_clear_mw))
    throw std::invalid_argument("calibration: p_clear must be positive");
  if (!(p0_mw >= 0) || !std::isfinite(p0_mw))
    throw std::invalid_argument("calibration: p0 must be non-negative");
}

double forward_thickness(const SubstrateCalibration& cal, double power_mw) {
  cal.validate();
  if (!std::isfinite(power_mw) || power_mw <= 0)
    throw std::invalid_argument("forward_thickness: power must be positive and finite");
  const double excess = power_mw - cal.p0_mw;
  if (excess <= kPowerFloor) return cal.z0_um;  // no light reaches the resist
  const double z = model(power_mw, cal.alpha_per_um, cal.p0_mw, cal.p_clear_mw, cal.z0_um);
  return std::clamp(z, 0.0, cal.z0_um);
}

double inverse_power(const SubstrateCalibration& cal, double target_um) {
  cal.validate();
  if (!std::isfinite(target_um) || target_um < 0 || target_um > cal.z0_um)
    throw std::domain_error("inverse_power: target residual outside [0, z0]");
  return cal.p0_mw + cal.p_clear_mw * std::exp(cal.alpha_per_um * (cal.z0_um - target_um));
}

FitReport fit_calibration(std::span<const DoseSample> samples, const std::string& material,
                          double z0_um, const FitOptions& options) {
  if (!(z0_um > 0) || !std::isfinite(z0_um))
    throw std::invalid_argument("fit_calibration: z0 must be positive");

  // clamped points carry only one-sided information; drop them from the cost
  std::vector<DoseSample> pts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const DoseSample& s = samples[i];
    if (!std::isfinite(s.power_mw) || s.power_mw <= 0)
      throw std::invalid_argument("fit_calibration: sample " + std::to_string(i) +
                                  " has non-positive power");
    if (!std::isfinite(s.residual_um) || s.residual_um < 0 || s.residual_um > z0_um)
      throw std::invalid_argument("fit_calibration: sample " + std::to_string(i) +
                                  " residual outside [0, z0]");
    if (s.residual_um > 0 && s.residual_um < z0_um) pts.push_back(s);
  }

  double distinct_lo = std::numeric_limits<double>::infinity();
  double distinct_hi = -std::numeric_limits<double>::infinity();
  for (const DoseSample& s : pts) {
    distinct_lo = std::min(distinct_lo, s.residual_um);
    distinct_hi = std::max(distinct_hi, s.residual_um);
  }
  if (pts.size() < 4 || !(distinct_hi > distinct_lo))
    throw std::invalid_argument(
        "insufficient data: need at least 4 unclamped samples spanning two distinct "
        "residual thicknesses");

  double min_power = std::numeric_limits<double>::infinity();
  for (const DoseSample& s : pts) min_power = std::min(min_power, s.power_mw);

  Params p{1.0, 0.9 * min_power, 0.5 * (min_power - 0.9 * min_power)};

  auto cost_of = [&](const Params& q) {
    double c = 0;
    for (const DoseSample& s : pts) {
      const double r = model(s.power_mw, q.alpha, q.p0, q.pc, z0_um) - s.residual_um;
      c += r * r;
    }
    return c;
  };

  double cost = cost_of(p);
  double lambda = 1e-3;
  bool converged = cost < 1e-30;
  int iter = 0;

  while (iter < options.max_iterations && !converged) {
    ++iter;
    // residuals and Jacobian of the unclamped model
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (const DoseSample& s : pts) {
      const double excess = s.power_mw - p.p0;
      const double r = model(s.power_mw, p.alpha, p.p0, p.pc, z0_um) - s.residual_um;
      const std::array<double, 3> j = {
          -std::log(p.pc / excess) / (p.alpha * p.alpha),  // d/dalpha
          1.0 / (p.alpha * excess),                        // d/dp0
          1.0 / (p.alpha * p.pc),                          // d/dp_clear
      };
      for (int a = 0; a < 3; ++a) {
        jtr[a] += j[a] * r;
        for (int b = 0; b < 3; ++b) jtj[a][b] += j[a] * j[b];
      }
    }

    std::array<std::array<double, 3>, 3> damped = jtj;
    for (int a = 0; a < 3; ++a) damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
    std::array<double, 3> step{};
    std::array<double, 3> rhs = {-jtr[0], -jtr[1], -jtr[2]};
    if (!solve3(damped, rhs, step)) {
      lambda *= 10;
      if (lambda > 1e12) break;
      continue;
    }

    const Params next{p.alpha + step[0], p.p0 + step[1], p.pc + step[2]};
    if (!feasible(next, min_power)) {
      lambda *= 10;
      if (lambda > 1e12) break;
      continue;
    }
    const double next_cost = cost_of(next);
    if (next_cost < cost) {
      const std::array<double, 3> cur = {p.alpha, p.p0, p.pc};
      double rel_step = 0;
      for (int a = 0; a < 3; ++a) {
        const double ref = std::max(std::abs(cur[a]), 1e-12);
        rel_step = std::max(rel_step, std::abs(step[a]) / ref);
      }
      const double rel_decrease = (cost - next_cost) / std::max(cost, 1e-300);
      p = next;
      cost = next_cost;
      lambda = std::max(lambda * 0.1, 1e-12);
      if (rel_decrease < options.cost_tolerance || rel_step < options.step_tolerance ||
          cost < 1e-30)
        converged = true;
    } else {
      lambda *= 10;
      if (lambda > 1e12) break;
    }
  }

  FitReport rep;
  rep.calibration = SubstrateCalibration{material, z0_um, p.alpha, p.p0, p.pc};
  rep.rms_um = std::sqrt(cost / static_cast<double>(pts.size()));
  rep.iterations = iter;
  rep.converged = converged;
  return rep;
}

std::vector<DoseSample> load_dose_csv(std::istream& in) {
  std::vector<DoseSample> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      std::string squashed;
      for (char ch : line)
        if (ch != ' ') squashed.push_back(ch);
      if (squashed != "power_mw,residual_um")
        throw std::runtime_error("dose csv line " + std::to_string(line_no) +
                                 ": expected header power_mw,residual_um");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b))
      throw std::runtime_error("dose csv line " + std::to_string(line_no) + ": expected 2 fields");
    DoseSample s;
    try {
      s.power_mw = std::stod(a);
      s.residual_um = std::stod(b);
    } catch (const std::exception&) {
      throw std::runtime_error("dose csv line " + std::to_string(line_no) + ": bad number");
    }
    if (!std::isfinite(s.power_mw) || s.power_mw <= 0)
      throw std::runtime_error("dose csv line " + std::to_string(line_no) +
                               ": power must be positive");
    if (!std::isfinite(s.residual_um) || s.residual_um < 0)
      throw std::runtime_error("dose csv line " + std::to_string(line_no) +
                               ": residual must be non-negative");
    out.push_back(s);
  }
  if (!header_seen) throw std::runtime_error("dose csv: missing header power_mw,residual_um");
  return out;
}

std::vector<DoseSample> load_dose_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dose csv: " + path.string());
  return load_dose_csv(in);
}

void save_calibration(const std::filesystem::path& path, const FitReport& report) {
  report.calibration.validate();
  nlohmann::json j;
  j["material"] = report.calibration.material;
  j["z0_um"] = report.calibration.z0_um;
  j["alpha_per_um"] = report.calibration.alpha_per_um;
  j["p0_mw"] = report.calibration.p0_mw;
  j["p_clear_mw"] = report.calibration.p_clear_mw;
  j["rms_um"] = report.rms_um;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write calibration file: " + path.string());
  out << j.dump(2) << "\n";
}

SubstrateCalibration load_calibration(const std::filesystem::path& path, double* rms_um) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("calibration file " + path.string() + ": " + e.what());
  }
  SubstrateCalibration cal;
  try {
    cal.material = j.at("material").get<std::string>();
    cal.z0_um = j.at("z0_um").get<double>();
    cal.alpha_per_um = j.at("alpha_per_um").get<double>();
    cal.p0_mw = j.at("p0_mw").get<double>();
    cal.p_clear_mw = j.at("p_clear_mw").get<double>();
    if (rms_um) *rms_um = j.value("rms_um", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("calibration file " + path.string() + ": " + e.what());
  }
  cal.validate();
  return cal;
}

}  // namespace bridgec
