#include "bridgec/profile.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace bridgec {

double ArcProfile::height_at(double x_um) const {
  const double r = radius_um;
  return std::sqrt(r * r - x_um * x_um) - (r - height_um);
}

double StepPlan::staircase_at(double x_um) const {
  const double ax = std::abs(x_um);
  for (const Step& s : steps) {
    if (ax >= s.x_inner_um && ax <= s.x_outer_um) return s.target_um;
  }
  return 0.0;
}

ArcProfile build_arc(double length_um, double height_um) {
  if (!(length_um > 0) || !std::isfinite(length_um))
    throw std::invalid_argument("build_arc: length must be positive");
  if (!(height_um > 0) || !std::isfinite(height_um) || !(height_um < length_um / 2))
    throw std::invalid_argument(
        "build_arc: unsupported geometry, height must satisfy 0 < H < L/2");
  ArcProfile p;
  p.length_um = length_um;
  p.height_um = height_um;
  // sagitta relation for a circle through (+/-L/2, 0) and (0, H)
  p.radius_um = length_um * length_um / (8.0 * height_um) + height_um / 2.0;
  return p;
}

StepPlan discretize(const ArcProfile& profile, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("discretize: n_steps must be >= 1");
  StepPlan plan;
  plan.n_steps = n_steps;
  plan.length_um = profile.length_um;
  plan.height_um = profile.height_um;
  plan.step_height_um = profile.height_um / n_steps;

  const double r = profile.radius_um;
  const double yc = r - profile.height_um;  // circle center depth below the chord
  // x where the arc crosses height k * step_height
  auto crossing = [&](int k) {
    if (k == 0) return profile.length_um / 2.0;
    if (k == n_steps) return 0.0;
    const double y = yc + static_cast<double>(k) * plan.step_height_um;
    return std::sqrt(r * r - y * y);
  };
  for (int k = 1; k <= n_steps; ++k) {
    Step s;
    s.band_index = k;
    s.x_inner_um = crossing(k);
    s.x_outer_um = crossing(k - 1);
    s.target_um = static_cast<double>(k) * plan.step_height_um;
    plan.steps.push_back(s);
  }
  plan.steps.back().target_um = profile.height_um;  // apex meets H exactly
  return plan;
}

StepCheck check_step_constraint(const StepPlan& plan, double metal_thickness_um) {
  if (!(metal_thickness_um > 0))
    throw std::invalid_argument("check_step_constraint: metal thickness must be positive");
  StepCheck c;
  c.step_height_um = plan.step_height_um;
  c.metal_thickness_um = metal_thickness_um;
  c.margin_um = metal_thickness_um - plan.step_height_um;
  c.pass = plan.step_height_um < metal_thickness_um;
  return c;
}

void export_profile_csv(std::ostream& out, const StepPlan& plan, double pitch_um) {
  if (!(pitch_um > 0)) throw std::invalid_argument("profile csv: pitch must be positive");
  out << "x_um,target_resist_um\n";
  const double half = plan.length_um / 2.0;
  const long n = std::lround(std::floor(plan.length_um / pitch_um));
  for (long i = 0; i <= n; ++i) {
    const double x = std::min(-half + static_cast<double>(i) * pitch_um, half);
    out << x << "," << plan.staircase_at(x) << "\n";
  }
}

void export_profile_svg(std::ostream& out, const ArcProfile& profile, const StepPlan& plan) {
  const double scale = 10.0;  // px per um
  const double half = plan.length_um / 2.0;
  const double w = plan.length_um * scale;
  const double h = profile.height_um * scale;
  const double pad = 10.0;
  auto px = [&](double x) { return pad + (x + half) * scale; };
  auto py = [&](double y) { return pad + h - y * scale; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 2 * pad << "\" height=\""
      << h + 2 * pad << "\">\n";

  out << "  <polyline fill=\"none\" stroke=\"#888\" stroke-width=\"1\" points=\"";
  const int arc_samples = 256;
  for (int i = 0; i <= arc_samples; ++i) {
    const double x = -half + plan.length_um * i / arc_samples;
    out << px(x) << "," << py(profile.height_at(x)) << " ";
  }
  out << "\"/>\n";

  out << "  <polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" points=\"";
  // walk the staircase left pier to right pier
  out << px(-half) << "," << py(0) << " ";
  for (auto it = plan.steps.begin(); it != plan.steps.end(); ++it) {
    out << px(-it->x_outer_um) << "," << py(it->target_um) << " ";
    out << px(-it->x_inner_um) << "," << py(it->target_um) << " ";
  }
  for (auto it = plan.steps.rbegin(); it != plan.steps.rend(); ++it) {
    out << px(it->x_inner_um) << "," << py(it->target_um) << " ";
    out << px(it->x_outer_um) << "," << py(it->target_um) << " ";
  }
  out << px(half) << "," << py(0) << " ";
  out << "\"/>\n</svg>\n";
}

}  // namespace bridgec
