#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bridgec/profile.hpp"

using namespace bridgec;

namespace {

// independent root find: x where the arc crosses a given height
double bisect_crossing(const ArcProfile& arc, double height) {
  double lo = 0.0, hi = arc.length_um / 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2.0;
    if (arc.height_at(mid) > height)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2.0;
}

}  // namespace

TEST_CASE("arc through the chord ends and apex") {
  const ArcProfile arc = build_arc(30.0, 3.0);
  CHECK(arc.radius_um == doctest::Approx(39.0).epsilon(1e-12));
  CHECK(arc.height_at(0.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(arc.height_at(15.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(arc.height_at(-15.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  // the defining circle, centered at (0, H - R), passes through (+/-L/2, 0)
  CHECK(std::hypot(15.0, arc.radius_um - 3.0) == doctest::Approx(arc.radius_um).epsilon(1e-12));
}

TEST_CASE("arc rejects unsupported geometry") {
  CHECK_THROWS_AS(build_arc(30.0, 15.0), std::invalid_argument);  // semicircle
  CHECK_THROWS_AS(build_arc(30.0, 16.0), std::invalid_argument);
  CHECK_THROWS_AS(build_arc(30.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_arc(0.0, 3.0), std::invalid_argument);
}

TEST_CASE("18-step discretization of the 30x3 bridge") {
  const ArcProfile arc = build_arc(30.0, 3.0);
  const StepPlan plan = discretize(arc, 18);
  CHECK(plan.step_height_um == doctest::Approx(3.0 / 18.0).epsilon(1e-12));
  REQUIRE(plan.steps.size() == 18);

  // outermost band edge agrees with an independent bisection on the arc
  const double x1 = bisect_crossing(arc, plan.step_height_um);
  CHECK(plan.steps.front().x_inner_um == doctest::Approx(x1).epsilon(1e-9));
  CHECK(plan.steps.front().x_outer_um == 15.0);
  CHECK(plan.steps.front().x_inner_um == doctest::Approx(14.593567837311834).epsilon(1e-12));

  // apex band reaches H and spans across x = 0
  CHECK(plan.steps.back().x_inner_um == 0.0);
  CHECK(plan.steps.back().target_um == 3.0);
}

TEST_CASE("single step covers the whole chord") {
  const StepPlan plan = discretize(build_arc(30.0, 3.0), 1);
  REQUIRE(plan.steps.size() == 1);
  CHECK(plan.steps[0].x_inner_um == 0.0);
  CHECK(plan.steps[0].x_outer_um == 15.0);
  CHECK(plan.steps[0].target_um == 3.0);
  CHECK(plan.staircase_at(-12.0) == 3.0);
}

TEST_CASE("bands tile the chord without gaps and mirror symmetrically") {
  for (const int n : {1, 2, 3, 5, 18, 40}) {
    const StepPlan plan = discretize(build_arc(30.0, 3.0), n);
    CHECK(plan.steps.front().x_outer_um == 15.0);
    CHECK(plan.steps.back().x_inner_um == 0.0);
    for (std::size_t k = 0; k + 1 < plan.steps.size(); ++k) {
      CHECK(plan.steps[k].x_inner_um ==
            doctest::Approx(plan.steps[k + 1].x_outer_um).epsilon(1e-12));
      CHECK(plan.steps[k].target_um < plan.steps[k + 1].target_um);
    }
    // symmetry of the staircase
    for (double x = 0.0; x <= 15.0; x += 0.37)
      CHECK(plan.staircase_at(x) == plan.staircase_at(-x));
  }
}

TEST_CASE("staircase under-approaches the arc within one step height") {
  const ArcProfile arc = build_arc(30.0, 3.0);
  for (const int n : {1, 2, 4, 8, 16, 32, 64}) {
    const StepPlan plan = discretize(arc, n);
    double worst = 0.0;
    for (double x = -14.999; x <= 14.999; x += 0.001) {
      const double dev = std::abs(plan.staircase_at(x) - arc.height_at(x));
      worst = std::max(worst, dev);
    }
    CHECK(worst <= 3.0 / n + 1e-9);
  }
}

TEST_CASE("step constraint against the metal thickness") {
  const StepPlan plan18 = discretize(build_arc(30.0, 3.0), 18);
  const StepCheck ok = check_step_constraint(plan18, 0.5);
  CHECK(ok.pass);
  CHECK(ok.margin_um == doctest::Approx(0.5 - 3.0 / 18.0).epsilon(1e-12));
  CHECK(ok.margin_um == doctest::Approx(0.333333).epsilon(1e-4));

  // the boundary is strict: a step equal to the metal thickness fails
  StepPlan boundary = plan18;
  boundary.step_height_um = 0.5;
  CHECK_FALSE(check_step_constraint(boundary, 0.5).pass);

  const StepPlan plan5 = discretize(build_arc(30.0, 3.0), 5);
  const StepCheck bad = check_step_constraint(plan5, 0.5);
  CHECK_FALSE(bad.pass);
  CHECK(bad.margin_um == doctest::Approx(-0.1).epsilon(1e-9));
}

TEST_CASE("profile exports") {
  const ArcProfile arc = build_arc(30.0, 3.0);
  const StepPlan plan = discretize(arc, 18);

  std::ostringstream csv;
  export_profile_csv(csv, plan, 0.05);
  const std::string text = csv.str();
  CHECK(text.rfind("x_um,target_resist_um\n", 0) == 0);
  std::size_t rows = 0;
  for (char ch : text)
    if (ch == '\n') ++rows;
  CHECK(rows == 602);  // header + 601 samples across 30 um at 0.05 um

  std::ostringstream svg;
  export_profile_svg(svg, arc, plan);
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("polyline") != std::string::npos);
}
