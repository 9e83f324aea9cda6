#pragma once

#include <iosfwd>
#include <vector>

namespace bridgec {

// Target bridge cross-section: a circular arc through (+/-L/2, 0) with apex
// height H at x = 0.
struct ArcProfile {
  double length_um = 0;  // chord length L
  double height_um = 0;  // sagitta H
  double radius_um = 0;

  // arc height above the substrate plane, valid for |x| <= L/2
  double height_at(double x_um) const;
};

// One discretization band. The band covers [x_inner, x_outer] and its mirror
// [-x_outer, -x_inner]; for the apex band x_inner is 0 and the two halves
// join into a single span.
struct Step {
  int band_index = 0;  // 1-based from the pier
  double x_inner_um = 0;
  double x_outer_um = 0;
  double target_um = 0;  // resist height of the plateau
};

struct StepPlan {
  std::vector<Step> steps;  // ordered pier to apex
  double step_height_um = 0;
  int n_steps = 0;
  double length_um = 0;
  double height_um = 0;

  // staircase height at position x, the plateau of the band containing x
  double staircase_at(double x_um) const;
};

struct StepCheck {
  bool pass = false;
  double margin_um = 0;  // metal thickness minus step height
  double step_height_um = 0;
  double metal_thickness_um = 0;
};

ArcProfile build_arc(double length_um, double height_um);

// Equal-height bands; band k's plateau is the arc height at its top edge, so
// the staircase touches the arc from below at band boundaries.
StepPlan discretize(const ArcProfile& profile, int n_steps);

// The step height must stay strictly below the deposited metal thickness or
// the film tears at the steps during liftoff.
StepCheck check_step_constraint(const StepPlan& plan, double metal_thickness_um);

// (x_um, target_resist_um) samples of the staircase across the chord.
void export_profile_csv(std::ostream& out, const StepPlan& plan, double pitch_um = 0.05);

// Staircase plus target arc as SVG polylines for visual inspection.
void export_profile_svg(std::ostream& out, const ArcProfile& profile, const StepPlan& plan);

}  // namespace bridgec
