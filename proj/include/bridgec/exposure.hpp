#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bridgec {

// One dose-test measurement: applied laser power vs residual resist left
// after development.
struct DoseSample {
  double power_mw = 0;
  double residual_um = 0;
};

// Exposure model for one substrate material. Residual thickness follows
//
//   z(P) = clamp(z0 + (1/alpha) * ln(p_clear / (P - p0)), 0, z0)
//
// with the dwell time folded into p_clear (the lithography system scans at a
// fixed dwell, so dose and power are proportional).
struct SubstrateCalibration {
  std::string material;
  double z0_um = 0;       // initial resist thickness
  double alpha_per_um = 0;  // absorption coefficient
  double p0_mw = 0;       // offset between applied power and power at the surface
  double p_clear_mw = 0;  // dose-to-clear expressed as critical power

  void validate() const;  // throws std::invalid_argument
};

struct FitReport {
  SubstrateCalibration calibration;
  double rms_um = 0;
  int iterations = 0;
  bool converged = false;
};

struct FitOptions {
  int max_iterations = 200;
  double cost_tolerance = 1e-10;  // relative cost decrease
  double step_tolerance = 1e-8;   // relative parameter step
};

// Residual resist thickness for an applied power, clamped to [0, z0].
double forward_thickness(const SubstrateCalibration& cal, double power_mw);

// Power required to leave exactly target_um of resist; exact inverse of the
// unclamped branch. target outside [0, z0] throws std::domain_error.
double inverse_power(const SubstrateCalibration& cal, double target_um);

// Damped Gauss-Newton fit of (alpha, p0, p_clear); z0 is supplied from
// profilometry. Samples clamped at exactly 0 or z0 are excluded from the
// cost. Optimizer divergence yields converged=false, not an exception.
FitReport fit_calibration(std::span<const DoseSample> samples, const std::string& material,
                          double z0_um, const FitOptions& options = {});

// CSV with header "power_mw,residual_um"; '#' starts a comment line.
std::vector<DoseSample> load_dose_csv(std::istream& in);
std::vector<DoseSample> load_dose_csv(const std::filesystem::path& path);

void save_calibration(const std::filesystem::path& path, const FitReport& report);
SubstrateCalibration load_calibration(const std::filesystem::path& path, double* rms_um = nullptr);

}  // namespace bridgec
