#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bridgec {

struct SeriesPoint {
  int n_bridges = 0;
  double resistance_ohm = 0;
};

struct QiPoint {
  int n_bridges = 0;
  double qi = 0;
};

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  bool zero_variance = false;  // all y equal; r_squared reported as 0
};

struct JunctionDelta {
  double mean_relative_change = 0;
  double dispersion = 0;  // population standard deviation over pairs
};

struct LossFit {
  double loss_per_bridge = 0;  // slope of 1/Qi vs N
  double base_loss = 0;        // intercept
  int points_used = 0;
};

// Ordinary least squares of resistance against bridge count. Series chains of
// uniform bridges should fall on a line; r_squared quantifies that.
LinearFit fit_series(std::span<const SeriesPoint> points);

// Mean and spread of (after - before) / before over paired junctions.
JunctionDelta junction_delta(std::span<const double> before_ohm,
                             std::span<const double> after_ohm);

// Fits 1/Qi = base_loss + loss_per_bridge * N over points with N >= n_min.
// The bridge-free resonator is dominated by parasitic-mode coupling, so it is
// excluded by default.
LossFit per_bridge_loss(std::span<const QiPoint> sweep, int n_min = 5);

// CSV ingestion; headers are fixed and '#' comments allowed.
std::vector<SeriesPoint> load_series_csv(const std::filesystem::path& path);
struct JunctionRow {
  std::string junction_id;
  double before_ohm = 0;
  double after_ohm = 0;
};
std::vector<JunctionRow> load_junction_csv(const std::filesystem::path& path);
std::vector<QiPoint> load_qi_csv(const std::filesystem::path& path);

}  // namespace bridgec
