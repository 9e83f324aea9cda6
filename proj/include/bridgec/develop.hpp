#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bridgec/geometry.hpp"
#include "bridgec/layout.hpp"

namespace bridgec {

struct GridOptions {
  double pitch_um = 0.05;
  double margin_um = 1.0;  // border of unexposed resist kept around the plan
  // explicit bounds override the plan bounding box when set
  std::optional<BoundingBox> bounds;
};

// Simulated residual resist heights on a raster grid. Cell (ix, iy) is
// centered at origin + (i + 0.5) * pitch.
struct ResistField {
  Nm origin_x_nm = 0;
  Nm origin_y_nm = 0;
  Nm pitch_nm = 50;
  int nx = 0;
  int ny = 0;
  double z0_um = 0;
  std::vector<double> height_um;     // row-major, iy * nx + ix
  std::vector<int> material_index;   // into materials
  std::vector<std::string> materials;

  double at(int ix, int iy) const { return height_um[static_cast<std::size_t>(iy) * nx + ix]; }
  PointNm cell_center(int ix, int iy) const;
  // nearest cell containing the point; false when outside the grid
  bool locate(PointNm p, int& ix, int& iy) const;
};

struct DrcOptions {
  double metal_thickness_um = 0.5;
  double clearance_min_um = 1.0;
  // negative means per-bridge default of half the step height
  double deviation_max_um = -1.0;
  double pier_extension_um = 4.0;
};

struct BridgeDrcResult {
  std::string bridge_id;
  bool pier_cleared = false;
  double worst_pier_residual_um = 0;
  double max_step_um = 0;
  double max_step_x_um = 0;
  double max_step_y_um = 0;
  double apex_clearance_um = 0;
  double profile_deviation_um = 0;
  double deviation_limit_um = 0;
  bool pass = false;
};

struct DrcReport {
  std::vector<BridgeDrcResult> bridges;
  std::vector<std::string> warnings;
  bool pass = true;
};

// Rasterizes the plan into a power map (overlapping layers resolve to the
// maximum power) and develops it pointwise through the exposure model of the
// material under each cell.
ResistField simulate(const ExposurePlan& plan, const MaterialMap& map,
                     const CalibrationSet& cals, const GridOptions& grid = {});

// Four checks per bridge: piers fully cleared, worst adjacent-cell step
// inside the footprint below the metal thickness, apex clearance, and
// staircase-vs-arc deviation at band midpoints.
DrcReport run_drc(const ResistField& field, std::span<const BridgeSpec> bridges,
                  const DrcOptions& options = {});

void export_field_csv(std::ostream& out, const ResistField& field);
// 8-bit PGM, black = bare substrate, white = full resist thickness
void export_field_pgm(std::ostream& out, const ResistField& field);

std::string drc_report_to_json(const DrcReport& report);

}  // namespace bridgec
