#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bridgec/exposure.hpp"
#include "bridgec/geometry.hpp"
#include "bridgec/materials.hpp"

namespace bridgec {

struct BridgeSpec {
  std::string id;
  double origin_x_um = 0;
  double origin_y_um = 0;
  double axis_angle_deg = 0;  // bridge axis relative to +x
  double length_um = 0;
  double width_um = 0;
  double height_um = 0;
  int n_steps = 18;
};

struct CompileOptions {
  // pier power is scaled above the computed clear power so development
  // removes all resist at the feet
  double pier_margin = 1.10;
  // the arch top is kept below the unexposed resist surface to ease liftoff
  double apex_clearance_um = 1.0;
  // pier contact pads extend beyond each chord end
  double pier_extension_um = 4.0;
  double metal_thickness_um = 0.5;
};

using CalibrationSet = std::map<std::string, SubstrateCalibration>;

struct PlanPolygon {
  PolygonNm poly;  // canonical form
  std::string bridge_id;
  int band_index = 0;  // 0 = pier band
  std::string material;
  double area_um2 = 0;
};

// All polygons of a layer are exposed at one laser power.
struct PlanLayer {
  int layer_number = 0;
  double power_mw = 0;
  int band_index = 0;
  std::string material;
  double target_um = 0;  // resist height this layer aims at
  std::vector<PlanPolygon> polygons;
};

struct ExposurePlan {
  std::vector<PlanLayer> layers;  // ascending layer_number, unique
};

struct ClipFragment {
  PolygonNm poly;
  std::string material;
  double area_um2 = 0;  // exact area of the unsnapped piece
};

// Splits a band rectangle against the material map; fragments partition the
// band and each lies wholly in one material region (or the default).
// Fragments snapping to zero area are dropped and counted via *dropped.
std::vector<ClipFragment> clip_band(const PolygonNm& band_rect, const MaterialMap& map,
                                    int* dropped = nullptr);

// Compiles bridges into per-power layers: each step band is clipped against
// the material map and every fragment receives the inverse-model power for
// its band target on its material. Layer numbering is
// band_index * M + material_ordinal with M calibrated materials.
ExposurePlan compile(std::span<const BridgeSpec> bridges, const MaterialMap& map,
                     const CalibrationSet& cals, const CompileOptions& options,
                     std::vector<std::string>* warnings = nullptr);

BoundingBox plan_bounding_box(const ExposurePlan& plan);

// CSV "layer,power_mw", one row per layer.
void write_sidecar_csv(std::ostream& out, const ExposurePlan& plan);

// Deterministic serialization of the full plan.
std::string plan_to_json(const ExposurePlan& plan);

}  // namespace bridgec
