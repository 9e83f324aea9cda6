#include "bridgec/layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "bridgec/profile.hpp"

namespace bridgec {

namespace {

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

// local band rectangles of one bridge: the pier pads plus one rectangle per
// step span (mirrored, apex merged across x = 0)
struct BandRect {
  int band_index = 0;
  double target_um = 0;
  double x0 = 0, x1 = 0;  // local x range
};

std::vector<BandRect> band_rects(const StepPlan& plan, double pier_extension_um) {
  std::vector<BandRect> out;
  const double half = plan.length_um / 2.0;
  if (pier_extension_um > 0) {
    out.push_back({0, 0.0, -half - pier_extension_um, -half});
    out.push_back({0, 0.0, half, half + pier_extension_um});
  }
  for (const Step& s : plan.steps) {
    if (s.x_inner_um <= 0.0) {
      out.push_back({s.band_index, s.target_um, -s.x_outer_um, s.x_outer_um});
    } else {
      out.push_back({s.band_index, s.target_um, -s.x_outer_um, -s.x_inner_um});
      out.push_back({s.band_index, s.target_um, s.x_inner_um, s.x_outer_um});
    }
  }
  return out;
}

std::int64_t quantize_target(double target_um) {
  return std::llround(target_um * 1e6);  // keyed at 1e-6 um
}

std::string format_power(double mw) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", mw);
  return buf;
}

}  // namespace

std::vector<ClipFragment> clip_band(const PolygonNm& band_rect, const MaterialMap& map,
                                    int* dropped) {
  std::vector<ClipFragment> out;
  if (dropped) *dropped = 0;
  if (band_rect.v.size() < 3 || twice_signed_area_nm2(band_rect) == 0) return out;

  std::vector<PolygonNm> region_polys;
  region_polys.reserve(map.regions.size());
  for (const MaterialRegion& r : map.regions) region_polys.push_back(r.polygon);

  for (const Fragment& f : partition_by_regions(band_rect, region_polys, dropped)) {
    ClipFragment cf;
    cf.poly = canonical(f.poly);
    cf.area_um2 = f.area_um2;
    cf.material =
        f.region_index >= 0 ? map.regions[f.region_index].material : map.default_material;
    out.push_back(std::move(cf));
  }
  return out;
}

ExposurePlan compile(std::span<const BridgeSpec> bridges, const MaterialMap& map,
                     const CalibrationSet& cals, const CompileOptions& options,
                     std::vector<std::string>* warnings) {
  map.validate();
  if (cals.empty()) throw std::invalid_argument("compile: no calibrations loaded");
  if (!(options.pier_margin >= 1.0))
    throw std::invalid_argument("compile: pier_margin must be >= 1");
  if (!(options.apex_clearance_um >= 0))
    throw std::invalid_argument("compile: apex_clearance must be >= 0");

  // one spin coat covers the wafer, so all calibrations must agree on z0
  const double z0 = cals.begin()->second.z0_um;
  std::map<std::string, int> ordinal;
  for (const auto& [tag, cal] : cals) {
    cal.validate();
    if (std::abs(cal.z0_um - z0) > 1e-9)
      throw std::invalid_argument("compile: calibrations disagree on z0 (material '" + tag +
                                  "')");
    const int n = static_cast<int>(ordinal.size());
    ordinal[tag] = n;
  }
  const int n_materials = static_cast<int>(cals.size());

  std::vector<BridgeSpec> sorted(bridges.begin(), bridges.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const BridgeSpec& a, const BridgeSpec& b) { return a.id < b.id; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i].id == sorted[i + 1].id)
      throw std::invalid_argument("compile: duplicate bridge id '" + sorted[i].id + "'");
  }

  int max_band = 0;
  for (const BridgeSpec& b : sorted) max_band = std::max(max_band, b.n_steps);

  struct LayerKey {
    int band;
    int material_ordinal;
    std::int64_t target;
    auto operator<=>(const LayerKey&) const = default;
  };
  std::map<LayerKey, std::size_t> layer_index;  // -> index into layers
  std::vector<PlanLayer> layers;
  std::set<int> used_numbers;
  int overflow_band = max_band + 1;

  for (const BridgeSpec& b : sorted) {
    if (b.id.empty()) throw std::invalid_argument("compile: bridge with empty id");
    if (b.n_steps < 1)
      throw std::invalid_argument("compile: bridge '" + b.id + "' needs n_steps >= 1");
    if (!(b.width_um > 0))
      throw std::invalid_argument("compile: bridge '" + b.id + "' needs positive width");
    if (!(b.height_um < z0))
      throw std::invalid_argument("compile: bridge '" + b.id +
                                  "' height must stay below the resist thickness z0");
    if (b.length_um < 20.0 || b.length_um > 200.0)
      warn(warnings, "bridge '" + b.id + "': length " + std::to_string(b.length_um) +
                         " um is outside the demonstrated 20-200 um envelope");
    if (b.width_um < 6.0 || b.width_um > 30.0)
      warn(warnings, "bridge '" + b.id + "': width " + std::to_string(b.width_um) +
                         " um is outside the demonstrated 6-30 um envelope");
    if (b.height_um > z0 - options.apex_clearance_um)
      warn(warnings, "bridge '" + b.id + "': apex clearance clamps the top of the arch");

    const ArcProfile arc = build_arc(b.length_um, b.height_um);
    const StepPlan plan = discretize(arc, b.n_steps);
    const Pose pose{b.origin_x_um, b.origin_y_um, b.axis_angle_deg};
    const double half_w = b.width_um / 2.0;

    for (const BandRect& band : band_rects(plan, options.pier_extension_um)) {
      const PolygonNm rect = local_rect_to_world(pose, band.x0, -half_w, band.x1, half_w);
      int dropped = 0;
      const std::vector<ClipFragment> fragments = clip_band(rect, map, &dropped);
      if (dropped > 0)
        warn(warnings, "bridge '" + b.id + "' band " + std::to_string(band.band_index) + ": " +
                           std::to_string(dropped) + " zero-area fragment(s) dropped");
      if (fragments.empty())
        warn(warnings, "bridge '" + b.id + "' band " + std::to_string(band.band_index) +
                           ": degenerate band rectangle dropped");
      for (const ClipFragment& frag : fragments) {
        const auto cal_it = cals.find(frag.material);
        if (cal_it == cals.end())
          throw std::runtime_error("missing calibration for material '" + frag.material + "'");

        const double target =
            std::max(0.0, std::min(band.target_um, z0 - options.apex_clearance_um));
        double power = inverse_power(cal_it->second, target);
        if (band.band_index == 0) power *= options.pier_margin;

        const LayerKey key{band.band_index, ordinal.at(frag.material), quantize_target(target)};
        auto it = layer_index.find(key);
        if (it == layer_index.end()) {
          PlanLayer layer;
          int number = key.band * n_materials + key.material_ordinal;
          while (used_numbers.count(number)) {
            number = overflow_band * n_materials + key.material_ordinal;
            ++overflow_band;
          }
          used_numbers.insert(number);
          layer.layer_number = number;
          layer.power_mw = power;
          layer.band_index = band.band_index;
          layer.material = frag.material;
          layer.target_um = target;
          layers.push_back(std::move(layer));
          it = layer_index.emplace(key, layers.size() - 1).first;
        }
        PlanPolygon pp;
        pp.poly = frag.poly;
        pp.bridge_id = b.id;
        pp.band_index = band.band_index;
        pp.material = frag.material;
        pp.area_um2 = frag.area_um2;
        layers[it->second].polygons.push_back(std::move(pp));
      }
    }
  }

  ExposurePlan out;
  out.layers = std::move(layers);
  std::sort(out.layers.begin(), out.layers.end(),
            [](const PlanLayer& a, const PlanLayer& b) { return a.layer_number < b.layer_number; });
  for (PlanLayer& layer : out.layers) {
    std::sort(layer.polygons.begin(), layer.polygons.end(),
              [](const PlanPolygon& a, const PlanPolygon& b) {
                if (a.bridge_id != b.bridge_id) return a.bridge_id < b.bridge_id;
                if (a.band_index != b.band_index) return a.band_index < b.band_index;
                return a.poly.v < b.poly.v;
              });
  }
  return out;
}

BoundingBox plan_bounding_box(const ExposurePlan& plan) {
  std::vector<PolygonNm> polys;
  for (const PlanLayer& layer : plan.layers)
    for (const PlanPolygon& p : layer.polygons) polys.push_back(p.poly);
  return bounding_box(polys);
}

void write_sidecar_csv(std::ostream& out, const ExposurePlan& plan) {
  out << "layer,power_mw\n";
  for (const PlanLayer& layer : plan.layers)
    out << layer.layer_number << "," << format_power(layer.power_mw) << "\n";
}

std::string plan_to_json(const ExposurePlan& plan) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const PlanLayer& layer : plan.layers) {
    nlohmann::json jl;
    jl["layer"] = layer.layer_number;
    jl["power_mw"] = layer.power_mw;
    jl["band"] = layer.band_index;
    jl["material"] = layer.material;
    jl["target_um"] = layer.target_um;
    jl["polygons"] = nlohmann::json::array();
    for (const PlanPolygon& p : layer.polygons) {
      nlohmann::json jp;
      jp["bridge"] = p.bridge_id;
      jp["band"] = p.band_index;
      jp["material"] = p.material;
      jp["area_um2"] = p.area_um2;
      nlohmann::json xy = nlohmann::json::array();
      for (const PointNm& v : p.poly.v) xy.push_back({v.x, v.y});
      jp["xy_nm"] = std::move(xy);
      jl["polygons"].push_back(std::move(jp));
    }
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2);
}

}  // namespace bridgec
