#include "bridgec/develop.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "bridgec/profile.hpp"

namespace bridgec {

namespace {

// cell centers live on the half-pitch lattice; doubling all coordinates keeps
// the point-in-polygon tests exact for any integer pitch
PolygonNm doubled(const PolygonNm& poly) {
  PolygonNm out;
  out.v.reserve(poly.v.size());
  for (const PointNm& p : poly.v) out.v.push_back(PointNm{2 * p.x, 2 * p.y});
  return out;
}

struct CellRange {
  int ix0, ix1, iy0, iy1;  // inclusive
};

CellRange cells_overlapping(const ResistField& f, const BoundingBox& bb) {
  auto lo = [&](Nm v, Nm origin) {
    const double t = static_cast<double>(v - origin) / static_cast<double>(f.pitch_nm) - 0.5;
    return static_cast<int>(std::floor(t));
  };
  auto hi = [&](Nm v, Nm origin) {
    const double t = static_cast<double>(v - origin) / static_cast<double>(f.pitch_nm) - 0.5;
    return static_cast<int>(std::ceil(t));
  };
  CellRange r;
  r.ix0 = std::max(0, lo(bb.min_x, f.origin_x_nm));
  r.ix1 = std::min(f.nx - 1, hi(bb.max_x, f.origin_x_nm));
  r.iy0 = std::max(0, lo(bb.min_y, f.origin_y_nm));
  r.iy1 = std::min(f.ny - 1, hi(bb.max_y, f.origin_y_nm));
  return r;
}

double shared_z0(const CalibrationSet& cals) {
  if (cals.empty()) throw std::invalid_argument("simulate: no calibrations loaded");
  const double z0 = cals.begin()->second.z0_um;
  for (const auto& [tag, cal] : cals) {
    if (std::abs(cal.z0_um - z0) > 1e-9)
      throw std::invalid_argument("simulate: calibrations disagree on z0 (material '" + tag +
                                  "')");
  }
  return z0;
}

}  // namespace

PointNm ResistField::cell_center(int ix, int iy) const {
  return PointNm{origin_x_nm + pitch_nm * ix + pitch_nm / 2,
                 origin_y_nm + pitch_nm * iy + pitch_nm / 2};
}

bool ResistField::locate(PointNm p, int& ix, int& iy) const {
  if (p.x < origin_x_nm || p.y < origin_y_nm) return false;
  ix = static_cast<int>((p.x - origin_x_nm) / pitch_nm);
  iy = static_cast<int>((p.y - origin_y_nm) / pitch_nm);
  return ix >= 0 && ix < nx && iy >= 0 && iy < ny;
}

ResistField simulate(const ExposurePlan& plan, const MaterialMap& map,
                     const CalibrationSet& cals, const GridOptions& grid) {
  if (!(grid.pitch_um > 0)) throw std::invalid_argument("simulate: grid pitch must be positive");
  const Nm pitch_nm = um_to_nm(grid.pitch_um);
  if (pitch_nm < 1) throw std::invalid_argument("simulate: grid pitch below 1 nm");
  map.validate();
  const double z0 = shared_z0(cals);
  for (const PlanLayer& layer : plan.layers) {
    if (!(layer.power_mw > 0))
      throw std::invalid_argument("simulate: plan layer " + std::to_string(layer.layer_number) +
                                  " has non-positive power");
  }

  BoundingBox bb;
  if (grid.bounds) {
    bb = *grid.bounds;
  } else if (!plan.layers.empty()) {
    bb = plan_bounding_box(plan);
  } else {
    bb = BoundingBox{-1000, -1000, 1000, 1000};
  }
  const Nm margin = um_to_nm(std::max(grid.margin_um, 0.0));

  ResistField f;
  f.pitch_nm = pitch_nm;
  f.z0_um = z0;
  // origin on the pitch lattice keeps runs with identical inputs identical
  auto floor_div = [](Nm a, Nm b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  f.origin_x_nm = floor_div(bb.min_x - margin, pitch_nm) * pitch_nm;
  f.origin_y_nm = floor_div(bb.min_y - margin, pitch_nm) * pitch_nm;
  f.nx = static_cast<int>((bb.max_x + margin - f.origin_x_nm) / pitch_nm) + 1;
  f.ny = static_cast<int>((bb.max_y + margin - f.origin_y_nm) / pitch_nm) + 1;
  if (static_cast<long long>(f.nx) * f.ny > 200'000'000LL)
    throw std::invalid_argument("simulate: grid would exceed 2e8 cells, coarsen the pitch");

  const std::size_t n_cells = static_cast<std::size_t>(f.nx) * f.ny;
  std::vector<double> power(n_cells, 0.0);

  // paint the maximum covering power per cell
  for (const PlanLayer& layer : plan.layers) {
    for (const PlanPolygon& pp : layer.polygons) {
      const PolygonNm poly2 = doubled(pp.poly);
      const CellRange r = cells_overlapping(f, bounding_box(pp.poly));
      for (int iy = r.iy0; iy <= r.iy1; ++iy) {
        for (int ix = r.ix0; ix <= r.ix1; ++ix) {
          const PointNm c2{2 * f.origin_x_nm + (2 * ix + 1) * pitch_nm,
                           2 * f.origin_y_nm + (2 * iy + 1) * pitch_nm};
          if (!contains_point(poly2, c2)) continue;
          double& slot = power[static_cast<std::size_t>(iy) * f.nx + ix];
          slot = std::max(slot, layer.power_mw);
        }
      }
    }
  }

  // resolve materials, then develop each cell through its own calibration
  std::map<std::string, int> mat_index;
  mat_index[map.default_material] = 0;
  f.materials.push_back(map.default_material);
  for (const MaterialRegion& r : map.regions) {
    if (!mat_index.count(r.material)) {
      mat_index[r.material] = static_cast<int>(f.materials.size());
      f.materials.push_back(r.material);
    }
  }
  std::vector<PolygonNm> regions2;
  regions2.reserve(map.regions.size());
  for (const MaterialRegion& r : map.regions) regions2.push_back(doubled(r.polygon));

  f.material_index.assign(n_cells, 0);
  f.height_um.assign(n_cells, z0);
  std::vector<const SubstrateCalibration*> cal_of(f.materials.size(), nullptr);
  for (std::size_t m = 0; m < f.materials.size(); ++m) {
    const auto it = cals.find(f.materials[m]);
    if (it != cals.end()) cal_of[m] = &it->second;
  }

  for (int iy = 0; iy < f.ny; ++iy) {
    for (int ix = 0; ix < f.nx; ++ix) {
      const std::size_t idx = static_cast<std::size_t>(iy) * f.nx + ix;
      const PointNm c2{2 * f.origin_x_nm + (2 * ix + 1) * pitch_nm,
                       2 * f.origin_y_nm + (2 * iy + 1) * pitch_nm};
      int mat = 0;
      for (int r = static_cast<int>(regions2.size()) - 1; r >= 0; --r) {
        if (contains_point(regions2[r], c2)) {
          mat = mat_index.at(map.regions[r].material);
          break;
        }
      }
      f.material_index[idx] = mat;
      const double p = power[idx];
      if (p > 0) {
        const SubstrateCalibration* cal = cal_of[mat];
        if (!cal)
          throw std::runtime_error("simulate: cell material lacking calibration: '" +
                                   f.materials[mat] + "'");
        f.height_um[idx] = forward_thickness(*cal, p);
      }
    }
  }
  return f;
}

DrcReport run_drc(const ResistField& field, std::span<const BridgeSpec> bridges,
                  const DrcOptions& options) {
  DrcReport report;
  if (bridges.empty()) {
    report.warnings.push_back("no bridges to check; design-rule check passes vacuously");
    return report;
  }
  const double pitch_um = nm_to_um(field.pitch_nm);

  for (const BridgeSpec& b : bridges) {
    const ArcProfile arc = build_arc(b.length_um, b.height_um);
    const StepPlan plan = discretize(arc, b.n_steps);
    const Pose pose{b.origin_x_um, b.origin_y_um, b.axis_angle_deg};
    const double half_w = b.width_um / 2.0;
    const double half_l = b.length_um / 2.0;
    const double ext = options.pier_extension_um;

    double smallest_band = plan.length_um;
    for (const Step& s : plan.steps)
      smallest_band = std::min(smallest_band, s.x_outer_um - s.x_inner_um);
    if (pitch_um > smallest_band / 4.0)
      report.warnings.push_back("bridge '" + b.id + "': grid pitch " + std::to_string(pitch_um) +
                                " um is coarser than a quarter of the smallest band (" +
                                std::to_string(smallest_band) + " um)");

    const PolygonNm footprint =
        local_rect_to_world(pose, -half_l - ext, -half_w, half_l + ext, half_w);
    const BoundingBox fb = bounding_box(footprint);
    if (fb.min_x < field.origin_x_nm || fb.min_y < field.origin_y_nm ||
        fb.max_x > field.origin_x_nm + static_cast<Nm>(field.nx) * field.pitch_nm ||
        fb.max_y > field.origin_y_nm + static_cast<Nm>(field.ny) * field.pitch_nm)
      throw std::invalid_argument("run_drc: bridge '" + b.id + "' footprint outside the field");

    BridgeDrcResult res;
    res.bridge_id = b.id;
    res.deviation_limit_um =
        options.deviation_max_um >= 0 ? options.deviation_max_um : plan.step_height_um / 2.0;

    // collect footprint cells
    const PolygonNm foot2 = doubled(footprint);
    const CellRange r = cells_overlapping(field, fb);
    const int w = r.ix1 - r.ix0 + 1, h = r.iy1 - r.iy0 + 1;
    std::vector<char> mask(static_cast<std::size_t>(w) * h, 0);
    double max_height = 0;
    for (int iy = r.iy0; iy <= r.iy1; ++iy) {
      for (int ix = r.ix0; ix <= r.ix1; ++ix) {
        const PointNm c2{2 * field.origin_x_nm + (2 * ix + 1) * field.pitch_nm,
                         2 * field.origin_y_nm + (2 * iy + 1) * field.pitch_nm};
        if (!contains_point(foot2, c2)) continue;
        mask[static_cast<std::size_t>(iy - r.iy0) * w + (ix - r.ix0)] = 1;
        max_height = std::max(max_height, field.at(ix, iy));
      }
    }
    res.apex_clearance_um = field.z0_um - max_height;

    // piers must develop to bare metal
    res.worst_pier_residual_um = 0;
    for (const double sgn : {-1.0, 1.0}) {
      const PolygonNm pier = local_rect_to_world(pose, sgn * half_l, -half_w,
                                                 sgn * (half_l + ext), half_w);
      const PolygonNm pier2 = doubled(pier);
      const CellRange pr = cells_overlapping(field, bounding_box(pier));
      for (int iy = pr.iy0; iy <= pr.iy1; ++iy) {
        for (int ix = pr.ix0; ix <= pr.ix1; ++ix) {
          const PointNm c2{2 * field.origin_x_nm + (2 * ix + 1) * field.pitch_nm,
                           2 * field.origin_y_nm + (2 * iy + 1) * field.pitch_nm};
          if (!contains_point(pier2, c2)) continue;
          res.worst_pier_residual_um = std::max(res.worst_pier_residual_um, field.at(ix, iy));
        }
      }
    }
    res.pier_cleared = res.worst_pier_residual_um <= 1e-9;

    // worst height jump between adjacent cells, both inside the footprint
    res.max_step_um = 0;
    for (int iy = r.iy0; iy <= r.iy1; ++iy) {
      for (int ix = r.ix0; ix <= r.ix1; ++ix) {
        if (!mask[static_cast<std::size_t>(iy - r.iy0) * w + (ix - r.ix0)]) continue;
        const double h0 = field.at(ix, iy);
        const int nbors[2][2] = {{ix + 1, iy}, {ix, iy + 1}};
        for (const auto& nb : nbors) {
          if (nb[0] > r.ix1 || nb[1] > r.iy1) continue;
          if (!mask[static_cast<std::size_t>(nb[1] - r.iy0) * w + (nb[0] - r.ix0)]) continue;
          const double jump = std::abs(field.at(nb[0], nb[1]) - h0);
          if (jump > res.max_step_um) {
            res.max_step_um = jump;
            const PointNm a = field.cell_center(ix, iy);
            const PointNm c = field.cell_center(nb[0], nb[1]);
            res.max_step_x_um = nm_to_um(a.x + c.x) / 2.0;
            res.max_step_y_um = nm_to_um(a.y + c.y) / 2.0;
          }
        }
      }
    }

    // staircase vs analytic arc, measured at band midpoints on the axis
    res.profile_deviation_um = 0;
    for (const Step& s : plan.steps) {
      std::vector<double> loci;
      if (s.x_inner_um <= 0.0)
        loci.push_back(0.0);
      else {
        const double mid = (s.x_inner_um + s.x_outer_um) / 2.0;
        loci.push_back(mid);
        loci.push_back(-mid);
      }
      for (const double x : loci) {
        const PointNm pw = pose.to_world_nm(x, 0.0);
        int ix = 0, iy = 0;
        if (!field.locate(pw, ix, iy))
          throw std::invalid_argument("run_drc: bridge '" + b.id + "' band midpoint outside field");
        const double dev = std::abs(field.at(ix, iy) - arc.height_at(x));
        res.profile_deviation_um = std::max(res.profile_deviation_um, dev);
      }
    }

    res.pass = res.pier_cleared && res.max_step_um < options.metal_thickness_um &&
               res.apex_clearance_um >= options.clearance_min_um - 1e-6 &&
               res.profile_deviation_um <= res.deviation_limit_um + 1e-9;
    report.pass = report.pass && res.pass;
    report.bridges.push_back(std::move(res));
  }
  return report;
}

void export_field_csv(std::ostream& out, const ResistField& field) {
  out << "x_um,y_um,height_um\n";
  for (int iy = 0; iy < field.ny; ++iy) {
    for (int ix = 0; ix < field.nx; ++ix) {
      const PointNm c = field.cell_center(ix, iy);
      out << nm_to_um(c.x) << "," << nm_to_um(c.y) << "," << field.at(ix, iy) << "\n";
    }
  }
}

void export_field_pgm(std::ostream& out, const ResistField& field) {
  out << "P5\n" << field.nx << " " << field.ny << "\n255\n";
  for (int iy = field.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < field.nx; ++ix) {
      const double frac = field.z0_um > 0 ? field.at(ix, iy) / field.z0_um : 0.0;
      const int g = std::clamp(static_cast<int>(std::lround(frac * 255.0)), 0, 255);
      out.put(static_cast<char>(g));
    }
  }
}

std::string drc_report_to_json(const DrcReport& report) {
  nlohmann::json j;
  j["pass"] = report.pass;
  j["warnings"] = report.warnings;
  j["bridges"] = nlohmann::json::array();
  for (const BridgeDrcResult& r : report.bridges) {
    nlohmann::json jb;
    jb["bridge"] = r.bridge_id;
    jb["pass"] = r.pass;
    jb["pier_cleared"] = r.pier_cleared;
    jb["worst_pier_residual_um"] = r.worst_pier_residual_um;
    jb["max_step_um"] = r.max_step_um;
    jb["max_step_at_um"] = {r.max_step_x_um, r.max_step_y_um};
    jb["apex_clearance_um"] = r.apex_clearance_um;
    jb["profile_deviation_um"] = r.profile_deviation_um;
    jb["deviation_limit_um"] = r.deviation_limit_um;
    j["bridges"].push_back(std::move(jb));
  }
  return j.dump(2);
}

}  // namespace bridgec
