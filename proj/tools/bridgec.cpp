#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bridgec/analysis.hpp"
#include "bridgec/config.hpp"
#include "bridgec/develop.hpp"
#include "bridgec/exposure.hpp"
#include "bridgec/gds.hpp"
#include "bridgec/layout.hpp"
#include "bridgec/materials.hpp"
#include "bridgec/profile.hpp"

namespace fs = std::filesystem;
using namespace bridgec;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

struct Overrides {
  double pier_margin = -1;
  double apex_clearance = -1;
  double metal_thickness = -1;
  double pier_extension = -1;
  double grid_pitch = -1;
  bool fixed_timestamp = false;

  void apply(DesignConfig& cfg) const {
    if (pier_margin >= 0) cfg.options.pier_margin = pier_margin;
    if (apex_clearance >= 0) cfg.options.apex_clearance_um = apex_clearance;
    if (metal_thickness >= 0) cfg.options.metal_thickness_um = metal_thickness;
    if (pier_extension >= 0) cfg.options.pier_extension_um = pier_extension;
    if (grid_pitch >= 0) cfg.grid_pitch_um = grid_pitch;
    if (fixed_timestamp) cfg.timestamp = kFixedTimestamp;
    if (cfg.options.pier_margin < 1.0 || cfg.options.pier_margin > 2.0)
      throw std::runtime_error("pier_margin must lie in [1.0, 2.0]");
    if (!(cfg.grid_pitch_um > 0)) throw std::runtime_error("grid pitch must be positive");
  }
};

void add_override_flags(CLI::App* cmd, Overrides& ov, bool with_grid) {
  cmd->add_option("--pier-margin", ov.pier_margin, "pier power factor, [1.0, 2.0]");
  cmd->add_option("--apex-clearance", ov.apex_clearance, "apex clearance below z0 (um)");
  cmd->add_option("--metal-thickness", ov.metal_thickness, "deposited metal thickness (um)");
  cmd->add_option("--pier-extension", ov.pier_extension, "pier pad length beyond the chord (um)");
  if (with_grid) cmd->add_option("--grid-pitch", ov.grid_pitch, "simulation grid pitch (um)");
  cmd->add_flag("--fixed-timestamp", ov.fixed_timestamp,
                "force the constant epoch timestamp (default behavior)");
}

struct CompiledDesign {
  DesignConfig cfg;
  MaterialMap map;
  CalibrationSet cals;
  ExposurePlan plan;
  std::vector<std::string> warnings;
};

CompiledDesign compile_design(const fs::path& config_path, const Overrides& ov) {
  CompiledDesign d;
  d.cfg = load_design_config(config_path);
  ov.apply(d.cfg);
  d.map = load_material_map(d.cfg.material_map_path);
  d.cals = load_calibration_set(d.cfg);
  d.plan = compile(d.cfg.bridges, d.map, d.cals, d.cfg.options, &d.warnings);
  for (const std::string& w : d.warnings) std::cerr << "warning: " << w << "\n";
  return d;
}

nlohmann::json compile_summary(const CompiledDesign& d) {
  nlohmann::json j;
  j["bridges"] = d.cfg.bridges.size();
  j["layers"] = d.plan.layers.size();
  std::size_t polys = 0;
  double area = 0;
  nlohmann::json table = nlohmann::json::array();
  for (const PlanLayer& layer : d.plan.layers) {
    polys += layer.polygons.size();
    double layer_area = 0;
    for (const PlanPolygon& p : layer.polygons) layer_area += p.area_um2;
    area += layer_area;
    table.push_back({{"layer", layer.layer_number},
                     {"power_mw", layer.power_mw},
                     {"band", layer.band_index},
                     {"material", layer.material},
                     {"target_um", layer.target_um},
                     {"polygons", layer.polygons.size()},
                     {"area_um2", layer_area}});
  }
  j["polygons"] = polys;
  j["exposed_area_um2"] = area;
  j["layer_table"] = std::move(table);
  j["warnings"] = d.warnings;
  return j;
}

int cmd_calibrate(const fs::path& csv, const std::string& material, double z0,
                  const fs::path& out_path) {
  const std::vector<DoseSample> samples = load_dose_csv(csv);
  const FitReport rep = fit_calibration(samples, material, z0);
  nlohmann::json j;
  j["material"] = rep.calibration.material;
  j["z0_um"] = rep.calibration.z0_um;
  j["alpha_per_um"] = rep.calibration.alpha_per_um;
  j["p0_mw"] = rep.calibration.p0_mw;
  j["p_clear_mw"] = rep.calibration.p_clear_mw;
  j["rms_um"] = rep.rms_um;
  j["iterations"] = rep.iterations;
  j["converged"] = rep.converged;
  std::cout << j.dump(2) << "\n";
  if (!rep.converged) {
    std::cerr << "error: calibration fit did not converge\n";
    return 1;
  }
  save_calibration(out_path, rep);
  std::cerr << "wrote " << out_path.string() << "\n";
  return 0;
}

int cmd_compile(const fs::path& config_path, const fs::path& out_dir, const Overrides& ov,
                bool emit_profiles) {
  const CompiledDesign d = compile_design(config_path, ov);
  fs::create_directories(out_dir);

  const GdsLibrary lib = plan_to_gds(d.plan, "BRIDGEC", "TOP", d.cfg.timestamp);
  write_bytes(out_dir / "design.gds", write_gds(lib));

  std::ofstream sidecar(out_dir / "layers.csv", std::ios::binary);
  if (!sidecar) throw std::runtime_error("cannot write layers.csv");
  write_sidecar_csv(sidecar, d.plan);
  sidecar.close();

  write_file(out_dir / "plan.json", plan_to_json(d.plan));
  write_file(out_dir / "compile_report.json", compile_summary(d).dump(2) + "\n");

  if (emit_profiles) {
    for (const BridgeSpec& b : d.cfg.bridges) {
      const StepPlan plan = discretize(build_arc(b.length_um, b.height_um), b.n_steps);
      std::ofstream csv(out_dir / ("profile_" + b.id + ".csv"));
      export_profile_csv(csv, plan);
      std::ofstream svg(out_dir / ("profile_" + b.id + ".svg"));
      export_profile_svg(svg, build_arc(b.length_um, b.height_um), plan);
    }
  }

  std::cout << compile_summary(d).dump(2) << "\n";
  std::cerr << "wrote " << (out_dir / "design.gds").string() << ", layers.csv, plan.json\n";
  return 0;
}

int cmd_verify(const fs::path& config_path, const fs::path& out_dir, const Overrides& ov,
               const fs::path& field_csv, const fs::path& field_pgm) {
  const CompiledDesign d = compile_design(config_path, ov);

  GridOptions grid;
  grid.pitch_um = d.cfg.grid_pitch_um;
  const ResistField field = simulate(d.plan, d.map, d.cals, grid);

  DrcOptions drc;
  drc.metal_thickness_um = d.cfg.options.metal_thickness_um;
  drc.pier_extension_um = d.cfg.options.pier_extension_um;
  const DrcReport report = run_drc(field, d.cfg.bridges, drc);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(out_dir / "drc_report.json", drc_report_to_json(report) + "\n");
  }
  if (!field_csv.empty()) {
    std::ofstream out(field_csv, std::ios::binary);
    export_field_csv(out, field);
  }
  if (!field_pgm.empty()) {
    std::ofstream out(field_pgm, std::ios::binary);
    export_field_pgm(out, field);
  }

  for (const BridgeDrcResult& r : report.bridges) {
    std::cout << (r.pass ? "PASS" : "FAIL") << " bridge " << r.bridge_id
              << ": pier_cleared=" << (r.pier_cleared ? "yes" : "no")
              << " worst_pier_residual_um=" << r.worst_pier_residual_um
              << " max_step_um=" << r.max_step_um
              << " apex_clearance_um=" << r.apex_clearance_um
              << " profile_deviation_um=" << r.profile_deviation_um << "\n";
  }
  std::cout << (report.pass ? "DRC PASS" : "DRC FAIL") << "\n";
  return report.pass ? 0 : 2;
}

int cmd_analyze(const std::string& kind, const fs::path& csv, int n_min) {
  nlohmann::json j;
  if (kind == "series") {
    const auto points = load_series_csv(csv);
    const LinearFit f = fit_series(points);
    j["per_bridge_ohm"] = f.slope;
    j["intercept_ohm"] = f.intercept;
    j["r_squared"] = f.r_squared;
    j["zero_variance"] = f.zero_variance;
    j["points"] = points.size();
  } else if (kind == "junction") {
    const auto rows = load_junction_csv(csv);
    std::vector<double> before, after;
    for (const JunctionRow& r : rows) {
      before.push_back(r.before_ohm);
      after.push_back(r.after_ohm);
    }
    const JunctionDelta d = junction_delta(before, after);
    j["mean_relative_change"] = d.mean_relative_change;
    j["dispersion"] = d.dispersion;
    j["pairs"] = rows.size();
  } else if (kind == "loss") {
    const auto sweep = load_qi_csv(csv);
    const LossFit f = per_bridge_loss(sweep, n_min);
    j["loss_per_bridge"] = f.loss_per_bridge;
    j["base_loss"] = f.base_loss;
    j["points_used"] = f.points_used;
    j["n_min"] = n_min;
  } else {
    throw std::runtime_error("unknown analyze subcommand '" + kind + "'");
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-exposure airbridge design compiler"};
  app.require_subcommand(1);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "fit the exposure model from dose-test data");
  std::string cal_csv, cal_material, cal_out = "calibration.json";
  double cal_z0 = 0;
  cal->add_option("--csv", cal_csv, "dose test CSV (power_mw,residual_um)")->required();
  cal->add_option("--material", cal_material, "substrate material tag")->required();
  cal->add_option("--z0", cal_z0, "initial resist thickness (um)")->required();
  cal->add_option("--out,-o", cal_out, "output calibration file");

  // compile
  auto* comp = app.add_subcommand("compile", "compile bridges into a layered exposure layout");
  std::string comp_config, comp_out = "out";
  bool comp_profiles = false;
  Overrides comp_ov;
  comp->add_option("--config", comp_config, "design config JSON")->required();
  comp->add_option("--out,-o", comp_out, "output directory");
  comp->add_flag("--profiles", comp_profiles, "also write per-bridge profile previews");
  add_override_flags(comp, comp_ov, false);

  // verify
  auto* ver = app.add_subcommand("verify", "simulate development and run design-rule checks");
  std::string ver_config, ver_out = "out", ver_field_csv, ver_field_pgm;
  Overrides ver_ov;
  ver->add_option("--config", ver_config, "design config JSON")->required();
  ver->add_option("--out,-o", ver_out, "output directory for the DRC report");
  ver->add_option("--field-csv", ver_field_csv, "also dump the simulated field as CSV");
  ver->add_option("--field-pgm", ver_field_pgm, "also dump the simulated field as PGM");
  add_override_flags(ver, ver_ov, true);

  // analyze
  auto* ana = app.add_subcommand("analyze", "post-process measurement data");
  std::string ana_kind, ana_csv;
  int ana_n_min = 5;
  ana->add_option("kind", ana_kind, "series | junction | loss")->required();
  ana->add_option("--csv", ana_csv, "input CSV")->required();
  ana->add_option("--n-min", ana_n_min, "loss fit: exclude points below this bridge count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cal) return cmd_calibrate(cal_csv, cal_material, cal_z0, cal_out);
    if (*comp) return cmd_compile(comp_config, comp_out, comp_ov, comp_profiles);
    if (*ver) return cmd_verify(ver_config, ver_out, ver_ov, ver_field_csv, ver_field_pgm);
    if (*ana) return cmd_analyze(ana_kind, ana_csv, ana_n_min);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
