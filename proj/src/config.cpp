#include "bridgec/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace bridgec {

DesignConfig load_design_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open design config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("design config " + path.string() + ": " + e.what());
  }

  DesignConfig cfg;
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  try {
    for (const auto& [material, file] : j.at("calibrations").items())
      cfg.calibration_paths[material] = resolve(file.get<std::string>());
    cfg.material_map_path = resolve(j.at("material_map").get<std::string>());

    for (const auto& jb : j.value("bridges", nlohmann::json::array())) {
      BridgeSpec b;
      b.id = jb.at("id").get<std::string>();
      b.origin_x_um = jb.at("origin").at(0).get<double>();
      b.origin_y_um = jb.at("origin").at(1).get<double>();
      b.axis_angle_deg = jb.value("angle_deg", 0.0);
      b.length_um = jb.at("length_um").get<double>();
      b.width_um = jb.at("width_um").get<double>();
      b.height_um = jb.at("height_um").get<double>();
      b.n_steps = jb.value("n_steps", 18);
      cfg.bridges.push_back(std::move(b));
    }

    if (j.contains("options")) {
      const auto& jo = j.at("options");
      cfg.options.pier_margin = jo.value("pier_margin", cfg.options.pier_margin);
      cfg.options.apex_clearance_um =
          jo.value("apex_clearance_um", cfg.options.apex_clearance_um);
      cfg.options.pier_extension_um =
          jo.value("pier_extension_um", cfg.options.pier_extension_um);
      cfg.options.metal_thickness_um =
          jo.value("metal_thickness_um", cfg.options.metal_thickness_um);
      cfg.grid_pitch_um = jo.value("grid_pitch_um", cfg.grid_pitch_um);
      if (jo.contains("timestamp")) {
        const auto& jt = jo.at("timestamp");
        if (!jt.is_array() || jt.size() != 6)
          throw std::runtime_error("options.timestamp must be [y, mo, d, h, mi, s]");
        for (int i = 0; i < 6; ++i) cfg.timestamp[i] = jt.at(i).get<std::uint16_t>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("design config " + path.string() + ": " + e.what());
  }

  if (cfg.options.pier_margin < 1.0 || cfg.options.pier_margin > 2.0)
    throw std::runtime_error("design config: pier_margin must lie in [1.0, 2.0]");
  if (!(cfg.grid_pitch_um > 0))
    throw std::runtime_error("design config: grid_pitch_um must be positive");
  if (!(cfg.options.apex_clearance_um >= 0))
    throw std::runtime_error("design config: apex_clearance_um must be non-negative");
  if (!(cfg.options.pier_extension_um >= 0))
    throw std::runtime_error("design config: pier_extension_um must be non-negative");
  if (!(cfg.options.metal_thickness_um > 0))
    throw std::runtime_error("design config: metal_thickness_um must be positive");

  if (!std::filesystem::exists(cfg.material_map_path))
    throw std::runtime_error("design config: material map not found: " +
                             cfg.material_map_path.string());
  for (const auto& [material, file] : cfg.calibration_paths) {
    if (!std::filesystem::exists(file))
      throw std::runtime_error("design config: calibration file for '" + material +
                               "' not found: " + file.string());
  }
  return cfg;
}

CalibrationSet load_calibration_set(const DesignConfig& config) {
  CalibrationSet cals;
  for (const auto& [material, file] : config.calibration_paths) {
    SubstrateCalibration cal = load_calibration(file);
    if (cal.material != material)
      throw std::runtime_error("calibration file " + file.string() + " is for material '" +
                               cal.material + "', config expects '" + material + "'");
    cals[material] = std::move(cal);
  }
  return cals;
}

}  // namespace bridgec
