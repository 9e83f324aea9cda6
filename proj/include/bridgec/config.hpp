#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bridgec/develop.hpp"
#include "bridgec/gds.hpp"
#include "bridgec/layout.hpp"

namespace bridgec {

// One design config drives both compile and verify, so the design-rule check
// always sees exactly what was compiled.
struct DesignConfig {
  std::map<std::string, std::filesystem::path> calibration_paths;  // material -> file
  std::filesystem::path material_map_path;
  std::vector<BridgeSpec> bridges;
  CompileOptions options;
  double grid_pitch_um = 0.05;
  GdsTimestamp timestamp = kFixedTimestamp;
};

// Validates option ranges (pier_margin in [1, 2], positive pitch) and that
// every referenced path exists.
DesignConfig load_design_config(const std::filesystem::path& path);

CalibrationSet load_calibration_set(const DesignConfig& config);

}  // namespace bridgec
