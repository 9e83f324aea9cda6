#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bridgec/geometry.hpp"

namespace bridgec {

struct MaterialRegion {
  PolygonNm polygon;
  std::string material;
};

// Tagged polygon regions over the chip plane; later regions override earlier
// ones, anything uncovered is default_material.
struct MaterialMap {
  std::vector<MaterialRegion> regions;
  std::string default_material;

  const std::string& material_at(PointNm p) const;
  void validate() const;
};

// JSON document: {"default_material": tag,
//                 "regions": [{"material": tag, "polygon": [[x_um, y_um], ...]}]}
MaterialMap load_material_map(const std::filesystem::path& path);

}  // namespace bridgec
