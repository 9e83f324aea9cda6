#include "bridgec/materials.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace bridgec {

namespace {

// O(n^2) segment pair check; maps are small
bool self_intersects(const PolygonNm& poly) {
  using I128 = __int128;
  const std::size_t n = poly.v.size();
  auto seg = [&](std::size_t i) {
    return std::pair<PointNm, PointNm>{poly.v[i], poly.v[(i + 1) % n]};
  };
  auto orient = [](PointNm a, PointNm b, PointNm c) {
    const I128 v = I128(b.x - a.x) * I128(c.y - a.y) - I128(b.y - a.y) * I128(c.x - a.x);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;  // adjacent
      auto [a, b] = seg(i);
      auto [c, d] = seg(j);
      const int o1 = orient(a, b, c), o2 = orient(a, b, d);
      const int o3 = orient(c, d, a), o4 = orient(c, d, b);
      if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
    }
  }
  return false;
}

}  // namespace

const std::string& MaterialMap::material_at(PointNm p) const {
  for (auto it = regions.rbegin(); it != regions.rend(); ++it) {
    if (contains_point(it->polygon, p)) return it->material;
  }
  return default_material;
}

void MaterialMap::validate() const {
  if (default_material.empty())
    throw std::invalid_argument("material map: default material tag is empty");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const MaterialRegion& r = regions[i];
    if (r.material.empty())
      throw std::invalid_argument("material map: region " + std::to_string(i) +
                                  " has an empty material tag");
    if (r.polygon.v.size() < 3)
      throw std::invalid_argument("material map: region " + std::to_string(i) +
                                  " polygon needs at least 3 vertices");
    if (twice_signed_area_nm2(r.polygon) == 0)
      throw std::invalid_argument("material map: region " + std::to_string(i) +
                                  " polygon has zero area");
    if (self_intersects(r.polygon))
      throw std::invalid_argument("material map: region " + std::to_string(i) +
                                  " polygon self-intersects");
  }
}

MaterialMap load_material_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open material map: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("material map " + path.string() + ": " + e.what());
  }
  MaterialMap map;
  try {
    map.default_material = j.at("default_material").get<std::string>();
    for (const auto& jr : j.value("regions", nlohmann::json::array())) {
      MaterialRegion r;
      r.material = jr.at("material").get<std::string>();
      for (const auto& jp : jr.at("polygon")) {
        r.polygon.v.push_back(
            PointNm{um_to_nm(jp.at(0).get<double>()), um_to_nm(jp.at(1).get<double>())});
      }
      map.regions.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("material map " + path.string() + ": " + e.what());
  }
  map.validate();
  return map;
}

}  // namespace bridgec
