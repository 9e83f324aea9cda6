#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bridgec {

// All chip-plane geometry lives on a 1 nm integer grid.
using Nm = std::int64_t;

// Coordinates are limited so that every intermediate product in the exact
// clipping predicates fits in 128-bit integers.
inline constexpr Nm kMaxCoordNm = Nm{1} << 27;  // +/- 134 mm

struct PointNm {
  Nm x = 0;
  Nm y = 0;
  friend bool operator==(const PointNm&, const PointNm&) = default;
  friend auto operator<=>(const PointNm&, const PointNm&) = default;
};

// Simple polygon as an open ring (first vertex not repeated at the end).
struct PolygonNm {
  std::vector<PointNm> v;

  bool empty() const { return v.empty(); }
  std::size_t size() const { return v.size(); }
};

Nm um_to_nm(double um);
double nm_to_um(Nm nm);

// Twice the signed area in nm^2, exact.
__int128 twice_signed_area_nm2(const PolygonNm& poly);
double polygon_area_um2(const PolygonNm& poly);

bool polygon_is_convex(const PolygonNm& poly);

// Point-in-polygon with boundary counting as inside. Exact.
bool contains_point(const PolygonNm& poly, PointNm p);

PolygonNm make_rect(Nm x0, Nm y0, Nm x1, Nm y1);

// Canonical form: counter-clockwise, lexicographically smallest vertex first,
// consecutive duplicates removed. Used for deterministic ordering and
// structural comparison.
PolygonNm canonical(const PolygonNm& poly);

struct BoundingBox {
  Nm min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};
BoundingBox bounding_box(const PolygonNm& poly);
BoundingBox bounding_box(std::span<const PolygonNm> polys);

// Placement of a local (x, y) frame on the chip plane.
struct Pose {
  double origin_x_um = 0.0;
  double origin_y_um = 0.0;
  double angle_deg = 0.0;

  void to_world_um(double x_um, double y_um, double& wx_um, double& wy_um) const;
  PointNm to_world_nm(double x_um, double y_um) const;
};

// Axis-aligned local rectangle [x0,x1]x[y0,y1] (um) mapped through a pose and
// snapped to the nm grid.
PolygonNm local_rect_to_world(const Pose& pose, double x0_um, double y0_um,
                              double x1_um, double y1_um);

// One piece of a partitioned subject polygon.
struct Fragment {
  PolygonNm poly;        // snapped to the nm grid
  double area_um2 = 0;   // exact area of the unsnapped piece
  int region_index = -1; // index into the regions span, -1 = none
};

// Exact ear-clipping triangulation of a simple polygon.
std::vector<PolygonNm> triangulate_simple(const PolygonNm& poly);

// Splits a simple subject into fragments such that each fragment lies wholly
// inside or outside every region, and labels each fragment with the topmost
// (highest-index) region containing it. Exact: fragment areas sum to the
// subject area, and fragments sharing a cut share identical snapped vertices.
// Non-convex subjects are triangulated first. Fragments that collapse to
// zero area under snapping are dropped; their count is reported through
// *dropped if non-null.
std::vector<Fragment> partition_by_regions(const PolygonNm& subject,
                                           std::span<const PolygonNm> regions,
                                           int* dropped = nullptr);

}  // namespace bridgec
