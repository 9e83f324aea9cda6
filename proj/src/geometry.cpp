#include "bridgec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace bridgec {

namespace {

using I128 = __int128;
using U128 = unsigned __int128;

int sign_of(I128 v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

struct U256 {
  U128 hi = 0, lo = 0;
};

U256 mul_u128(U128 a, U128 b) {
  const U128 a0 = static_cast<std::uint64_t>(a), a1 = a >> 64;
  const U128 b0 = static_cast<std::uint64_t>(b), b1 = b >> 64;
  const U128 p00 = a0 * b0, p01 = a0 * b1, p10 = a1 * b0, p11 = a1 * b1;
  const U128 mid = (p00 >> 64) + static_cast<std::uint64_t>(p01) +
                   static_cast<std::uint64_t>(p10);
  U256 r;
  r.lo = (mid << 64) | static_cast<std::uint64_t>(p00);
  r.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  return r;
}

int cmp_u256(const U256& a, const U256& b) {
  if (a.hi != b.hi) return a.hi < b.hi ? -1 : 1;
  if (a.lo != b.lo) return a.lo < b.lo ? -1 : 1;
  return 0;
}

// sign of a*b - c*d, exact for any __int128 operands
int sign_ab_minus_cd(I128 a, I128 b, I128 c, I128 d) {
  const int s1 = sign_of(a) * sign_of(b);
  const int s2 = sign_of(c) * sign_of(d);
  if (s1 != s2) return s1 > s2 ? 1 : -1;
  if (s1 == 0) return 0;
  const U256 m1 = mul_u128(a < 0 ? U128(-a) : U128(a), b < 0 ? U128(-b) : U128(b));
  const U256 m2 = mul_u128(c < 0 ? U128(-c) : U128(c), d < 0 ? U128(-d) : U128(d));
  return cmp_u256(m1, m2) * s1;
}

// Exact rational point xn/d, yn/d with d > 0. All cut vertices are
// intersections of two input lines, so numerators and denominators stay
// bounded given the kMaxCoordNm input limit.
struct RatPt {
  I128 xn = 0, yn = 0, d = 1;
};

RatPt rat_from_int(PointNm p) { return RatPt{p.x, p.y, 1}; }

bool rat_eq(const RatPt& p, const RatPt& q) {
  return sign_ab_minus_cd(p.xn, q.d, q.xn, p.d) == 0 &&
         sign_ab_minus_cd(p.yn, q.d, q.yn, p.d) == 0;
}

double rat_x(const RatPt& p) { return static_cast<double>(p.xn) / static_cast<double>(p.d); }
double rat_y(const RatPt& p) { return static_cast<double>(p.yn) / static_cast<double>(p.d); }

// a*x + b*y = c with integer coefficients taken from two grid points
struct Line {
  I128 a = 0, b = 0, c = 0;
};

Line line_through(PointNm p, PointNm q) {
  Line l;
  l.a = I128(q.y) - I128(p.y);
  l.b = I128(p.x) - I128(q.x);
  l.c = l.a * I128(p.x) + l.b * I128(p.y);
  return l;
}

int side_of(const Line& l, const RatPt& p) {
  return sign_of(l.a * p.xn + l.b * p.yn - l.c * p.d);
}

bool on_line(const Line& l, const RatPt& p) { return side_of(l, p) == 0; }

RatPt intersect_lines(const Line& l1, const Line& l2) {
  RatPt p;
  p.d = l1.a * l2.b - l2.a * l1.b;
  p.xn = l1.c * l2.b - l2.c * l1.b;
  p.yn = l1.a * l2.c - l2.a * l1.c;
  if (p.d < 0) {
    p.d = -p.d;
    p.xn = -p.xn;
    p.yn = -p.yn;
  }
  return p;
}

// Convex cell: CCW vertices, edge[i] is the input line carrying v[i]->v[i+1].
struct Cell {
  std::vector<RatPt> v;
  std::vector<Line> e;
};

void push_vertex(Cell& c, const RatPt& p, const Line& l) {
  if (!c.v.empty() && rat_eq(c.v.back(), p)) return;
  c.v.push_back(p);
  c.e.push_back(l);
}

void finish_cell(Cell& c) {
  while (c.v.size() > 1 && rat_eq(c.v.front(), c.v.back())) {
    c.v.pop_back();
    c.e.pop_back();
  }
}

bool cell_degenerate(const Cell& c) { return c.v.size() < 3; }

// Splits a convex cell by a line; out_neg/out_pos receive the halves on the
// negative and positive sides. Tangent lines leave the cell unsplit.
bool split_cell(const Cell& c, const Line& l, Cell& out_neg, Cell& out_pos) {
  const std::size_t n = c.v.size();
  std::vector<int> s(n);
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = side_of(l, c.v[i]);
    has_pos |= s[i] > 0;
    has_neg |= s[i] < 0;
  }
  if (!has_pos || !has_neg) return false;

  out_neg = Cell{};
  out_pos = Cell{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (s[i] >= 0) push_vertex(out_pos, c.v[i], c.e[i]);
    if (s[i] <= 0) push_vertex(out_neg, c.v[i], c.e[i]);
    if ((s[i] > 0 && s[j] < 0) || (s[i] < 0 && s[j] > 0)) {
      const RatPt x = intersect_lines(c.e[i], l);
      push_vertex(out_pos, x, c.e[i]);
      push_vertex(out_neg, x, c.e[i]);
    }
  }
  finish_cell(out_neg);
  finish_cell(out_pos);
  // the closing run between the two on-line vertices follows the split line
  for (Cell* h : {&out_neg, &out_pos}) {
    const std::size_t m = h->v.size();
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = (i + 1) % m;
      if (on_line(l, h->v[i]) && on_line(l, h->v[j])) h->e[i] = l;
    }
  }
  return true;
}

bool properly_crosses(const Cell& c, const Line& l) {
  bool has_pos = false, has_neg = false;
  for (const RatPt& p : c.v) {
    const int s = side_of(l, p);
    has_pos |= s > 0;
    has_neg |= s < 0;
    if (has_pos && has_neg) return true;
  }
  return false;
}

Nm round_div(I128 num, I128 den) {
  // nearest integer, ties away from zero; den > 0
  I128 q = num / den;
  const I128 r = num % den;
  if (r >= 0) {
    if (2 * r >= den) ++q;
  } else {
    if (-2 * r >= den) --q;
  }
  return static_cast<Nm>(q);
}

PointNm snap_vertex(const RatPt& p) {
  return PointNm{round_div(p.xn, p.d), round_div(p.yn, p.d)};
}

long double cell_area_nm2(const Cell& c) {
  long double a = 0;
  const std::size_t n = c.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const long double xi = static_cast<long double>(c.v[i].xn) / static_cast<long double>(c.v[i].d);
    const long double yi = static_cast<long double>(c.v[i].yn) / static_cast<long double>(c.v[i].d);
    const long double xj = static_cast<long double>(c.v[j].xn) / static_cast<long double>(c.v[j].d);
    const long double yj = static_cast<long double>(c.v[j].yn) / static_cast<long double>(c.v[j].d);
    a += xi * yj - xj * yi;
  }
  return a / 2.0L;
}

bool contains_point_double(const PolygonNm& poly, double px, double py) {
  bool inside = false;
  const std::size_t n = poly.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const double ax = static_cast<double>(poly.v[i].x), ay = static_cast<double>(poly.v[i].y);
    const double bx = static_cast<double>(poly.v[j].x), by = static_cast<double>(poly.v[j].y);
    if ((ay > py) != (by > py)) {
      const double t = (py - ay) / (by - ay);
      if (px < ax + t * (bx - ax)) inside = !inside;
    }
  }
  return inside;
}

void check_coord(Nm v) {
  if (v > kMaxCoordNm || v < -kMaxCoordNm)
    throw std::invalid_argument("coordinate exceeds the supported +/-134 mm range");
}

}  // namespace

Nm um_to_nm(double um) {
  if (!std::isfinite(um)) throw std::invalid_argument("non-finite coordinate");
  const double nm = um * 1000.0;
  if (std::abs(nm) > static_cast<double>(kMaxCoordNm))
    throw std::invalid_argument("coordinate exceeds the supported +/-134 mm range");
  return static_cast<Nm>(std::llround(nm));
}

double nm_to_um(Nm nm) { return static_cast<double>(nm) / 1000.0; }

__int128 twice_signed_area_nm2(const PolygonNm& poly) {
  I128 a = 0;
  const std::size_t n = poly.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    a += I128(poly.v[i].x) * I128(poly.v[j].y) - I128(poly.v[j].x) * I128(poly.v[i].y);
  }
  return a;
}

double polygon_area_um2(const PolygonNm& poly) {
  const I128 a2 = twice_signed_area_nm2(poly);
  const long double a = static_cast<long double>(a2 < 0 ? -a2 : a2) / 2.0L;
  return static_cast<double>(a * 1e-6L);
}

bool polygon_is_convex(const PolygonNm& poly) {
  const std::size_t n = poly.v.size();
  if (n < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const PointNm& a = poly.v[i];
    const PointNm& b = poly.v[(i + 1) % n];
    const PointNm& c = poly.v[(i + 2) % n];
    const I128 cross = I128(b.x - a.x) * I128(c.y - b.y) - I128(b.y - a.y) * I128(c.x - b.x);
    if (cross != 0) {
      const int s = cross > 0 ? 1 : -1;
      if (sign == 0)
        sign = s;
      else if (s != sign)
        return false;
    }
  }
  return sign != 0;
}

bool contains_point(const PolygonNm& poly, PointNm p) {
  bool inside = false;
  const std::size_t n = poly.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const PointNm a = poly.v[i], b = poly.v[j];
    const I128 cross = I128(b.x - a.x) * I128(p.y - a.y) - I128(b.y - a.y) * I128(p.x - a.x);
    if (cross == 0 && std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
        std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y))
      return true;  // on the boundary
    if ((a.y > p.y) != (b.y > p.y)) {
      if (b.y > a.y ? cross > 0 : cross < 0) inside = !inside;
    }
  }
  return inside;
}

PolygonNm make_rect(Nm x0, Nm y0, Nm x1, Nm y1) {
  if (x1 < x0) std::swap(x0, x1);
  if (y1 < y0) std::swap(y0, y1);
  return PolygonNm{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

PolygonNm canonical(const PolygonNm& poly) {
  PolygonNm out;
  for (const PointNm& p : poly.v) {
    if (out.v.empty() || !(out.v.back() == p)) out.v.push_back(p);
  }
  while (out.v.size() > 1 && out.v.front() == out.v.back()) out.v.pop_back();
  if (out.v.size() < 3) return out;
  if (twice_signed_area_nm2(out) < 0) std::reverse(out.v.begin(), out.v.end());
  const auto min_it = std::min_element(out.v.begin(), out.v.end());
  std::rotate(out.v.begin(), min_it, out.v.end());
  return out;
}

BoundingBox bounding_box(const PolygonNm& poly) {
  BoundingBox b;
  if (poly.v.empty()) return b;
  b.min_x = b.max_x = poly.v[0].x;
  b.min_y = b.max_y = poly.v[0].y;
  for (const PointNm& p : poly.v) {
    b.min_x = std::min(b.min_x, p.x);
    b.max_x = std::max(b.max_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

BoundingBox bounding_box(std::span<const PolygonNm> polys) {
  BoundingBox b;
  bool first = true;
  for (const PolygonNm& p : polys) {
    if (p.v.empty()) continue;
    const BoundingBox pb = bounding_box(p);
    if (first) {
      b = pb;
      first = false;
    } else {
      b.min_x = std::min(b.min_x, pb.min_x);
      b.max_x = std::max(b.max_x, pb.max_x);
      b.min_y = std::min(b.min_y, pb.min_y);
      b.max_y = std::max(b.max_y, pb.max_y);
    }
  }
  return b;
}

void Pose::to_world_um(double x_um, double y_um, double& wx_um, double& wy_um) const {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0) a += 360.0;
  double c, s;
  // right-angle poses stay exact on the grid
  if (std::abs(a - 0.0) < 1e-12 || std::abs(a - 360.0) < 1e-12) {
    c = 1;
    s = 0;
  } else if (std::abs(a - 90.0) < 1e-12) {
    c = 0;
    s = 1;
  } else if (std::abs(a - 180.0) < 1e-12) {
    c = -1;
    s = 0;
  } else if (std::abs(a - 270.0) < 1e-12) {
    c = 0;
    s = -1;
  } else {
    const double rad = a * (std::acos(-1.0) / 180.0);
    c = std::cos(rad);
    s = std::sin(rad);
  }
  wx_um = origin_x_um + c * x_um - s * y_um;
  wy_um = origin_y_um + s * x_um + c * y_um;
}

PointNm Pose::to_world_nm(double x_um, double y_um) const {
  double wx, wy;
  to_world_um(x_um, y_um, wx, wy);
  return PointNm{um_to_nm(wx), um_to_nm(wy)};
}

PolygonNm local_rect_to_world(const Pose& pose, double x0_um, double y0_um,
                              double x1_um, double y1_um) {
  PolygonNm p;
  p.v = {pose.to_world_nm(x0_um, y0_um), pose.to_world_nm(x1_um, y0_um),
         pose.to_world_nm(x1_um, y1_um), pose.to_world_nm(x0_um, y1_um)};
  if (twice_signed_area_nm2(p) < 0) std::reverse(p.v.begin(), p.v.end());
  return p;
}

// Ear clipping with exact integer predicates; used to seed the partition for
// non-convex subjects.
std::vector<PolygonNm> triangulate_simple(const PolygonNm& poly) {
  PolygonNm p = canonical(poly);
  if (p.v.size() < 3) throw std::invalid_argument("triangulate: degenerate polygon");
  std::vector<PointNm> v = p.v;
  std::vector<PolygonNm> out;
  auto cross = [](PointNm a, PointNm b, PointNm c) {
    return I128(b.x - a.x) * I128(c.y - a.y) - I128(b.y - a.y) * I128(c.x - a.x);
  };
  while (v.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const PointNm a = v[(i + v.size() - 1) % v.size()];
      const PointNm b = v[i];
      const PointNm c = v[(i + 1) % v.size()];
      const I128 orient = cross(a, b, c);
      if (orient < 0) continue;  // reflex corner
      if (orient == 0) {         // collinear corner contributes nothing
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
        break;
      }
      const PolygonNm tri{{a, b, c}};
      bool blocked = false;
      for (const PointNm& w : v) {
        if (w == a || w == b || w == c) continue;
        if (contains_point(tri, w)) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      out.push_back(tri);
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw std::invalid_argument("triangulate: polygon is not simple");
  }
  if (twice_signed_area_nm2(PolygonNm{v}) != 0) out.push_back(PolygonNm{v});
  return out;
}

std::vector<Fragment> partition_by_regions(const PolygonNm& subject,
                                           std::span<const PolygonNm> regions,
                                           int* dropped) {
  if (dropped) *dropped = 0;
  std::vector<Fragment> out;
  if (subject.v.size() < 3 || twice_signed_area_nm2(subject) == 0) return out;
  for (const PointNm& p : subject.v) {
    check_coord(p.x);
    check_coord(p.y);
  }

  // convex subjects seed the partition directly; anything else is
  // triangulated first, with one shared completion pass so seams agree
  std::vector<PolygonNm> seeds;
  if (polygon_is_convex(subject)) {
    seeds.push_back(subject);
  } else {
    seeds = triangulate_simple(subject);
  }

  std::vector<Cell> seed_cells;
  for (PolygonNm subj : seeds) {
    if (twice_signed_area_nm2(subj) < 0) std::reverse(subj.v.begin(), subj.v.end());
    Cell root;
    for (std::size_t i = 0; i < subj.v.size(); ++i) {
      const std::size_t j = (i + 1) % subj.v.size();
      push_vertex(root, rat_from_int(subj.v[i]), line_through(subj.v[i], subj.v[j]));
    }
    finish_cell(root);
    if (!cell_degenerate(root)) seed_cells.push_back(std::move(root));
  }

  // candidate cut lines: region edges whose segment bbox meets the subject
  const BoundingBox sb = bounding_box(subject);
  std::vector<Line> lines;
  for (const PolygonNm& r : regions) {
    for (std::size_t i = 0; i < r.v.size(); ++i) {
      const PointNm a = r.v[i], b = r.v[(i + 1) % r.v.size()];
      check_coord(a.x);
      check_coord(a.y);
      if (a == b) continue;
      if (std::max(a.x, b.x) < sb.min_x || std::min(a.x, b.x) > sb.max_x ||
          std::max(a.y, b.y) < sb.min_y || std::min(a.y, b.y) > sb.max_y)
        continue;
      lines.push_back(line_through(a, b));
    }
  }

  std::vector<Cell> work = std::move(seed_cells);
  std::vector<Cell> cells;
  while (!work.empty()) {
    Cell c = std::move(work.back());
    work.pop_back();
    bool split = false;
    for (const Line& l : lines) {
      if (!properly_crosses(c, l)) continue;
      Cell neg, pos;
      if (split_cell(c, l, neg, pos)) {
        if (!cell_degenerate(neg)) work.push_back(std::move(neg));
        if (!cell_degenerate(pos)) work.push_back(std::move(pos));
        split = true;
        break;
      }
    }
    if (!split) cells.push_back(std::move(c));
  }

  // T-junction completion: every fragment edge picks up all partition
  // vertices lying on it, so shared boundaries snap identically on both sides.
  std::vector<RatPt> verts;
  for (const Cell& c : cells)
    for (const RatPt& p : c.v) verts.push_back(p);
  for (Cell& c : cells) {
    Cell completed;
    const std::size_t n = c.v.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      const RatPt& a = c.v[i];
      const RatPt& b = c.v[j];
      const Line& l = c.e[i];
      const bool by_x = (l.b < 0 ? -l.b : l.b) >= (l.a < 0 ? -l.a : l.a);
      auto proj_cmp = [&](const RatPt& p, const RatPt& q) {
        return by_x ? sign_ab_minus_cd(p.xn, q.d, q.xn, p.d)
                    : sign_ab_minus_cd(p.yn, q.d, q.yn, p.d);
      };
      const int dir = proj_cmp(b, a);  // +1 ascending, -1 descending
      std::vector<RatPt> mids;
      for (const RatPt& w : verts) {
        if (!on_line(l, w)) continue;
        const int ca = proj_cmp(w, a), cb = proj_cmp(w, b);
        if (ca == dir && cb == -dir) mids.push_back(w);  // strictly between
      }
      // sort ascending along a->b
      std::sort(mids.begin(), mids.end(),
                [&](const RatPt& p, const RatPt& q) { return proj_cmp(p, q) == -dir; });
      push_vertex(completed, a, l);
      for (const RatPt& w : mids) push_vertex(completed, w, l);
    }
    finish_cell(completed);
    c = std::move(completed);
  }

  for (const Cell& c : cells) {
    Fragment f;
    const long double area_nm2 = cell_area_nm2(c);
    f.area_um2 = static_cast<double>(area_nm2 * 1e-6L);
    // classify by centroid against the regions, topmost wins
    double cx = 0, cy = 0;
    for (const RatPt& p : c.v) {
      cx += rat_x(p);
      cy += rat_y(p);
    }
    cx /= static_cast<double>(c.v.size());
    cy /= static_cast<double>(c.v.size());
    f.region_index = -1;
    for (int r = static_cast<int>(regions.size()) - 1; r >= 0; --r) {
      if (contains_point_double(regions[r], cx, cy)) {
        f.region_index = r;
        break;
      }
    }
    for (const RatPt& p : c.v) {
      const PointNm q = snap_vertex(p);
      if (f.poly.v.empty() || !(f.poly.v.back() == q)) f.poly.v.push_back(q);
    }
    while (f.poly.v.size() > 1 && f.poly.v.front() == f.poly.v.back()) f.poly.v.pop_back();
    if (f.poly.v.size() < 3 || twice_signed_area_nm2(f.poly) == 0) {
      if (dropped) ++*dropped;
      continue;
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace bridgec
