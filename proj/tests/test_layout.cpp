#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bridgec/layout.hpp"
#include "bridgec/profile.hpp"

using namespace bridgec;

namespace {

SubstrateCalibration cal_al() { return {"Al", 4.0, 0.5, 10.0, 5.0}; }
SubstrateCalibration cal_si() { return {"Si", 4.0, 0.65, 8.0, 6.5}; }

MaterialMap uniform_al() {
  MaterialMap m;
  m.default_material = "Al";
  return m;
}

MaterialMap two_material() {
  // a strip of bare substrate |x| < 5 under otherwise Al-covered plane
  MaterialMap m;
  m.default_material = "Al";
  MaterialRegion r;
  r.material = "Si";
  r.polygon = make_rect(um_to_nm(-5), um_to_nm(-50), um_to_nm(5), um_to_nm(50));
  m.regions.push_back(r);
  return m;
}

BridgeSpec example_bridge() {
  BridgeSpec b;
  b.id = "b1";
  b.length_um = 30;
  b.width_um = 12;
  b.height_um = 3;
  b.n_steps = 18;
  return b;
}

const PlanLayer* find_layer(const ExposurePlan& plan, int band, const std::string& material) {
  for (const PlanLayer& l : plan.layers)
    if (l.band_index == band && l.material == material) return &l;
  return nullptr;
}

}  // namespace

TEST_CASE("clip_band splits a rectangle against the map") {
  MaterialMap map;
  map.default_material = "Al";
  MaterialRegion r;
  r.material = "Si";
  r.polygon = make_rect(um_to_nm(0), um_to_nm(0), um_to_nm(4), um_to_nm(12));
  map.regions.push_back(r);

  const PolygonNm band = make_rect(um_to_nm(0), um_to_nm(0), um_to_nm(10), um_to_nm(12));
  const auto frags = clip_band(band, map);
  REQUIRE(frags.size() == 2);
  double si = 0, al = 0;
  for (const auto& f : frags) (f.material == "Si" ? si : al) += f.area_um2;
  CHECK(si == doctest::Approx(48.0).epsilon(1e-12));
  CHECK(al == doctest::Approx(72.0).epsilon(1e-12));

  // rectangle wholly inside one region comes back unchanged
  MaterialMap big;
  big.default_material = "Al";
  MaterialRegion rb{make_rect(um_to_nm(-100), um_to_nm(-100), um_to_nm(100), um_to_nm(100)),
                    "Si"};
  big.regions.push_back(rb);
  const auto inside = clip_band(band, big);
  REQUIRE(inside.size() == 1);
  CHECK(inside[0].material == "Si");
  CHECK(inside[0].poly.v == canonical(band).v);

  // degenerate band rectangle yields nothing
  CHECK(clip_band(make_rect(0, 0, 0, 1000), map).empty());
}

TEST_CASE("single-material compile reproduces the closed-form powers") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  const std::vector<BridgeSpec> bridges = {example_bridge()};
  CompileOptions opt;  // pier_margin 1.1, apex clearance 1.0, extension 4.0
  std::vector<std::string> warnings;
  const ExposurePlan plan = compile(bridges, uniform_al(), cals, opt, &warnings);

  // 18 step bands plus the pier band, one material
  CHECK(plan.layers.size() == 19);
  std::set<int> numbers;
  for (const PlanLayer& l : plan.layers) numbers.insert(l.layer_number);
  CHECK(numbers.size() == 19);
  CHECK(*numbers.begin() == 0);
  CHECK(*numbers.rbegin() == 18);

  const PlanLayer* apex = find_layer(plan, 18, "Al");
  REQUIRE(apex);
  CHECK(apex->power_mw == doctest::Approx(18.243606353500642).epsilon(1e-12));
  REQUIRE(apex->polygons.size() == 1);  // merged across x = 0

  const PlanLayer* pier = find_layer(plan, 0, "Al");
  REQUIRE(pier);
  CHECK(pier->power_mw == doctest::Approx(1.1 * 46.945280494653254).epsilon(1e-12));
  CHECK(pier->polygons.size() == 2);

  // power strictly decreases from pier to apex within one material
  // (before the pier margin, so compare band 1 against the unscaled clear power)
  double prev = pier->power_mw / opt.pier_margin;
  for (int band = 1; band <= 18; ++band) {
    const PlanLayer* l = find_layer(plan, band, "Al");
    REQUIRE(l);
    CHECK(l->power_mw < prev);
    prev = l->power_mw;
  }

  // every band rectangle area is conserved: total = piers + chord deck
  double area = 0;
  for (const PlanLayer& l : plan.layers)
    for (const PlanPolygon& p : l.polygons) area += p.area_um2;
  CHECK(area == doctest::Approx((30.0 + 8.0) * 12.0).epsilon(1e-9));
}

TEST_CASE("two-material compile splits bands per material") {
  const CalibrationSet cals = {{"Al", cal_al()}, {"Si", cal_si()}};
  const std::vector<BridgeSpec> bridges = {example_bridge()};
  const MaterialMap map = two_material();
  const ExposurePlan plan = compile(bridges, map, cals, CompileOptions{});

  // band edges for 30x3/18: x16 ~ 5.09, x17 ~ 3.60; the strip boundary at 5
  // falls inside band 17
  const StepPlan sp = discretize(build_arc(30, 3), 18);
  CHECK(sp.steps[16].x_inner_um < 5.0);
  CHECK(sp.steps[16].x_outer_um > 5.0);

  std::set<std::pair<int, std::string>> seen;
  for (const PlanLayer& l : plan.layers) seen.insert({l.band_index, l.material});
  // piers and bands 1..16 on Al, band 17 split, apex fully on the substrate strip
  CHECK(seen.count({0, "Al"}) == 1);
  CHECK(seen.count({16, "Al"}) == 1);
  CHECK(seen.count({16, "Si"}) == 0);
  CHECK(seen.count({17, "Al"}) == 1);
  CHECK(seen.count({17, "Si"}) == 1);
  CHECK(seen.count({18, "Si"}) == 1);
  CHECK(seen.count({18, "Al"}) == 0);
  CHECK(plan.layers.size() == 20);

  // equal-band powers differ across materials exactly per their calibrations
  const PlanLayer* al17 = find_layer(plan, 17, "Al");
  const PlanLayer* si17 = find_layer(plan, 17, "Si");
  REQUIRE(al17);
  REQUIRE(si17);
  const double target = 17.0 * (3.0 / 18.0);
  CHECK(al17->target_um == doctest::Approx(target).epsilon(1e-12));
  CHECK(al17->power_mw ==
        doctest::Approx(10.0 + 5.0 * std::exp(0.5 * (4.0 - target))).epsilon(1e-12));
  CHECK(si17->power_mw ==
        doctest::Approx(8.0 + 6.5 * std::exp(0.65 * (4.0 - target))).epsilon(1e-12));

  // layer numbering: band * M + material ordinal (Al=0, Si=1)
  CHECK(al17->layer_number == 34);
  CHECK(si17->layer_number == 35);
  CHECK(find_layer(plan, 18, "Si")->layer_number == 37);

  // band 17 splits into >= 2 fragments per side crossing x = +/-5, and the
  // band area is conserved across the split (band rectangles snap to the nm
  // grid before clipping, so the oracle does too)
  const double band17_area =
      2.0 * nm_to_um(um_to_nm(sp.steps[16].x_outer_um) - um_to_nm(sp.steps[16].x_inner_um)) *
      12.0;
  double got = 0;
  for (const PlanLayer* l : {al17, si17})
    for (const PlanPolygon& p : l->polygons) got += p.area_um2;
  CHECK(got == doctest::Approx(band17_area).epsilon(1e-9));
  CHECK(al17->polygons.size() + si17->polygons.size() >= 4);
}

TEST_CASE("empty bridge list compiles to an empty plan") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  const ExposurePlan plan = compile({}, uniform_al(), cals, CompileOptions{});
  CHECK(plan.layers.empty());
}

TEST_CASE("compile errors") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  std::vector<BridgeSpec> bridges = {example_bridge()};

  SUBCASE("uncalibrated material under a bridge names the tag") {
    CHECK_THROWS_WITH_AS(compile(bridges, two_material(), cals, CompileOptions{}),
                         doctest::Contains("missing calibration for material 'Si'"),
                         std::runtime_error);
  }
  SUBCASE("calibrations must share z0") {
    CalibrationSet mixed = {{"Al", cal_al()}, {"Si", {"Si", 3.5, 0.65, 8.0, 6.5}}};
    CHECK_THROWS_WITH_AS(compile(bridges, two_material(), mixed, CompileOptions{}),
                         doctest::Contains("z0"), std::invalid_argument);
  }
  SUBCASE("bridge apex must stay below the resist surface") {
    bridges[0].height_um = 4.0;
    bridges[0].length_um = 30.0;
    CHECK_THROWS_AS(compile(bridges, uniform_al(), cals, CompileOptions{}),
                    std::invalid_argument);
  }
  SUBCASE("duplicate bridge ids are rejected") {
    bridges.push_back(example_bridge());
    CHECK_THROWS_AS(compile(bridges, uniform_al(), cals, CompileOptions{}),
                    std::invalid_argument);
  }
}

TEST_CASE("envelope warnings outside the demonstrated size range") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  BridgeSpec tiny = example_bridge();
  tiny.length_um = 12.0;  // below the 20 um envelope
  tiny.width_um = 4.0;    // below the 6 um envelope
  std::vector<std::string> warnings;
  compile(std::vector<BridgeSpec>{tiny}, uniform_al(), cals, CompileOptions{}, &warnings);
  CHECK(warnings.size() == 2);
}

TEST_CASE("apex clearance clamps taller requests") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  BridgeSpec tall = example_bridge();
  tall.height_um = 3.5;  // z0 - clearance = 3.0 binds
  std::vector<std::string> warnings;
  const ExposurePlan plan =
      compile(std::vector<BridgeSpec>{tall}, uniform_al(), cals, CompileOptions{}, &warnings);
  double max_target = 0;
  for (const PlanLayer& l : plan.layers) max_target = std::max(max_target, l.target_um);
  CHECK(max_target == doctest::Approx(3.0).epsilon(1e-12));
  bool clamped_warning = false;
  for (const auto& w : warnings)
    if (w.find("clamps") != std::string::npos) clamped_warning = true;
  CHECK(clamped_warning);
}

TEST_CASE("plan serialization is deterministic") {
  const CalibrationSet cals = {{"Al", cal_al()}, {"Si", cal_si()}};
  const std::vector<BridgeSpec> bridges = {example_bridge()};
  const MaterialMap map = two_material();
  const ExposurePlan a = compile(bridges, map, cals, CompileOptions{});
  const ExposurePlan b = compile(bridges, map, cals, CompileOptions{});
  CHECK(plan_to_json(a) == plan_to_json(b));

  std::ostringstream sa, sb;
  write_sidecar_csv(sa, a);
  write_sidecar_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("layer,power_mw\n", 0) == 0);
  // rows: one per (band, material) pair present
  std::size_t rows = 0;
  for (char ch : sa.str())
    if (ch == '\n') ++rows;
  CHECK(rows == 21);  // header + 20 layers
}

TEST_CASE("fragments of one layer share one power") {
  const CalibrationSet cals = {{"Al", cal_al()}, {"Si", cal_si()}};
  std::vector<BridgeSpec> bridges = {example_bridge()};
  BridgeSpec second = example_bridge();
  second.id = "b2";
  second.origin_y_um = 40.0;
  bridges.push_back(second);
  const ExposurePlan plan = compile(bridges, two_material(), cals, CompileOptions{});
  for (const PlanLayer& l : plan.layers) {
    // both bridges land on the same layers with the same power
    std::set<std::string> ids;
    for (const PlanPolygon& p : l.polygons) ids.insert(p.bridge_id);
    CHECK(ids.size() == 2);
  }
}
