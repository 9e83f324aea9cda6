#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bridgec/develop.hpp"
#include "bridgec/profile.hpp"

using namespace bridgec;

namespace {

SubstrateCalibration cal_al() { return {"Al", 4.0, 0.5, 10.0, 5.0}; }

MaterialMap uniform_al() {
  MaterialMap m;
  m.default_material = "Al";
  return m;
}

BridgeSpec example_bridge(int n_steps = 18) {
  BridgeSpec b;
  b.id = "b1";
  b.length_um = 30;
  b.width_um = 12;
  b.height_um = 3;
  b.n_steps = n_steps;
  return b;
}

struct Compiled {
  CalibrationSet cals = {{"Al", cal_al()}};
  MaterialMap map = uniform_al();
  std::vector<BridgeSpec> bridges;
  ExposurePlan plan;
};

Compiled compile_example(int n_steps = 18) {
  Compiled c;
  c.bridges = {example_bridge(n_steps)};
  c.plan = compile(c.bridges, c.map, c.cals, CompileOptions{});
  return c;
}

}  // namespace

TEST_CASE("simulated field reproduces the designed staircase") {
  const Compiled c = compile_example();
  const ResistField field = simulate(c.plan, c.map, c.cals, GridOptions{});

  // apex cells develop to H, pier cells to bare metal
  int ix = 0, iy = 0;
  REQUIRE(field.locate(PointNm{0, 0}, ix, iy));
  CHECK(field.at(ix, iy) == doctest::Approx(3.0).epsilon(1e-9));
  REQUIRE(field.locate(PointNm{um_to_nm(17.0), 0}, ix, iy));
  CHECK(field.at(ix, iy) == 0.0);
  REQUIRE(field.locate(PointNm{um_to_nm(-17.0), 0}, ix, iy));
  CHECK(field.at(ix, iy) == 0.0);
  // unexposed cells keep the full resist thickness
  REQUIRE(field.locate(PointNm{um_to_nm(-19.5), um_to_nm(6.8)}, ix, iy));
  CHECK(field.at(ix, iy) == 4.0);

  // heights stay in [0, z0] everywhere
  CHECK(*std::min_element(field.height_um.begin(), field.height_um.end()) >= 0.0);
  CHECK(*std::max_element(field.height_um.begin(), field.height_um.end()) <= 4.0);
}

TEST_CASE("empty plan develops nothing") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  const ResistField field = simulate(ExposurePlan{}, uniform_al(), cals, GridOptions{});
  for (const double h : field.height_um) CHECK(h == 4.0);
}

TEST_CASE("one rectangle at clear power is a step function at the boundary") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  ExposurePlan plan;
  PlanLayer layer;
  layer.layer_number = 0;
  layer.power_mw = inverse_power(cal_al(), 0.0);
  PlanPolygon p;
  p.poly = make_rect(0, 0, um_to_nm(10.0), um_to_nm(10.0));
  p.bridge_id = "fixture";
  layer.polygons.push_back(p);
  plan.layers.push_back(layer);

  const ResistField field = simulate(plan, uniform_al(), cals, GridOptions{});
  int ix = 0, iy = 0;
  // first cell column inside x >= 0 develops fully, the column before it not at all
  REQUIRE(field.locate(PointNm{25, 5000}, ix, iy));
  CHECK(field.at(ix, iy) == 0.0);
  CHECK(field.at(ix - 1, iy) == 4.0);
  REQUIRE(field.locate(PointNm{um_to_nm(9.9), um_to_nm(5.0)}, ix, iy));
  CHECK(field.at(ix, iy) == 0.0);
  REQUIRE(field.locate(PointNm{um_to_nm(10.3), um_to_nm(5.0)}, ix, iy));
  CHECK(field.at(ix, iy) == 4.0);
}

TEST_CASE("simulation is invariant under layer reordering") {
  const Compiled c = compile_example();
  ExposurePlan reversed = c.plan;
  std::reverse(reversed.layers.begin(), reversed.layers.end());
  const ResistField a = simulate(c.plan, c.map, c.cals, GridOptions{});
  const ResistField b = simulate(reversed, c.map, c.cals, GridOptions{});
  CHECK(a.height_um == b.height_um);
}

TEST_CASE("simulate validates its inputs") {
  const Compiled c = compile_example();
  SUBCASE("non-positive layer power") {
    ExposurePlan bad = c.plan;
    bad.layers[0].power_mw = 0.0;
    CHECK_THROWS_AS(simulate(bad, c.map, c.cals, GridOptions{}), std::invalid_argument);
  }
  SUBCASE("covered cell without calibration") {
    CalibrationSet wrong = {{"Nb", {"Nb", 4.0, 0.5, 10.0, 5.0}}};
    CHECK_THROWS_WITH_AS(simulate(c.plan, c.map, wrong, GridOptions{}),
                         doctest::Contains("lacking calibration"), std::runtime_error);
  }
  SUBCASE("pitch must be positive") {
    GridOptions g;
    g.pitch_um = 0.0;
    CHECK_THROWS_AS(simulate(c.plan, c.map, c.cals, g), std::invalid_argument);
  }
}

TEST_CASE("design-rule checks pass on the compiled example") {
  const Compiled c = compile_example();
  const ResistField field = simulate(c.plan, c.map, c.cals, GridOptions{});
  const DrcReport report = run_drc(field, c.bridges, DrcOptions{});
  REQUIRE(report.bridges.size() == 1);
  const BridgeDrcResult& r = report.bridges[0];
  CHECK(r.pass);
  CHECK(report.pass);
  CHECK(r.pier_cleared);
  CHECK(r.worst_pier_residual_um == 0.0);
  CHECK(r.max_step_um == doctest::Approx(3.0 / 18.0).epsilon(1e-6));
  CHECK(r.apex_clearance_um == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.profile_deviation_um <= r.deviation_limit_um);
  CHECK(r.deviation_limit_um == doctest::Approx(3.0 / 36.0).epsilon(1e-12));
}

TEST_CASE("coarse 5-step discretization fails the step check") {
  const Compiled c = compile_example(5);
  const ResistField field = simulate(c.plan, c.map, c.cals, GridOptions{});
  const DrcReport report = run_drc(field, c.bridges, DrcOptions{});
  REQUIRE(report.bridges.size() == 1);
  CHECK_FALSE(report.pass);
  CHECK_FALSE(report.bridges[0].pass);
  // 3 um over 5 steps jumps 0.6 um, above the 0.5 um metal
  CHECK(report.bridges[0].max_step_um == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(report.bridges[0].pier_cleared);
}

TEST_CASE("a single residual pier cell fails pier clearing") {
  const Compiled c = compile_example();
  ResistField field = simulate(c.plan, c.map, c.cals, GridOptions{});
  int ix = 0, iy = 0;
  REQUIRE(field.locate(PointNm{um_to_nm(17.0), 0}, ix, iy));
  field.height_um[static_cast<std::size_t>(iy) * field.nx + ix] = 0.2;
  const DrcReport report = run_drc(field, c.bridges, DrcOptions{});
  CHECK_FALSE(report.pass);
  CHECK_FALSE(report.bridges[0].pier_cleared);
  CHECK(report.bridges[0].worst_pier_residual_um == doctest::Approx(0.2));
}

TEST_CASE("refining the grid never worsens the pier residual") {
  Compiled c;
  c.bridges = {example_bridge()};
  c.bridges[0].origin_x_um = 0.013;  // off the pitch lattice on purpose
  c.bridges[0].origin_y_um = 0.004;
  c.plan = compile(c.bridges, c.map, c.cals, CompileOptions{});
  GridOptions coarse, fine;
  coarse.pitch_um = 0.05;
  fine.pitch_um = 0.025;
  const DrcReport a =
      run_drc(simulate(c.plan, c.map, c.cals, coarse), c.bridges, DrcOptions{});
  const DrcReport b = run_drc(simulate(c.plan, c.map, c.cals, fine), c.bridges, DrcOptions{});
  CHECK(b.bridges[0].worst_pier_residual_um <= a.bridges[0].worst_pier_residual_um + 1e-12);
}

TEST_CASE("bridge outside the simulated field is an error") {
  const Compiled c = compile_example();
  const ResistField field = simulate(c.plan, c.map, c.cals, GridOptions{});
  BridgeSpec far = example_bridge();
  far.origin_x_um = 500.0;
  CHECK_THROWS_WITH_AS(run_drc(field, std::vector<BridgeSpec>{far}, DrcOptions{}),
                       doctest::Contains("outside the field"), std::invalid_argument);
}

TEST_CASE("empty bridge list passes vacuously with a warning") {
  const Compiled c = compile_example();
  const ResistField field = simulate(c.plan, c.map, c.cals, GridOptions{});
  const DrcReport report = run_drc(field, {}, DrcOptions{});
  CHECK(report.pass);
  CHECK(report.bridges.empty());
  CHECK(!report.warnings.empty());
}

TEST_CASE("coarse grids are flagged against the smallest band") {
  const Compiled c = compile_example();
  GridOptions g;
  g.pitch_um = 0.2;  // smallest band is ~0.41 um wide
  const ResistField field = simulate(c.plan, c.map, c.cals, g);
  const DrcReport report = run_drc(field, c.bridges, DrcOptions{});
  bool flagged = false;
  for (const auto& w : report.warnings)
    if (w.find("coarser") != std::string::npos) flagged = true;
  CHECK(flagged);
}

TEST_CASE("deviation stays within half a step plus grid quantization for random bridges") {
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> len(20.0, 60.0), hei(1.0, 3.0);
  std::uniform_int_distribution<int> steps(8, 24);
  const CalibrationSet cals = {{"Al", cal_al()}};
  const MaterialMap map = uniform_al();
  for (int trial = 0; trial < 8; ++trial) {
    BridgeSpec b;
    b.id = "r";
    b.length_um = len(rng);
    b.height_um = hei(rng);
    b.width_um = 12.0;
    b.n_steps = steps(rng);
    if (check_step_constraint(discretize(build_arc(b.length_um, b.height_um), b.n_steps), 0.5)
            .pass == false)
      continue;
    const std::vector<BridgeSpec> bridges = {b};
    const ExposurePlan plan = compile(bridges, map, cals, CompileOptions{});
    const ResistField field = simulate(plan, map, cals, GridOptions{});
    const DrcReport report = run_drc(field, bridges, DrcOptions{});
    REQUIRE(report.bridges.size() == 1);
    const double h = b.height_um / b.n_steps;
    const double max_slope =
        (b.length_um / 2.0) /
        std::sqrt(std::pow(build_arc(b.length_um, b.height_um).radius_um, 2) -
                  std::pow(b.length_um / 2.0, 2));
    CHECK(report.bridges[0].profile_deviation_um <= h / 2.0 + 0.05 * max_slope + 1e-9);
  }
}

TEST_CASE("field exports") {
  const CalibrationSet cals = {{"Al", cal_al()}};
  ExposurePlan plan;
  PlanLayer layer;
  layer.layer_number = 0;
  layer.power_mw = inverse_power(cal_al(), 2.0);
  PlanPolygon p;
  p.poly = make_rect(0, 0, um_to_nm(1.0), um_to_nm(1.0));
  layer.polygons.push_back(p);
  plan.layers.push_back(layer);
  GridOptions g;
  g.margin_um = 0.5;
  const ResistField field = simulate(plan, uniform_al(), cals, g);

  std::ostringstream csv;
  export_field_csv(csv, field);
  CHECK(csv.str().rfind("x_um,y_um,height_um\n", 0) == 0);

  std::ostringstream pgm;
  export_field_pgm(pgm, field);
  const std::string s = pgm.str();
  CHECK(s.rfind("P5\n", 0) == 0);
  CHECK(s.find(" " + std::to_string(field.ny) + "\n255\n") != std::string::npos);

  const std::string json = drc_report_to_json(run_drc(field, {}, DrcOptions{}));
  CHECK(json.find("\"pass\": true") != std::string::npos);
}
