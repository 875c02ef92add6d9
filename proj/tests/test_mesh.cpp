#include "sfe/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace sfe;

TEST_CASE("plate mesh area converges to the annular analytic value") {
  const double want = 1.0 - M_PI * 0.25 * 0.25;
  for (int refinement : {2, 3}) {
    const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, refinement);
    const auto quad = compute_quadrature(mesh);
    double area = 0.0;
    for (const auto& eq : quad)
      for (const auto& qp : eq.pts) area += qp.weight;
    CHECK(std::abs(area - want) / want < 0.005);
  }
}

TEST_CASE("shape functions are a partition of unity at quadrature points") {
  const double gp = 1.0 / std::sqrt(3.0);
  for (double xi : {-gp, gp})
    for (double eta : {-gp, gp}) {
      CHECK(shape_values(xi, eta).sum() == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(shape_gradients_ref(xi, eta).colwise().sum().norm() < 1e-15);
    }
}

TEST_CASE("plate mesh is symmetric about the horizontal centerline") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 2);
  std::set<std::pair<long, long>> keys;
  auto key = [](const Vec2& x) {
    return std::make_pair(std::lround(x[0] * 1e9), std::lround(x[1] * 1e9));
  };
  for (const auto& x : mesh.nodes) keys.insert(key(x));
  for (const auto& x : mesh.nodes)
    CHECK(keys.count(key(Vec2(x[0], 1.0 - x[1]))) == 1);
}

TEST_CASE("no node lies strictly inside the hole; Jacobians positive") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 2);
  const Vec2 c(0.5, 0.5);
  for (const auto& x : mesh.nodes) CHECK((x - c).norm() >= 0.25 - 1e-12);
  CHECK_NOTHROW(compute_quadrature(mesh));
}

TEST_CASE("isoparametric consistency: interpolated coordinates match stored ones") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto quad = compute_quadrature(mesh);
  const double gp = 1.0 / std::sqrt(3.0);
  const double pts[4][2] = {{-gp, -gp}, {gp, -gp}, {gp, gp}, {-gp, gp}};
  for (int e = 0; e < mesh.n_elements(); ++e)
    for (int q = 0; q < 4; ++q) {
      Vec2 x = Vec2::Zero();
      const auto shape = shape_values(pts[q][0], pts[q][1]);
      for (int a = 0; a < 4; ++a) x += shape[a] * mesh.nodes[mesh.elements[e][a]];
      CHECK((x - quad[e].pts[q].coord).norm() < 1e-14);
    }
}

TEST_CASE("2x2 Gauss integrates a bilinear square exactly on a unit element") {
  Mesh unit;
  unit.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  unit.elements = {{0, 1, 2, 3}};
  const auto quad = compute_quadrature(unit);
  // integral of (x y)^2 over the unit square = 1/9
  double got = 0.0;
  for (const auto& qp : quad[0].pts)
    got += qp.coord[0] * qp.coord[0] * qp.coord[1] * qp.coord[1] * qp.weight;
  CHECK(got == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("degenerate geometry raises a construction error naming the element") {
  Mesh bad;
  bad.nodes = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};  // bow-tie connectivity
  bad.elements = {{0, 1, 2, 3}};
  CHECK_THROWS_WITH_AS(compute_quadrature(bad),
                       doctest::Contains("element 0"), NumericalError);
  CHECK_THROWS_AS(build_plate_with_hole(1.0, 1.0, 0.6, 1), ConfigError);
  CHECK_THROWS_AS(build_plate_with_hole(1.0, 1.0, 0.25, 0), ConfigError);
}

TEST_CASE("boundary partition: Neumann edge lengths sum to the right edge") {
  for (int refinement : {1, 2, 3}) {
    const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, refinement);
    double total = 0.0;
    for (const auto& edge : mesh.neumann_edges) total += mesh.edge_length(edge);
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("dirichlet and free DOFs partition the index range") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto free = mesh.free_dofs();
  CHECK(static_cast<int>(free.size() + mesh.dirichlet_dofs.size()) == mesh.n_gdof());
  std::set<int> all(free.begin(), free.end());
  all.insert(mesh.dirichlet_dofs.begin(), mesh.dirichlet_dofs.end());
  CHECK(static_cast<int>(all.size()) == mesh.n_gdof());
  CHECK(!mesh.dirichlet_dofs.empty());
}

TEST_CASE("sensor presets yield the documented counts and unique nodes") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 3);
  const struct {
    const char* name;
    int count;
  } presets[] = {{"sparse3", 3}, {"medium13", 13}, {"dense38", 38}};
  for (const auto& p : presets) {
    const auto set = place_sensors(mesh, SensorLayout::from_preset(p.name), 1.0, 1.0,
                                   0.25);
    CHECK(set.n_sen() == p.count);
    CHECK(set.n_gsen() == 2 * p.count);
    std::set<int> unique(set.node_indices.begin(), set.node_indices.end());
    CHECK(static_cast<int>(unique.size()) == p.count);
    // none on the fixed boundary
    for (int n : set.node_indices) CHECK(mesh.nodes[n][0] > 1e-12);
  }
  CHECK_THROWS_AS(
      place_sensors(mesh, SensorLayout::from_preset("bogus"), 1.0, 1.0, 0.25),
      ConfigError);
}

TEST_CASE("explicit sensor at a mesh node snaps to exactly that node") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 2);
  const int target = [&] {
    for (int n = 0; n < mesh.n_nodes(); ++n)
      if (mesh.nodes[n][0] > 0.6 && mesh.nodes[n][1] > 0.6) return n;
    return -1;
  }();
  REQUIRE(target >= 0);
  const auto set = place_sensors(
      mesh, SensorLayout::from_points({mesh.nodes[target]}), 1.0, 1.0, 0.25);
  CHECK(set.node_indices == std::vector<int>{target});
  CHECK((set.positions[0] - mesh.nodes[target]).norm() == 0.0);
}

TEST_CASE("colliding sensors are rejected with a collision message") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const Vec2 p = mesh.nodes[mesh.n_nodes() - 1];
  CHECK_THROWS_WITH_AS(
      place_sensors(mesh, SensorLayout::from_points({p, p + Vec2(1e-6, 0)}), 1.0,
                    1.0, 0.25),
      doctest::Contains("snap to the same mesh node"), ConfigError);
}

TEST_CASE("mesh JSON round trip preserves everything") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto round = Mesh::from_json_string(mesh.to_json_string());
  CHECK(round.n_nodes() == mesh.n_nodes());
  CHECK(round.elements == mesh.elements);
  CHECK(round.dirichlet_dofs == mesh.dirichlet_dofs);
  CHECK(round.neumann_edges == mesh.neumann_edges);
  for (int n = 0; n < mesh.n_nodes(); ++n)
    CHECK((round.nodes[n] - mesh.nodes[n]).norm() == 0.0);
}

TEST_CASE("sensor mesh covers the sensors and finds the loaded edge") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 3);
  const auto sensors =
      place_sensors(mesh, SensorLayout::from_preset("dense38"), 1.0, 1.0, 0.25);
  const auto smesh = build_sensor_mesh(sensors.positions, 1.0, 1.0, 0.25);
  CHECK(smesh.n_nodes() >= sensors.n_sen());
  for (int s = 0; s < sensors.n_sen(); ++s)
    CHECK((smesh.nodes[s] - sensors.positions[s]).norm() == 0.0);
  CHECK(!smesh.neumann_edges.empty());
  CHECK(!smesh.dirichlet_dofs.empty());
  CHECK_NOTHROW(compute_quadrature(smesh));

  double neumann_len = 0.0;
  for (const auto& e : smesh.neumann_edges) neumann_len += smesh.edge_length(e);
  CHECK(neumann_len == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sensor mesh of 3 points fails or has no loaded edge") {
  const auto pts = preset_sensor_positions("sparse3", 1.0, 1.0, 0.25);
  bool unusable = false;
  try {
    const auto smesh = build_sensor_mesh(pts, 1.0, 1.0, 0.25);
    unusable = smesh.neumann_edges.empty();
  } catch (const NumericalError&) {
    unusable = true;
  }
  CHECK(unusable);
}
