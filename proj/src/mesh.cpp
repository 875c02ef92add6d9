#include "sfe/mesh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace sfe {

using nlohmann::json;

bool Mesh::is_dirichlet_dof(int dof) const {
  return std::binary_search(dirichlet_dofs.begin(), dirichlet_dofs.end(), dof);
}

std::vector<int> Mesh::free_dofs() const {
  std::vector<int> free;
  free.reserve(n_gdof() - dirichlet_dofs.size());
  for (int d = 0; d < n_gdof(); ++d)
    if (!is_dirichlet_dof(d)) free.push_back(d);
  return free;
}

std::vector<int> Mesh::dirichlet_nodes() const {
  std::set<int> nodes_set;
  for (int d : dirichlet_dofs) nodes_set.insert(d / 2);
  return {nodes_set.begin(), nodes_set.end()};
}

std::pair<int, int> Mesh::edge_nodes(const std::pair<int, int>& edge) const {
  const auto& conn = elements[edge.first];
  return {conn[edge.second], conn[(edge.second + 1) % 4]};
}

double Mesh::edge_length(const std::pair<int, int>& edge) const {
  auto [a, b] = edge_nodes(edge);
  return (nodes[b] - nodes[a]).norm();
}

std::string Mesh::to_json_string() const {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& x : nodes) doc["nodes"].push_back({x[0], x[1]});
  doc["elements"] = json::array();
  for (const auto& e : elements) doc["elements"].push_back({e[0], e[1], e[2], e[3]});
  doc["boundary"]["dirichlet_dofs"] = dirichlet_dofs;
  doc["boundary"]["neumann_edges"] = json::array();
  for (const auto& [el, le] : neumann_edges)
    doc["boundary"]["neumann_edges"].push_back({el, le});
  return doc.dump(2);
}

Mesh Mesh::from_json_string(const std::string& text) {
  json doc = json::parse(text);
  Mesh m;
  for (const auto& x : doc.at("nodes"))
    m.nodes.push_back(Vec2(x.at(0).get<double>(), x.at(1).get<double>()));
  for (const auto& e : doc.at("elements"))
    m.elements.push_back({e.at(0), e.at(1), e.at(2), e.at(3)});
  m.dirichlet_dofs = doc.at("boundary").at("dirichlet_dofs").get<std::vector<int>>();
  for (const auto& e : doc.at("boundary").at("neumann_edges"))
    m.neumann_edges.emplace_back(e.at(0), e.at(1));
  return m;
}

Eigen::Vector4d shape_values(double xi, double eta) {
  Eigen::Vector4d n;
  n << 0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
      0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta);
  return n;
}

Eigen::Matrix<double, 4, 2> shape_gradients_ref(double xi, double eta) {
  Eigen::Matrix<double, 4, 2> g;
  g << -0.25 * (1 - eta), -0.25 * (1 - xi),  //
      0.25 * (1 - eta), -0.25 * (1 + xi),    //
      0.25 * (1 + eta), 0.25 * (1 + xi),     //
      -0.25 * (1 + eta), 0.25 * (1 - xi);
  return g;
}

std::vector<ElementQuadrature> compute_quadrature(const Mesh& mesh) {
  const double gp = 1.0 / std::sqrt(3.0);
  const double pts[4][2] = {{-gp, -gp}, {gp, -gp}, {gp, gp}, {-gp, gp}};

  std::vector<ElementQuadrature> quad(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Eigen::Matrix<double, 4, 2> coords;
    for (int a = 0; a < 4; ++a) coords.row(a) = mesh.nodes[mesh.elements[e][a]];
    for (int q = 0; q < 4; ++q) {
      const auto g_ref = shape_gradients_ref(pts[q][0], pts[q][1]);
      const Mat2 J = coords.transpose() * g_ref;
      const double detJ = J.determinant();
      if (detJ <= 0.0)
        throw NumericalError("element " + std::to_string(e) +
                             " has non-positive Jacobian (detJ = " +
                             std::to_string(detJ) + ") at quadrature point " +
                             std::to_string(q));
      QuadPoint& p = quad[e].pts[q];
      p.grad = g_ref * J.inverse();
      p.weight = detJ;  // 2x2 Gauss weights are 1
      p.coord = coords.transpose() * shape_values(pts[q][0], pts[q][1]);
    }
  }
  return quad;
}

Mesh build_plate_with_hole(double width, double height, double hole_radius,
                           int refinement) {
  if (hole_radius <= 0.0 || hole_radius >= 0.5 * std::min(width, height))
    throw ConfigError("hole radius must lie in (0, min(width, height)/2)");
  if (refinement < 1) throw ConfigError("refinement must be >= 1");

  const int n_rays = 16 * refinement;
  const int n_layers = 4 * refinement;
  const Vec2 center(0.5 * width, 0.5 * height);
  const double hw = 0.5 * width, hh = 0.5 * height;

  // Distance from the center to the outer (square) boundary along a ray.
  auto boundary_distance = [&](double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    double d = std::numeric_limits<double>::max();
    if (std::abs(c) > 1e-14) d = std::min(d, hw / std::abs(c));
    if (std::abs(s) > 1e-14) d = std::min(d, hh / std::abs(s));
    return d;
  };

  Mesh mesh;
  mesh.nodes.reserve(static_cast<size_t>(n_rays) * (n_layers + 1));
  // Rays start at 45 degrees so that the plate corners are ray directions.
  for (int l = 0; l <= n_layers; ++l) {
    const double t = static_cast<double>(l) / n_layers;
    for (int k = 0; k < n_rays; ++k) {
      const double theta = M_PI / 4.0 + 2.0 * M_PI * k / n_rays;
      const double r = hole_radius + t * (boundary_distance(theta) - hole_radius);
      Vec2 x = center + r * Vec2(std::cos(theta), std::sin(theta));
      // Clamp boundary-layer coordinates exactly onto the plate edges.
      if (l == n_layers) {
        if (std::abs(x[0]) < 1e-12 * width) x[0] = 0.0;
        if (std::abs(x[0] - width) < 1e-12 * width) x[0] = width;
        if (std::abs(x[1]) < 1e-12 * height) x[1] = 0.0;
        if (std::abs(x[1] - height) < 1e-12 * height) x[1] = height;
      }
      mesh.nodes.push_back(x);
    }
  }

  auto node_id = [&](int layer, int ray) { return layer * n_rays + (ray % n_rays); };
  // Local axes: xi radial (outward), eta angular (counterclockwise).
  for (int l = 0; l < n_layers; ++l)
    for (int k = 0; k < n_rays; ++k)
      mesh.elements.push_back({node_id(l, k), node_id(l + 1, k),
                               node_id(l + 1, k + 1), node_id(l, k + 1)});

  const double tol = 1e-9 * width;
  std::set<int> dirichlet;
  for (int n = 0; n < mesh.n_nodes(); ++n)
    if (std::abs(mesh.nodes[n][0]) < tol) {
      dirichlet.insert(2 * n);
      dirichlet.insert(2 * n + 1);
    }
  mesh.dirichlet_dofs.assign(dirichlet.begin(), dirichlet.end());

  // Right edge: outer-layer elements whose local edge 1 (both outer nodes)
  // lies on x = width.
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& conn = mesh.elements[e];
    if (std::abs(mesh.nodes[conn[1]][0] - width) < tol &&
        std::abs(mesh.nodes[conn[2]][0] - width) < tol)
      mesh.neumann_edges.emplace_back(e, 1);
  }

  compute_quadrature(mesh);  // validates Jacobians
  return mesh;
}

std::vector<int> SensorSet::observed_dofs() const {
  std::vector<int> dofs;
  dofs.reserve(2 * node_indices.size());
  for (int n : node_indices) {
    dofs.push_back(2 * n);
    dofs.push_back(2 * n + 1);
  }
  return dofs;
}

std::vector<Vec2> preset_sensor_positions(const std::string& name, double width,
                                          double height, double hole_radius) {
  const Vec2 c(0.5 * width, 0.5 * height);
  const double r_max = 0.5 * std::min(width, height);
  auto ring = [&](double frac, int count, double offset_deg,
                  std::vector<Vec2>& out) {
    const double r = hole_radius + frac * (r_max - hole_radius);
    for (int k = 0; k < count; ++k) {
      const double th = offset_deg * M_PI / 180.0 + 2.0 * M_PI * k / count;
      out.push_back(c + r * Vec2(std::cos(th), std::sin(th)));
    }
  };

  std::vector<Vec2> pts;
  if (name == "sparse3") {
    pts = {{0.5 * width, 0.85 * height},
           {0.5 * width, 0.15 * height},
           {0.85 * width, 0.5 * height}};
  } else if (name == "medium13") {
    ring(0.35, 8, 0.0, pts);
    pts.push_back({width, 0.25 * height});
    pts.push_back({width, 0.50 * height});
    pts.push_back({width, 0.75 * height});
    pts.push_back({0.15 * width, 0.15 * height});
    pts.push_back({0.15 * width, 0.85 * height});
  } else if (name == "dense38") {
    ring(0.25, 12, 0.0, pts);
    ring(0.60, 12, 15.0, pts);
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) pts.push_back({width, f * height});
    pts.push_back({width, 0.0});
    pts.push_back({width, height});
    pts.push_back({0.3 * width, height});
    pts.push_back({0.7 * width, height});
    pts.push_back({0.3 * width, 0.0});
    pts.push_back({0.7 * width, 0.0});
    for (double f : {0.2, 0.5, 0.8}) pts.push_back({0.12 * width, f * height});
  } else {
    throw ConfigError("unknown sensor preset '" + name +
                      "' (expected sparse3, medium13 or dense38)");
  }
  return pts;
}

SensorSet place_sensors(const Mesh& mesh, const SensorLayout& layout, double width,
                        double height, double hole_radius) {
  std::vector<Vec2> requested = layout.positions;
  if (!layout.preset.empty())
    requested = preset_sensor_positions(layout.preset, width, height, hole_radius);
  if (requested.empty()) throw ConfigError("sensor layout is empty");

  const auto blocked = mesh.dirichlet_nodes();
  auto is_blocked = [&](int n) {
    return std::binary_search(blocked.begin(), blocked.end(), n);
  };

  SensorSet set;
  for (const auto& p : requested) {
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      if (is_blocked(n)) continue;
      const double d = (mesh.nodes[n] - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = n;
      }
    }
    for (size_t s = 0; s < set.node_indices.size(); ++s)
      if (set.node_indices[s] == best)
        throw ConfigError("sensors " + std::to_string(s) + " and " +
                          std::to_string(set.node_indices.size()) +
                          " snap to the same mesh node " + std::to_string(best));
    set.node_indices.push_back(best);
    set.positions.push_back(mesh.nodes[best]);
  }
  return set;
}

SensorSet place_sensors(const Mesh& mesh, const SensorLayout& layout) {
  double width = 0.0, height = 0.0;
  for (const auto& x : mesh.nodes) {
    width = std::max(width, x[0]);
    height = std::max(height, x[1]);
  }
  return place_sensors(mesh, layout, width, height, 0.25 * std::min(width, height));
}

}  // namespace sfe
