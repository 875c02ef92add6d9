#pragma once

#include "sfe/common.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace sfe {

/// 2D plane-strain mesh of 4-node quadrilaterals. Node n owns global DOFs
/// (2n, 2n+1). Triangles may be stored as collapsed quads (last node
/// repeated); the plate mesher never produces them, the sensor mesher may.
struct Mesh {
  std::vector<Vec2> nodes;                       // reference coordinates (mm)
  std::vector<std::array<int, 4>> elements;      // connectivity
  std::vector<int> dirichlet_dofs;               // sorted, unique
  std::vector<std::pair<int, int>> neumann_edges;  // (element, local edge)

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_gdof() const { return 2 * n_nodes(); }
  int n_elements() const { return static_cast<int>(elements.size()); }

  bool is_dirichlet_dof(int dof) const;
  /// Complement of dirichlet_dofs in 0..n_gdof.
  std::vector<int> free_dofs() const;
  /// Nodes with at least one constrained DOF.
  std::vector<int> dirichlet_nodes() const;

  /// Both endpoints of a (element, local edge) pair, local edge e connects
  /// local nodes e and (e+1)%4.
  std::pair<int, int> edge_nodes(const std::pair<int, int>& edge) const;
  double edge_length(const std::pair<int, int>& edge) const;

  std::string to_json_string() const;
  static Mesh from_json_string(const std::string& text);
};

/// Per-quadrature-point data for one element: shape gradients w.r.t. X and
/// the integration weight detJ * w, plus the physical point location.
struct QuadPoint {
  Eigen::Matrix<double, 4, 2> grad;
  double weight = 0.0;
  Vec2 coord = Vec2::Zero();
};

struct ElementQuadrature {
  std::array<QuadPoint, 4> pts;  // 2x2 Gauss
};

/// Bilinear shape functions at a reference point.
Eigen::Vector4d shape_values(double xi, double eta);
Eigen::Matrix<double, 4, 2> shape_gradients_ref(double xi, double eta);

/// 2x2 Gauss rule data for all elements. Throws NumericalError naming the
/// first element with a non-positive Jacobian.
std::vector<ElementQuadrature> compute_quadrature(const Mesh& mesh);

/// Structured O-grid mesh of a width x height plate with a central hole.
/// Left edge fully fixed, right edge tagged Neumann. refinement r gives
/// 16r rays and 4r radial layers.
Mesh build_plate_with_hole(double width, double height, double hole_radius,
                           int refinement);

struct SensorSet {
  std::vector<Vec2> positions;     // snapped coordinates
  std::vector<int> node_indices;   // host mesh nodes, unique
  int n_sen() const { return static_cast<int>(node_indices.size()); }
  int n_gsen() const { return 2 * n_sen(); }
  /// Observed global DOFs in sensor order: (2n, 2n+1) per sensor node.
  std::vector<int> observed_dofs() const;
};

/// Sensor layout: either a named preset ("sparse3", "medium13", "dense38")
/// or an explicit coordinate list.
struct SensorLayout {
  std::string preset;
  std::vector<Vec2> positions;

  static SensorLayout from_preset(const std::string& name) { return {name, {}}; }
  static SensorLayout from_points(std::vector<Vec2> pts) {
    return {"", std::move(pts)};
  }
};

/// Preset coordinates for the given plate geometry (before snapping).
std::vector<Vec2> preset_sensor_positions(const std::string& name, double width,
                                          double height, double hole_radius);

/// Snap each requested position to the nearest mesh node that is not on the
/// Dirichlet boundary. Throws ConfigError listing any collision.
SensorSet place_sensors(const Mesh& mesh, const SensorLayout& layout,
                        double width, double height, double hole_radius);
SensorSet place_sensors(const Mesh& mesh, const SensorLayout& layout);

/// Coarse quadrilateral-dominant mesh whose nodes are exactly the sensor
/// positions plus Dirichlet-edge anchor nodes, built from a Delaunay
/// triangulation with greedy pairwise quad merging. Node i < n_sen is sensor
/// i. Throws NumericalError when the point set cannot be meshed.
Mesh build_sensor_mesh(const std::vector<Vec2>& sensor_positions, double width,
                       double height, double hole_radius);

}  // namespace sfe
