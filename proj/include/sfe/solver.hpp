#pragma once

#include "sfe/constitutive.hpp"
#include "sfe/mesh.hpp"

#include <Eigen/Sparse>

#include <optional>
#include <variant>

namespace sfe {

/// Nodal displacements in mesh DOF ordering (mm).
struct DisplacementField {
  Vec u;
  int newton_iterations = 0;               // of the final load step
  std::vector<double> residual_norms;      // per iteration, final load step
};

/// Geometrically linear isotropic material (the naive prior model).
struct LinearElastic {
  double youngs_modulus = 1.35;  // MPa
  double poisson_ratio = 0.35;
};

using Material = std::variant<MaterialParams, LinearElastic>;

/// Dead traction eta * t_max * E_X on the Neumann boundary.
struct LoadCase {
  double t_max = 0.5;  // MPa
  double eta = 1.0;    // load scale in [0, 1]
  Vec2 direction = Vec2(1.0, 0.0);
  /// Override the traction vector directly (used for stochastic samples);
  /// when set, the applied traction is eta * traction.
  std::optional<Vec2> traction_override;

  Vec2 traction() const {
    if (traction_override) return eta * (*traction_override);
    return eta * t_max * direction;
  }
};

struct SolverSettings {
  double newton_tol = 1e-10;  // absolute residual 2-norm on free DOFs
  int max_iters = 25;
  int n_load_steps = 5;  // hyperelastic; linear elastic always solves in one
};

/// Assembled internal nodal forces for all DOFs (Dirichlet rows included).
Vec internal_force(const Mesh& mesh, const std::vector<ElementQuadrature>& quad,
                   const Vec& u, const Material& material);
Vec internal_force(const Mesh& mesh, const Vec& u, const Material& material);

/// Consistent nodal loads of the edge traction on the Neumann boundary.
Vec external_force(const Mesh& mesh, const LoadCase& load);

/// Newton solve of the static problem with incremental loading. Optional
/// nonzero Dirichlet values are ramped with the load. Throws NumericalError
/// on divergence (carrying the last residual norm) or inverted elements.
DisplacementField solve_forward(const Mesh& mesh, const Material& material,
                                const LoadCase& load, const SolverSettings& settings,
                                const Vec* dirichlet_values = nullptr);

/// Action of the assembled tangent stiffness on a vector, for finite
/// difference verification.
Vec tangent_action(const Mesh& mesh, const Vec& u, const Material& material,
                   const Vec& v);

/// Assembled tangent stiffness at the given state, Dirichlet rows and
/// columns replaced by identity.
Eigen::SparseMatrix<double> assemble_tangent(const Mesh& mesh, const Vec& u,
                                             const Material& material);

}  // namespace sfe
