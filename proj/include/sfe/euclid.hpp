#pragma once

#include "sfe/constitutive.hpp"
#include "sfe/mesh.hpp"

#include <vector>

namespace sfe {

/// Weak-form feature matrix: A(u) kappa equals the assembled internal force
/// of the displacement field u for any coefficient vector kappa.
struct FeatureMatrix {
  Mat A;  // n_gdof x n_phi, all rows assembled
  std::vector<int> free_rows;
  FeatureLibrary library;

  Mat free_block() const;
  Vec restrict_rows(const Vec& full) const;
};

FeatureMatrix assemble_feature_matrix(const Mesh& mesh, const Vec& u,
                                      const FeatureLibrary& library);

struct ParetoPoint {
  double lambda = 0.0;
  Vec kappa;
  double rmse = 0.0;
  double l1_norm = 0.0;
  int n_active = 0;
};

struct DiscoveredModel {
  Vec kappa_star;
  double lambda_star = 0.0;
  std::vector<int> active_set;
  std::vector<ParetoPoint> pareto_path;
  FeatureLibrary library;
  int n_rows = 0;  // rows used for the residual normalization
};

struct EuclidConfig {
  double lambda_min = 1e-2;
  double lambda_max = 1e10;
  int n_lambda = 1000;
  double tau = 70.0;            // RMSE admissibility threshold
  double penalty_multiplier = 3.0;  // r in the volumetric constraint
  double active_threshold = 1e-10;
};

/// Bound-constrained convex QP  min 0.5 x' G x + q' x  s.t. x >= 0, solved by
/// a primal active-set method. `x` carries the warm start and receives the
/// solution. Returns the iteration count.
int nnls_qp(const Mat& G, const Vec& q, Vec& x, double tol_rel = 1e-12);

/// min ||A x - p||^2 + lambda 1' x  s.t.  x >= 0 and
/// sum(A_ij) - r sum(B_i) <= 0 (volumetric floor). Precomputed G = 2 A'A and
/// c = 2 A'p are passed to keep the lambda path cheap. `warm` optionally
/// seeds the active-set solver.
Vec solve_constrained_lasso_normal(const Mat& G, const Vec& c,
                                   const FeatureLibrary& lib, double lambda,
                                   double r, const Vec* warm = nullptr);

/// Convenience overload building G, c from A (rows already restricted) and p.
Vec solve_constrained_lasso(const Mat& A, const Vec& p, const FeatureLibrary& lib,
                            double lambda, double r, const Vec* warm = nullptr);

/// Pareto sweep over logspace(lambda_min, lambda_max, n_lambda), warm-started
/// in increasing lambda order.
std::vector<ParetoPoint> lambda_path(const Mat& A, const Vec& p,
                                     const FeatureLibrary& lib,
                                     const EuclidConfig& config,
                                     bool warm_start = true);

/// Parsimonious selection: among path points with rmse < tau, keep those with
/// the fewest active terms, then pick the smallest RMSE (ties resolved toward
/// larger lambda). Throws NoAdmissibleModelError when no point passes.
DiscoveredModel select_model(const std::vector<ParetoPoint>& path, double tau,
                             const FeatureLibrary& lib,
                             double active_threshold = 1e-10);

/// RMSE of the zero coefficient vector, ||p||/sqrt(n); the reference scale
/// any useful admissibility threshold must undercut.
double zero_model_rmse(const Vec& p);

}  // namespace sfe
