#include "sfe/euclid.hpp"

#include <algorithm>
#include <cmath>

namespace sfe {

Mat FeatureMatrix::free_block() const {
  Mat block(free_rows.size(), A.cols());
  for (size_t r = 0; r < free_rows.size(); ++r) block.row(r) = A.row(free_rows[r]);
  return block;
}

Vec FeatureMatrix::restrict_rows(const Vec& full) const {
  Vec out(free_rows.size());
  for (size_t r = 0; r < free_rows.size(); ++r) out[r] = full[free_rows[r]];
  return out;
}

FeatureMatrix assemble_feature_matrix(const Mesh& mesh, const Vec& u,
                                      const FeatureLibrary& library) {
  const auto quad = compute_quadrature(mesh);
  FeatureMatrix fm;
  fm.library = library;
  fm.A = Mat::Zero(mesh.n_gdof(), library.n_phi());
  fm.free_rows = mesh.free_dofs();

  for (int e = 0; e < mesh.n_elements(); ++e) {
    Eigen::Matrix<double, 4, 2> u_el;
    for (int a = 0; a < 4; ++a) {
      const int n = mesh.elements[e][a];
      u_el(a, 0) = u[2 * n];
      u_el(a, 1) = u[2 * n + 1];
    }
    for (const auto& qp : quad[e].pts) {
      const Mat2 F = Mat2::Identity() + (u_el.transpose() * qp.grad).eval();
      if (F.determinant() <= 0.0)
        throw NumericalError("inverted element " + std::to_string(e) +
                             " in feature matrix assembly (degenerate measured "
                             "field)");
      const auto state = DeformationState::from_in_plane_F(F);
      const auto stresses = feature_pk2_stresses(state, library);
      for (int m = 0; m < library.n_phi(); ++m) {
        const Mat2 P = F * stresses[m].topLeftCorner<2, 2>();
        for (int a = 0; a < 4; ++a) {
          const int n = mesh.elements[e][a];
          for (int i = 0; i < 2; ++i)
            fm.A(2 * n + i, m) +=
                (P(i, 0) * qp.grad(a, 0) + P(i, 1) * qp.grad(a, 1)) * qp.weight;
        }
      }
    }
  }
  return fm;
}

int nnls_qp(const Mat& G, const Vec& q, Vec& x, double tol_rel) {
  const int n = static_cast<int>(q.size());
  if (x.size() != n) x = Vec::Zero(n);
  x = x.cwiseMax(0.0);

  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  const double tol = tol_rel * scale;

  std::vector<char> free_set(n, 0);
  for (int i = 0; i < n; ++i) free_set[i] = x[i] > 0.0;

  auto solve_on_free = [&](Vec& z) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (free_set[i]) idx.push_back(i);
    z = Vec::Zero(n);
    if (idx.empty()) return;
    Mat Gff(idx.size(), idx.size());
    Vec qf(idx.size());
    for (size_t r = 0; r < idx.size(); ++r) {
      qf[r] = q[idx[r]];
      for (size_t c = 0; c < idx.size(); ++c) Gff(r, c) = G(idx[r], idx[c]);
    }
    Eigen::LDLT<Mat> ldlt(Gff);
    Vec zf;
    if (ldlt.info() == Eigen::Success) {
      zf = ldlt.solve(-qf);
      if (!zf.allFinite() || (Gff * zf + qf).cwiseAbs().maxCoeff() > 1e-6 * scale) {
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(Gff);
        zf = cod.solve(-qf);
      }
    } else {
      Eigen::CompleteOrthogonalDecomposition<Mat> cod(Gff);
      zf = cod.solve(-qf);
    }
    for (size_t r = 0; r < idx.size(); ++r) z[idx[r]] = zf[r];
  };

  const int max_iter = 50 * (n + 1);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    Vec z;
    solve_on_free(z);

    bool feasible = true;
    for (int i = 0; i < n; ++i)
      if (free_set[i] && z[i] < -1e-14 * scale) feasible = false;

    if (feasible) {
      for (int i = 0; i < n; ++i) x[i] = free_set[i] ? std::max(z[i], 0.0) : 0.0;
      const Vec g = G * x + q;
      int enter = -1;
      double most_neg = -tol;
      for (int i = 0; i < n; ++i)
        if (!free_set[i] && g[i] < most_neg) {
          most_neg = g[i];
          enter = i;
        }
      if (enter < 0) break;
      free_set[enter] = 1;
    } else {
      // Step from x toward z until the first bound blocks; drop it.
      double alpha = 1.0;
      int blocking = -1;
      for (int i = 0; i < n; ++i) {
        if (!free_set[i] || z[i] >= 0.0) continue;
        const double denom = x[i] - z[i];
        if (denom <= 0.0) continue;
        const double a = x[i] / denom;
        if (a < alpha) {
          alpha = a;
          blocking = i;
        }
      }
      for (int i = 0; i < n; ++i)
        if (free_set[i]) x[i] = x[i] + alpha * (z[i] - x[i]);
      if (blocking >= 0) {
        x[blocking] = 0.0;
        free_set[blocking] = 0;
      } else {
        // No blocking bound found despite infeasibility: clamp and restart set.
        for (int i = 0; i < n; ++i)
          if (x[i] <= 0.0) {
            x[i] = 0.0;
            free_set[i] = 0;
          }
      }
    }
  }
  if (iter >= max_iter)
    throw NumericalError("active-set QP did not converge (final KKT residual " +
                         std::to_string((G * x + q).cwiseAbs().maxCoeff()) + ")");
  return iter;
}

namespace {

// Signed coefficients of the volumetric floor sum(A_ij) - r sum(B_i) <= 0.
Vec constraint_vector(const FeatureLibrary& lib, double r) {
  Vec a(lib.n_phi());
  for (int m = 0; m < lib.n_phi(); ++m) a[m] = lib.is_volumetric(m) ? -r : 1.0;
  return a;
}

// Equality-constrained phase with n_vol = 1: substitute
// B1 = (1/r) sum(A_ij), leaving a pure nonnegative QP in the isochoric
// coefficients.
Vec solve_equality_by_substitution(const Mat& G, const Vec& c,
                                   const FeatureLibrary& lib, double lambda,
                                   double r, const Vec* warm) {
  const int n = lib.n_phi();
  const int ni = lib.n_iso();
  // T maps reduced isochoric variables to the full vector.
  Mat T = Mat::Zero(n, ni);
  T.topLeftCorner(ni, ni).setIdentity();
  T.row(n - 1).setConstant(1.0 / r);

  const Mat Gr = T.transpose() * G * T;
  Vec qr = T.transpose() * (lambda * Vec::Ones(n) - c);

  Vec x0 = Vec::Zero(ni);
  if (warm && warm->size() == n) x0 = warm->head(ni);
  nnls_qp(Gr, qr, x0);
  return T * x0;
}

// Equality-constrained phase for general libraries: augmented Lagrangian
// with a fixed multiplier schedule around the bound-constrained solver.
Vec solve_equality_augmented(const Mat& G, const Vec& c, const FeatureLibrary& lib,
                             double lambda, double r, const Vec* warm) {
  const int n = lib.n_phi();
  const Vec a = constraint_vector(lib, r);
  const double gscale = std::max(1.0, G.diagonal().maxCoeff());
  double rho = 10.0 * gscale;
  double mu = 0.0;
  Vec x = warm && warm->size() == n ? *warm : Vec::Zero(n);
  const double ctol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
  for (int outer = 0; outer < 12; ++outer) {
    const Mat Gp = G + rho * (a * a.transpose());
    const Vec qp = lambda * Vec::Ones(n) - c + mu * a;
    nnls_qp(Gp, qp, x);
    const double viol = a.dot(x);
    if (std::abs(viol) <= std::max(ctol, 1e-12 * x.cwiseAbs().maxCoeff())) break;
    mu += rho * viol;
    if (outer % 3 == 2) rho *= 10.0;
  }
  return x;
}

}  // namespace

Vec solve_constrained_lasso_normal(const Mat& G, const Vec& c,
                                   const FeatureLibrary& lib, double lambda,
                                   double r, const Vec* warm) {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (r <= 0.0) throw ConfigError("penalty multiplier r must be positive");
  const int n = lib.n_phi();

  // Phase 1: ignore the volumetric floor.
  Vec q = lambda * Vec::Ones(n) - c;
  Vec x = warm && warm->size() == n ? *warm : Vec::Zero(n);
  nnls_qp(G, q, x);

  const Vec a = constraint_vector(lib, r);
  const double slack_tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
  if (a.dot(x) <= slack_tol) return x;

  // Phase 2: the floor binds; solve with it as an equality.
  if (lib.n_vol() == 1)
    return solve_equality_by_substitution(G, c, lib, lambda, r, &x);
  return solve_equality_augmented(G, c, lib, lambda, r, &x);
}

Vec solve_constrained_lasso(const Mat& A, const Vec& p, const FeatureLibrary& lib,
                            double lambda, double r, const Vec* warm) {
  const Mat G = 2.0 * A.transpose() * A;
  const Vec c = 2.0 * A.transpose() * p;
  return solve_constrained_lasso_normal(G, c, lib, lambda, r, warm);
}

double zero_model_rmse(const Vec& p) {
  return std::sqrt(p.squaredNorm() / static_cast<double>(p.size()));
}

std::vector<ParetoPoint> lambda_path(const Mat& A, const Vec& p,
                                     const FeatureLibrary& lib,
                                     const EuclidConfig& config, bool warm_start) {
  if (config.n_lambda < 2) throw ConfigError("n_lambda must be >= 2");
  if (config.lambda_min >= config.lambda_max)
    throw ConfigError("lambda_min must be smaller than lambda_max");

  const Mat G = 2.0 * A.transpose() * A;
  const Vec c = 2.0 * A.transpose() * p;
  const double pnorm2 = p.squaredNorm();
  const double n_rows = static_cast<double>(p.size());

  const double l0 = std::log10(config.lambda_min);
  const double l1 = std::log10(config.lambda_max);

  std::vector<ParetoPoint> path(config.n_lambda);
  Vec warm;
  for (int k = 0; k < config.n_lambda; ++k) {
    const double lambda =
        std::pow(10.0, l0 + (l1 - l0) * k / (config.n_lambda - 1.0));
    Vec kappa;
    try {
      kappa = solve_constrained_lasso_normal(
          G, c, lib, lambda, config.penalty_multiplier,
          warm_start && warm.size() > 0 ? &warm : nullptr);
    } catch (const NumericalError& err) {
      throw NumericalError(std::string(err.what()) + " (at lambda = " +
                           std::to_string(lambda) + ")");
    }
    warm = kappa;

    ParetoPoint& pt = path[k];
    pt.lambda = lambda;
    pt.kappa = kappa;
    // ||A k - p||^2 from the cached normal-equation pieces.
    const double res2 = 0.5 * kappa.dot(G * kappa) - c.dot(kappa) + pnorm2;
    pt.rmse = std::sqrt(std::max(res2, 0.0) / n_rows);
    pt.l1_norm = kappa.lpNorm<1>();
    pt.n_active = 0;
    for (int m = 0; m < kappa.size(); ++m)
      if (kappa[m] > config.active_threshold) ++pt.n_active;
  }
  return path;
}

DiscoveredModel select_model(const std::vector<ParetoPoint>& path, double tau,
                             const FeatureLibrary& lib, double active_threshold) {
  double best_rmse = std::numeric_limits<double>::infinity();
  int n_min = std::numeric_limits<int>::max();
  for (const auto& pt : path) {
    best_rmse = std::min(best_rmse, pt.rmse);
    if (pt.rmse < tau) n_min = std::min(n_min, pt.n_active);
  }
  if (n_min == std::numeric_limits<int>::max())
    throw NoAdmissibleModelError(
        "no model on the path passes RMSE < " + std::to_string(tau) +
            " (best achieved " + std::to_string(best_rmse) + ")",
        best_rmse);

  const ParetoPoint* best = nullptr;
  for (const auto& pt : path) {
    if (!(pt.rmse < tau) || pt.n_active != n_min) continue;
    // Ties in RMSE resolve toward larger lambda; the sweep is ordered by
    // increasing lambda, so >= picks the later point.
    if (!best || pt.rmse <= best->rmse) best = &pt;
  }

  DiscoveredModel model;
  model.kappa_star = best->kappa;
  model.lambda_star = best->lambda;
  model.pareto_path = path;
  model.library = lib;
  for (int m = 0; m < best->kappa.size(); ++m)
    if (best->kappa[m] > active_threshold) model.active_set.push_back(m);
  return model;
}

}  // namespace sfe
