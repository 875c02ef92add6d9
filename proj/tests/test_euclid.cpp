#include "sfe/euclid.hpp"

#include "sfe/random.hpp"
#include "sfe/solver.hpp"

#include <doctest.h>

using namespace sfe;

namespace {

MaterialParams neo_hookean() {
  return MaterialParams::from_named({{"A10", 0.5}, {"B1", 1.5}}, FeatureLibrary(3, 1));
}

MaterialParams mooney_rivlin() {
  return MaterialParams::from_named({{"A10", 0.3}, {"A01", 0.2}, {"B1", 1.5}},
                                    FeatureLibrary(3, 1));
}

Vec random_displacement(const Mesh& mesh, NormalSampler& sampler,
                        double scale = 0.004) {
  Vec u(mesh.n_gdof());
  for (int i = 0; i < u.size(); ++i) u[i] = scale * sampler.draw();
  return u;
}

// KKT verification of min ||A k - p||^2 + lambda 1'k, k >= 0 with the
// volumetric floor a'k <= 0. A multiplier mu >= 0 must exist such that the
// reduced gradient grad + mu a vanishes on positive coordinates and is
// nonnegative on zero coordinates; the admissible mu values form an
// interval, which we intersect explicitly.
struct KktReport {
  double slackness = 0.0;           // max |kappa_j (grad + mu a)_j|
  double dual_infeasibility = 0.0;  // interval emptiness measure
  double constraint_violation = 0.0;
};

KktReport kkt_report(const Mat& A, const Vec& p, const FeatureLibrary& lib,
                     double lambda, double r, const Vec& kappa, double tol) {
  const Vec grad = 2.0 * A.transpose() * (A * kappa - p) +
                   lambda * Vec::Ones(kappa.size());
  Vec a(lib.n_phi());
  for (int m = 0; m < lib.n_phi(); ++m) a[m] = lib.is_volumetric(m) ? -r : 1.0;

  const double slack = a.dot(kappa);
  double mu_lo = 0.0;
  // Complementary slackness: an inactive constraint forces mu = 0.
  double mu_hi = slack < -tol ? 0.0 : std::numeric_limits<double>::infinity();
  for (int m = 0; m < kappa.size(); ++m) {
    const double g = grad[m];
    if (kappa[m] > 1e-10) {
      // need |g + mu a_m| <= tol
      const double lo = (-tol - g) / a[m];
      const double hi = (tol - g) / a[m];
      mu_lo = std::max(mu_lo, std::min(lo, hi));
      mu_hi = std::min(mu_hi, std::max(lo, hi));
    } else {
      // need g + mu a_m >= -tol
      if (a[m] > 0.0)
        mu_lo = std::max(mu_lo, (-tol - g) / a[m]);
      else
        mu_hi = std::min(mu_hi, (-tol - g) / a[m]);
    }
  }

  KktReport rep;
  rep.constraint_violation = std::max(0.0, slack);
  rep.dual_infeasibility = std::max(0.0, mu_lo - mu_hi);
  const double mu = std::min(std::max(0.0, mu_lo), mu_hi);
  for (int m = 0; m < kappa.size(); ++m)
    rep.slackness = std::max(rep.slackness, std::abs(kappa[m] * (grad[m] + mu * a[m])));
  return rep;
}

}  // namespace

TEST_CASE("feature matrix of the undeformed state is zero; 10 columns") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto fm =
      assemble_feature_matrix(mesh, Vec::Zero(mesh.n_gdof()), FeatureLibrary(3, 1));
  CHECK(fm.A.cols() == 10);
  CHECK(fm.A.norm() < 1e-13);
  CHECK(fm.free_rows.size() + mesh.dirichlet_dofs.size() ==
        static_cast<size_t>(mesh.n_gdof()));
}

TEST_CASE("A(u) kappa reproduces the internal force for random fields") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const FeatureLibrary lib(3, 1);
  NormalSampler sampler(derive_seed(21, "weakform"));
  for (int trial = 0; trial < 50; ++trial) {
    const Vec u = random_displacement(mesh, sampler);
    Vec kappa(lib.n_phi());
    for (int m = 0; m < kappa.size(); ++m) kappa[m] = std::abs(sampler.draw());
    const auto fm = assemble_feature_matrix(mesh, u, lib);
    const Vec via_features = fm.A * kappa;
    const Vec direct = internal_force(mesh, u, MaterialParams(kappa, lib));
    CHECK((via_features - direct).norm() <= 1e-10 * direct.norm());
  }
}

TEST_CASE("bound-constrained QP satisfies its optimality conditions") {
  NormalSampler sampler(derive_seed(22, "qp"));
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6;
    Mat B(n + 3, n);
    for (int r = 0; r < B.rows(); ++r)
      for (int c = 0; c < n; ++c) B(r, c) = sampler.draw();
    const Mat G = 2.0 * B.transpose() * B;
    Vec q(n);
    for (int i = 0; i < n; ++i) q[i] = sampler.draw();

    Vec x;
    nnls_qp(G, q, x);
    CHECK(x.minCoeff() >= 0.0);
    const Vec g = G * x + q;
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(x[i] * g[i]) < 1e-9 * std::max(1.0, q.cwiseAbs().maxCoeff()));
      if (x[i] == 0.0) CHECK(g[i] > -1e-9 * std::max(1.0, q.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("huge lambda drives the solution to exactly zero") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto truth = neo_hookean();
  const auto u = solve_forward(mesh, truth, LoadCase{0.5, 1.0}, {}).u;
  const auto fm = assemble_feature_matrix(mesh, u, truth.library);
  const Mat A = fm.free_block();
  const Vec p = fm.restrict_rows(external_force(mesh, LoadCase{0.5, 1.0}));
  const Vec kappa = solve_constrained_lasso(A, p, truth.library, 1e10, 3.0);
  CHECK(kappa.norm() == 0.0);
}

TEST_CASE("noiseless full-field discovery recovers the truth models") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 2);
  const LoadCase load{0.5, 1.0};
  SolverSettings settings;
  settings.newton_tol = 1e-12;
  EuclidConfig config;
  config.lambda_min = 1e-11;
  config.lambda_max = 1e4;
  config.n_lambda = 200;
  config.tau = 7e-5;

  SUBCASE("Neo-Hookean") {
    const auto truth = neo_hookean();
    const auto u = solve_forward(mesh, truth, load, settings).u;
    const auto fm = assemble_feature_matrix(mesh, u, truth.library);
    const Mat A = fm.free_block();
    const Vec p = fm.restrict_rows(external_force(mesh, load));
    const auto path = lambda_path(A, p, truth.library, config);
    const auto model = select_model(path, config.tau, truth.library);
    CHECK(model.active_set == std::vector<int>{0, 9});
    CHECK(model.kappa_star[0] == doctest::Approx(0.5).epsilon(0.01));
    CHECK(model.kappa_star[9] == doctest::Approx(1.5).epsilon(0.01));
  }

  SUBCASE("Mooney-Rivlin") {
    const auto truth = mooney_rivlin();
    const auto u = solve_forward(mesh, truth, load, settings).u;
    const auto fm = assemble_feature_matrix(mesh, u, truth.library);
    const Mat A = fm.free_block();
    const Vec p = fm.restrict_rows(external_force(mesh, load));
    const auto path = lambda_path(A, p, truth.library, config);
    const auto model = select_model(path, config.tau, truth.library);
    CHECK(model.active_set == std::vector<int>{0, 1, 9});
    CHECK(model.kappa_star[0] == doctest::Approx(0.3).epsilon(0.02));
    CHECK(model.kappa_star[1] == doctest::Approx(0.2).epsilon(0.02));
    CHECK(model.kappa_star[9] == doctest::Approx(1.5).epsilon(0.02));
  }
}

TEST_CASE("KKT conditions hold along the path, including the bound floor") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto truth = neo_hookean();
  const auto u = solve_forward(mesh, truth, LoadCase{0.5, 1.0}, {}).u;
  const auto fm = assemble_feature_matrix(mesh, u, truth.library);
  const Mat A = fm.free_block();
  const Vec p = fm.restrict_rows(external_force(mesh, LoadCase{0.5, 1.0}));
  const double scale = std::max(1.0, (2.0 * A.transpose() * p).cwiseAbs().maxCoeff());

  for (double lambda : {1e-8, 1e-4, 1e-1, 1e2}) {
    const Vec kappa = solve_constrained_lasso(A, p, truth.library, lambda, 3.0);
    CHECK(kappa.minCoeff() >= 0.0);
    const auto rep = kkt_report(A, p, truth.library, lambda, 3.0, kappa, 1e-9 * scale);
    CHECK(rep.slackness < 1e-7 * scale);
    CHECK(rep.dual_infeasibility == 0.0);
    CHECK(rep.constraint_violation < 1e-10);
  }
}

TEST_CASE("volumetric floor activates when the data demands it") {
  // Data produced by a model violating sum_iso <= r sum_vol forces the
  // equality phase.
  NormalSampler sampler(derive_seed(23, "floor"));
  const FeatureLibrary lib(3, 1);
  Mat A(40, lib.n_phi());
  for (int r = 0; r < A.rows(); ++r)
    for (int c = 0; c < A.cols(); ++c) A(r, c) = sampler.draw();
  Vec kappa_viol = Vec::Zero(lib.n_phi());
  kappa_viol[0] = 3.0;  // A10
  kappa_viol[9] = 0.5;  // B1 -> 3.0 - 3 * 0.5 = 1.5 > 0 violates the floor
  const Vec p = A * kappa_viol;

  const double lambda = 1e-6;
  const Vec kappa = solve_constrained_lasso(A, p, lib, lambda, 3.0);
  Vec a(lib.n_phi());
  for (int m = 0; m < lib.n_phi(); ++m) a[m] = lib.is_volumetric(m) ? -3.0 : 1.0;
  CHECK(std::abs(a.dot(kappa)) < 1e-9);  // lands on the boundary
  const auto rep = kkt_report(A, p, lib, lambda, 3.0, kappa, 1e-7);
  CHECK(rep.slackness < 1e-6);
  CHECK(rep.dual_infeasibility == 0.0);
}

TEST_CASE("augmented-Lagrangian path handles two volumetric terms") {
  NormalSampler sampler(derive_seed(24, "aug"));
  const FeatureLibrary lib(3, 2);
  Mat A(40, lib.n_phi());
  for (int r = 0; r < A.rows(); ++r)
    for (int c = 0; c < A.cols(); ++c) A(r, c) = sampler.draw();
  Vec kappa_viol = Vec::Zero(lib.n_phi());
  kappa_viol[0] = 2.0;
  kappa_viol[9] = 0.1;   // B1
  kappa_viol[10] = 0.1;  // B2: 2.0 - 3 * 0.2 = 1.4 > 0 violates
  const Vec p = A * kappa_viol;

  const Vec kappa = solve_constrained_lasso(A, p, lib, 1e-6, 3.0);
  Vec a(lib.n_phi());
  for (int m = 0; m < lib.n_phi(); ++m) a[m] = lib.is_volumetric(m) ? -3.0 : 1.0;
  CHECK(kappa.minCoeff() >= 0.0);
  CHECK(std::abs(a.dot(kappa)) < 1e-8 * std::max(1.0, kappa.cwiseAbs().maxCoeff()));
}

TEST_CASE("rescaling A and p together leaves the unpenalized argmin unchanged") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto truth = neo_hookean();
  const auto u = solve_forward(mesh, truth, LoadCase{0.5, 1.0}, {}).u;
  const auto fm = assemble_feature_matrix(mesh, u, truth.library);
  const Mat A = fm.free_block();
  const Vec p = fm.restrict_rows(external_force(mesh, LoadCase{0.5, 1.0}));

  const Vec base = solve_constrained_lasso(A, p, truth.library, 0.0, 3.0);
  const Vec scaled =
      solve_constrained_lasso(1000.0 * A, 1000.0 * p, truth.library, 0.0, 3.0);
  CHECK((base - scaled).norm() <= 1e-8 * std::max(1.0, base.norm()));
}

TEST_CASE("path structure: l1 nonincreasing, RMSE nondecreasing, warm = cold") {
  const auto mesh = build_plate_with_hole(1.0, 1.0, 0.25, 1);
  const auto truth = neo_hookean();
  const auto u = solve_forward(mesh, truth, LoadCase{0.5, 1.0}, {}).u;
  const auto fm = assemble_feature_matrix(mesh, u, truth.library);
  const Mat A = fm.free_block();
  const Vec p = fm.restrict_rows(external_force(mesh, LoadCase{0.5, 1.0}));

  EuclidConfig config;
  config.lambda_min = 1e-8;
  config.lambda_max = 1e4;
  config.n_lambda = 120;

  const auto warm = lambda_path(A, p, truth.library, config, true);
  const auto cold = lambda_path(A, p, truth.library, config, false);
  REQUIRE(warm.size() == 120);

  const double l1_scale = warm.front().l1_norm;
  const double rmse_scale = std::max(warm.back().rmse, 1e-30);
  for (size_t k = 1; k < warm.size(); ++k) {
    CHECK(warm[k].l1_norm <= warm[k - 1].l1_norm + 1e-8 * l1_scale);
    CHECK(warm[k].rmse >= warm[k - 1].rmse - 1e-8 * rmse_scale);
  }
  for (size_t k = 0; k < warm.size(); k += 11) {
    const double denom = std::max(1.0, cold[k].kappa.norm());
    CHECK((warm[k].kappa - cold[k].kappa).norm() <= 1e-7 * denom);
  }
}

TEST_CASE("model selection: admissibility, parsimony, tie-breaks") {
  const FeatureLibrary lib(3, 1);
  auto point = [&](double lambda, double rmse, std::vector<double> coeffs) {
    ParetoPoint pt;
    pt.lambda = lambda;
    pt.rmse = rmse;
    pt.kappa = Vec::Zero(lib.n_phi());
    for (size_t i = 0; i < coeffs.size(); ++i) pt.kappa[i] = coeffs[i];
    pt.l1_norm = pt.kappa.lpNorm<1>();
    pt.n_active = 0;
    for (int m = 0; m < pt.kappa.size(); ++m)
      if (pt.kappa[m] > 1e-10) ++pt.n_active;
    return pt;
  };

  SUBCASE("single admissible point wins") {
    std::vector<ParetoPoint> path = {point(1.0, 5.0, {1, 1, 1}),
                                     point(2.0, 0.5, {1, 0.5}),
                                     point(3.0, 9.0, {1})};
    const auto model = select_model(path, 1.0, lib);
    CHECK(model.lambda_star == 2.0);
  }

  SUBCASE("fewer active terms beat a better fit") {
    std::vector<ParetoPoint> path = {point(1.0, 0.1, {1, 1, 1}),
                                     point(2.0, 0.5, {1, 0.5})};
    const auto model = select_model(path, 1.0, lib);
    CHECK(model.lambda_star == 2.0);
    CHECK(model.active_set.size() == 2);
  }

  SUBCASE("exact RMSE tie resolves toward larger lambda") {
    std::vector<ParetoPoint> path = {point(1.0, 0.5, {1, 2}),
                                     point(4.0, 0.5, {2, 1})};
    const auto model = select_model(path, 1.0, lib);
    CHECK(model.lambda_star == 4.0);
  }

  SUBCASE("no admissible point raises with the best achieved RMSE") {
    std::vector<ParetoPoint> path = {point(1.0, 5.0, {1}), point(2.0, 7.0, {1})};
    CHECK_THROWS_AS(select_model(path, 1.0, lib), NoAdmissibleModelError);
    try {
      select_model(path, 1.0, lib);
    } catch (const NoAdmissibleModelError& err) {
      CHECK(err.best_rmse == 5.0);
    }
  }
}
