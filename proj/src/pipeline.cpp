#include "sfe/pipeline.hpp"

#include "sfe/parallel.hpp"
#include "sfe/random.hpp"

#include <cmath>

namespace sfe {

InvariantRanges observed_invariant_ranges(const Mesh& mesh, const Vec& u) {
  const auto quad = compute_quadrature(mesh);
  InvariantRanges r;
  bool first = true;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Eigen::Matrix<double, 4, 2> u_el;
    for (int a = 0; a < 4; ++a) {
      const int n = mesh.elements[e][a];
      u_el(a, 0) = u[2 * n];
      u_el(a, 1) = u[2 * n + 1];
    }
    for (const auto& qp : quad[e].pts) {
      const Mat2 F = Mat2::Identity() + (u_el.transpose() * qp.grad).eval();
      const auto state = DeformationState::from_in_plane_F(F);
      if (first) {
        r.j1_min = r.j1_max = state.J1;
        r.j2_min = r.j2_max = state.J2;
        r.j3_min = r.j3_max = state.J3;
        first = false;
      } else {
        r.j1_min = std::min(r.j1_min, state.J1);
        r.j1_max = std::max(r.j1_max, state.J1);
        r.j2_min = std::min(r.j2_min, state.J2);
        r.j2_max = std::max(r.j2_max, state.J2);
        r.j3_min = std::min(r.j3_min, state.J3);
        r.j3_max = std::max(r.j3_max, state.J3);
      }
    }
  }
  return r;
}

EpsWResult error_eps_w(const MaterialParams& truth, const MaterialParams& disc,
                       const InvariantRanges& ranges, int n_grid) {
  if (n_grid < 2) throw ConfigError("eps_W grid needs at least 2 points per axis");
  if (!(truth.library == disc.library))
    throw ConfigError("eps_W requires matching feature libraries");

  auto linspace = [n_grid](double lo, double hi) {
    std::vector<double> v(n_grid);
    for (int k = 0; k < n_grid; ++k)
      v[k] = lo + (hi - lo) * k / (n_grid - 1.0);
    return v;
  };
  const auto j1 = linspace(ranges.j1_min, ranges.j1_max);
  const auto j2 = linspace(ranges.j2_min, ranges.j2_max);
  const auto j3 = linspace(ranges.j3_min, ranges.j3_max);

  const auto& lib = truth.library;
  const int n_phi = lib.n_phi();

  // W is separable per feature across the grid axes; precompute the factors.
  Mat f1 = Mat::Ones(n_phi, n_grid), f2 = Mat::Ones(n_phi, n_grid),
      f3 = Mat::Ones(n_phi, n_grid);
  for (int m = 0; m < lib.n_iso(); ++m) {
    const auto& t = lib.iso_terms()[m];
    for (int k = 0; k < n_grid; ++k) {
      f1(m, k) = std::pow(j1[k] - 3.0, t.i);
      f2(m, k) = std::pow(j2[k] - 3.0, t.j);
    }
  }
  for (size_t v = 0; v < lib.vol_exponents().size(); ++v) {
    const int m = lib.n_iso() + static_cast<int>(v);
    for (int k = 0; k < n_grid; ++k) {
      f1(m, k) = 1.0;
      f2(m, k) = 1.0;
      f3(m, k) = std::pow(j3[k] - 1.0, 2 * lib.vol_exponents()[v]);
    }
  }

  EpsWResult result;
  result.total = static_cast<long>(n_grid) * n_grid * n_grid;
  double acc = 0.0;
  long included = 0;
  for (int a = 0; a < n_grid; ++a)
    for (int b = 0; b < n_grid; ++b) {
      // Isochoric part depends on (a, b) only; hoist it out of the k loop.
      double wt_iso = 0.0, wd_iso = 0.0;
      for (int m = 0; m < lib.n_iso(); ++m) {
        const double phi = f1(m, a) * f2(m, b);
        wt_iso += truth.kappa[m] * phi;
        wd_iso += disc.kappa[m] * phi;
      }
      for (int c = 0; c < n_grid; ++c) {
        double wt = wt_iso, wd = wd_iso;
        for (int m = lib.n_iso(); m < n_phi; ++m) {
          wt += truth.kappa[m] * f3(m, c);
          wd += disc.kappa[m] * f3(m, c);
        }
        if (std::abs(wt) < 1e-14) {
          ++result.excluded;
          continue;
        }
        const double rel = (wt - wd) / wt;
        acc += rel * rel;
        ++included;
      }
    }
  result.value = included > 0 ? acc / included : 0.0;
  return result;
}

double error_eps_u(const Vec& u_disc, const Vec& u_true) {
  const double denom = u_true.norm();
  if (denom == 0.0) throw NumericalError("eps_u undefined for a zero true field");
  return (u_disc - u_true).norm() / denom;
}

Vec nodal_displacement_error(const Mesh& mesh, const Vec& u_disc, const Vec& u_true) {
  Vec err(mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const double mag_d = std::hypot(u_disc[2 * n], u_disc[2 * n + 1]);
    const double mag_t = std::hypot(u_true[2 * n], u_true[2 * n + 1]);
    err[n] = std::abs(mag_d - mag_t);
  }
  return err;
}

namespace {

double von_mises_2d(const Mat2& sigma) {
  const double sxx = sigma(0, 0), syy = sigma(1, 1), sxy = sigma(0, 1);
  return std::sqrt(sxx * sxx - sxx * syy + syy * syy + 3.0 * sxy * sxy);
}

}  // namespace

Vec nodal_von_mises(const Mesh& mesh, const Vec& u, const Material& material) {
  const auto quad = compute_quadrature(mesh);
  Vec numer = Vec::Zero(mesh.n_nodes());
  Vec denom = Vec::Zero(mesh.n_nodes());
  const double gp = 1.0 / std::sqrt(3.0);
  const double pts[4][2] = {{-gp, -gp}, {gp, -gp}, {gp, gp}, {-gp, gp}};

  for (int e = 0; e < mesh.n_elements(); ++e) {
    Eigen::Matrix<double, 4, 2> u_el;
    for (int a = 0; a < 4; ++a) {
      const int n = mesh.elements[e][a];
      u_el(a, 0) = u[2 * n];
      u_el(a, 1) = u[2 * n + 1];
    }
    for (int q = 0; q < 4; ++q) {
      const auto& qp = quad[e].pts[q];
      const Mat2 grad_u = (u_el.transpose() * qp.grad).eval();
      Mat2 sigma;
      if (std::holds_alternative<MaterialParams>(material)) {
        const Mat2 F = Mat2::Identity() + grad_u;
        const auto state = DeformationState::from_in_plane_F(F);
        const Mat3 S = second_pk_stress(state, std::get<MaterialParams>(material));
        // Cauchy push-forward; the in-plane block with F_33 = 1.
        sigma = (F * S.topLeftCorner<2, 2>() * F.transpose()) / state.F.determinant();
      } else {
        const auto& le = std::get<LinearElastic>(material);
        const Mat2 eps = 0.5 * (grad_u + grad_u.transpose());
        sigma = linear_elastic_stress(eps, le.youngs_modulus, le.poisson_ratio);
      }
      const double vm = von_mises_2d(sigma);
      const auto shape = shape_values(pts[q][0], pts[q][1]);
      for (int a = 0; a < 4; ++a) {
        const int n = mesh.elements[e][a];
        numer[n] += shape[a] * qp.weight * vm;
        denom[n] += shape[a] * qp.weight;
      }
    }
  }
  for (int n = 0; n < mesh.n_nodes(); ++n)
    numer[n] = denom[n] > 0.0 ? numer[n] / denom[n] : 0.0;
  return numer;
}

Mat generate_synthetic_data(const Vec& u_true, const SensorSet& sensors,
                            double sigma_e, int n_r, uint64_t seed) {
  if (sigma_e < 0.0) throw ConfigError("sigma_e must be nonnegative");
  if (n_r < 1) throw ConfigError("n_r must be >= 1");
  const auto dofs = sensors.observed_dofs();
  Mat readings(dofs.size(), n_r);
  NormalSampler noise(derive_seed(seed, "noise"));
  for (int col = 0; col < n_r; ++col)
    for (size_t row = 0; row < dofs.size(); ++row)
      readings(row, col) =
          u_true[dofs[row]] + (sigma_e > 0.0 ? sigma_e * noise.draw() : 0.0);
  return readings;
}

CaseSetup prepare_case(const BenchmarkConfig& config) {
  CaseSetup setup;
  setup.mesh = build_plate_with_hole(config.mesh.width, config.mesh.height,
                                     config.mesh.hole_radius, config.mesh.refinement);
  setup.sensors =
      place_sensors(setup.mesh, config.sensor_layout(), config.mesh.width,
                    config.mesh.height, config.mesh.hole_radius);
  LoadCase load{config.t_max, config.eta};
  setup.u_true =
      solve_forward(setup.mesh, config.truth_params(), load, config.solver).u;
  setup.readings = generate_synthetic_data(setup.u_true, setup.sensors,
                                           config.noise.sigma_e, config.noise.n_r,
                                           config.seed);
  return setup;
}

StatFemEuclidResult run_statfem_euclid(const BenchmarkConfig& config) {
  const auto setup = prepare_case(config);
  const auto& mesh = setup.mesh;
  const auto lib = config.library();
  const auto truth = config.truth_params();
  const LoadCase load{config.t_max, config.eta};

  ObservationSet obs;
  obs.observed_dofs = setup.sensors.observed_dofs();
  obs.readings = setup.readings;
  obs.sigma_e = std::max(config.noise.sigma_e, config.loop.sigma_e_floor);
  const Vec y_mean = setup.readings.rowwise().mean();

  TractionRandomField field;
  field.mu_t = config.eta * config.t_max * Vec2(1.0, 0.0);
  field.sigma_t = config.pce.sigma_t_ratio * config.t_max * Vec2(1.0, 0.0);

  const double tol = config.resolved_tol();
  const auto ranges = observed_invariant_ranges(mesh, setup.u_true);

  // External force of the data-generating load; right-hand side of the
  // weak-form regression.
  const Vec p_full = external_force(mesh, load);
  const auto free_rows = mesh.free_dofs();
  Vec p_free(free_rows.size());
  for (size_t r = 0; r < free_rows.size(); ++r) p_free[r] = p_full[free_rows[r]];

  Material current;
  bool has_model = false;
  DiscoveredModel model;
  if (!config.initial_coeffs.empty()) {
    const auto initial = MaterialParams::from_named(config.initial_coeffs, lib);
    current = initial;
    has_model = true;
    model.kappa_star = initial.kappa;
    model.library = lib;
    model.active_set = initial.active_set(config.euclid.active_threshold);
  } else {
    current = config.prior;
  }

  // Small-strain equivalent of the linear prior within the library, the
  // fallback blend target when a forecast with a freshly fitted model fails.
  const double mu_prior = config.prior.youngs_modulus /
                          (2.0 * (1.0 + config.prior.poisson_ratio));
  const double k_prior = config.prior.youngs_modulus /
                         (3.0 * (1.0 - 2.0 * config.prior.poisson_ratio));
  Vec stable_kappa =
      MaterialParams::from_named({{"A10", 0.5 * mu_prior}, {"B1", 0.5 * k_prior}},
                                 lib)
          .kappa;
  if (std::holds_alternative<MaterialParams>(current))
    stable_kappa = std::get<MaterialParams>(current).kappa;

  // Forecast with progressively finer load stepping, then by blending the
  // candidate model toward the last model that produced a stable forecast.
  auto robust_forecast = [&](Material& mat) {
    for (int blend = 0; blend < 5; ++blend) {
      for (int attempt = 0; attempt < 2; ++attempt) {
        SolverSettings settings = config.solver;
        if (attempt == 1) settings.n_load_steps *= 4;
        try {
          auto pce = forecast_pce(mesh, mat, load, field, settings, config.pce,
                                  config.jobs);
          if (std::holds_alternative<MaterialParams>(mat))
            stable_kappa = std::get<MaterialParams>(mat).kappa;
          return pce;
        } catch (const NumericalError&) {
        }
      }
      if (!std::holds_alternative<MaterialParams>(mat)) break;
      mat = MaterialParams(
          0.5 * (std::get<MaterialParams>(mat).kappa + stable_kappa), lib);
    }
    throw NumericalError("forecast solves kept failing after load-step "
                         "refinement and model blending");
  };

  StatFemEuclidResult result;
  result.u_true = setup.u_true;
  result.tol = tol;

  // Fixed-point acceleration state: the last two raw (unaccelerated) fitted
  // models. The volumetric modulus contracts geometrically but slowly via
  // the assimilation span, which Aitken extrapolation short-circuits.
  Vec raw_prev1, raw_prev2;
  auto accelerate = [&](const Vec& raw) {
    Vec out = raw;
    if (raw_prev1.size() == raw.size() && raw_prev2.size() == raw.size()) {
      for (int m = 0; m < raw.size(); ++m) {
        const double d1 = raw_prev1[m] - raw_prev2[m];
        const double d2 = raw[m] - raw_prev1[m];
        // geometric, monotone, contracting components only
        if (d1 * d2 > 0.0 && std::abs(d2) < 0.95 * std::abs(d1)) {
          const double r = d2 / d1;
          double extra = d2 * r / (1.0 - r);
          const double cap = 3.0 * std::abs(d2);
          extra = std::clamp(extra, -cap, cap);
          out[m] += extra;
        }
      }
      out = out.cwiseMax(0.0);
      // keep the volumetric floor satisfied
      double iso = 0.0, vol = 0.0;
      for (int m = 0; m < lib.n_phi(); ++m)
        (lib.is_volumetric(m) ? vol : iso) += out[m];
      if (iso - config.euclid.penalty_multiplier * vol > 0.0 && vol > 0.0) {
        const double scale = iso / (config.euclid.penalty_multiplier * vol);
        for (int m = lib.n_iso(); m < lib.n_phi(); ++m) out[m] *= scale;
      }
      raw_prev1 = Vec();
      raw_prev2 = Vec();
    } else {
      raw_prev2 = raw_prev1;
      raw_prev1 = raw;
    }
    return out;
  };

  auto record_metrics = [&](IterationRecord& rec, const Vec& kappa) {
    const MaterialParams params(kappa, lib);
    const auto ew = error_eps_w(truth, params, ranges);
    rec.eps_w = ew.value;
    rec.eps_w_excluded = ew.excluded;
    const Vec u_disc = solve_forward(mesh, params, load, config.solver).u;
    rec.eps_u = error_eps_u(u_disc, setup.u_true);
    rec.kappa = kappa;
  };

  const double p_rms = zero_model_rmse(p_free);

  for (int iteration = 1; iteration <= config.loop.max_iterations; ++iteration) {
    IterationRecord rec;
    rec.iteration = iteration;

    const auto pce = robust_forecast(current);
    const auto forecast = pce_moments(pce);

    // The printed update: forecast conditioned through the chaos covariance
    // alone. Its sensor misfit is the convergence statistic, which stays
    // honest about the current model because the chaos span cannot absorb a
    // constitutive mismatch.
    const auto posterior = posterior_update(forecast, obs);
    const auto at_sensors = predict_at_sensors(posterior, obs.observed_dofs);
    rec.rmse_u = rmse_sensors(at_sensors.mean, y_mean, setup.sensors.n_sen());

    // Constitutive-model error channel for the discovery field: as long as
    // the forecast misses the data by more than the convergence threshold,
    // the state equation of the current model is itself in doubt; a force
    // residual of scale sigma_s is propagated through the tangent, opening
    // smooth field corrections outside the chaos span. Anneals away as the
    // misfit approaches TOL, recovering the plain update.
    GaussianField discovery_posterior = posterior;
    if (config.loop.sigma_s_scale > 0.0) {
      Vec h_mu(obs.n_gsen());
      for (int r = 0; r < obs.n_gsen(); ++r)
        h_mu[r] = forecast.mean[obs.observed_dofs[r]];
      const double rmse_f = rmse_sensors(h_mu, y_mean, setup.sensors.n_sen());
      const double gate = std::clamp(rmse_f / tol - 1.0, 0.0, 1.0);
      // Magnitude tied to the unexplained amplitude: the relative sensor
      // misfit sets the force-residual scale.
      const double rel_misfit =
          y_mean.norm() > 0.0 ? (h_mu - y_mean).norm() / y_mean.norm() : 0.0;
      const double sigma_s = config.loop.sigma_s_scale * p_rms * rel_misfit * gate;
      if (sigma_s > 0.0) {
        Eigen::SparseMatrix<double> tangent;
        try {
          tangent = assemble_tangent(mesh, forecast.mean, current);
        } catch (const NumericalError&) {
          tangent = assemble_tangent(mesh, Vec::Zero(mesh.n_gdof()), current);
        }
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(tangent);
        if (lu.info() == Eigen::Success) {
          Mat compliance = lu.solve(Mat::Identity(mesh.n_gdof(), mesh.n_gdof()));
          for (int d : mesh.dirichlet_dofs) compliance.row(d).setZero();
          GaussianField widened = forecast;
          widened.cov.noalias() +=
              (sigma_s * sigma_s) * (compliance * compliance.transpose());
          discovery_posterior = posterior_update(widened, obs);
        }
      }
    }

    // Two assemblies with distinct roles: the reported discovery runs on the
    // printed (plain) posterior and must pass tau; the loop's next forecast
    // model comes from the data-informed channel field, whose fit residual
    // is allowed to be worse.
    FeatureMatrix fm;
    FeatureMatrix fm_feed;
    const bool feed_is_plain = discovery_posterior.mean == posterior.mean;
    if (!config.loop.freeze_model) {
      fm = assemble_feature_matrix(mesh, posterior.mean, lib);
      fm_feed = feed_is_plain
                    ? fm
                    : assemble_feature_matrix(mesh, discovery_posterior.mean, lib);
    }

    if (rec.rmse_u < tol) {
      rec.converged = true;
      // A run can converge before any model passed the admissibility
      // threshold (the prior-driven iterations fit the data while tau still
      // rejected their discoveries); harvest the converged posterior once.
      if (!has_model && !config.loop.freeze_model) {
        const auto path = lambda_path(fm.free_block(), p_free, lib, config.euclid);
        try {
          model = select_model(path, config.euclid.tau, lib,
                               config.euclid.active_threshold);
          model.n_rows = static_cast<int>(free_rows.size());
          has_model = true;
          rec.model_updated = true;
        } catch (const NoAdmissibleModelError&) {
          rec.admissible = false;
        }
      }
      if (has_model) record_metrics(rec, model.kappa_star);
      result.history.push_back(std::move(rec));
      result.converged = true;
      break;
    }

    if (!config.loop.freeze_model) {
      // Reported discovery: tau-gated parsimonious selection on the printed
      // posterior.
      const auto path = lambda_path(fm.free_block(), p_free, lib, config.euclid);
      double best_rmse = std::numeric_limits<double>::infinity();
      for (const auto& pt : path) best_rmse = std::min(best_rmse, pt.rmse);
      if (best_rmse < config.euclid.tau) {
        model = select_model(path, config.euclid.tau, lib,
                             config.euclid.active_threshold);
        model.n_rows = static_cast<int>(free_rows.size());
        has_model = true;
        rec.model_updated = true;
      } else {
        rec.admissible = false;  // the discovered model keeps its old value
      }

      // Loop driver: candidate models proposed by the regression on the
      // data-informed field, ranked by their forward predictive misfit at
      // the sensors. The weak form is nearly blind along the correlated
      // (J1-3)/(J2-3) feature directions; the forward response is not.
      const auto path_feed =
          feed_is_plain
              ? path
              : lambda_path(fm_feed.free_block(), p_free, lib, config.euclid);
      const ParetoPoint* argmin_pt = &path_feed.front();
      std::map<int, const ParetoPoint*> per_count;
      for (const auto& pt : path_feed) {
        if (pt.rmse < argmin_pt->rmse) argmin_pt = &pt;
        auto& slot = per_count[pt.n_active];
        if (!slot || pt.rmse < slot->rmse) slot = &pt;
      }

      std::vector<Vec> candidates;
      for (const auto& [count, pt] : per_count)
        if (count >= 1) candidates.push_back(pt->kappa);

      // Secant amplitude variant: the forecast/data amplitude mismatch
      // carries first-order stiffness information that a fit on a field of
      // the wrong shape may contradict; offer a magnitude-rescaled copy of
      // the best fit.
      auto shear_modulus = [&](const Vec& kappa) {
        double mu = 0.0;
        for (int m = 0; m < lib.n_iso(); ++m) {
          const auto& t = lib.iso_terms()[m];
          if (t.i + t.j == 1) mu += 2.0 * kappa[m];
        }
        return mu;
      };
      {
        Vec h_mu(obs.n_gsen());
        for (int r = 0; r < obs.n_gsen(); ++r)
          h_mu[r] = forecast.mean[obs.observed_dofs[r]];
        const double amp_ratio =
            y_mean.norm() > 0.0 ? h_mu.norm() / y_mean.norm() : 1.0;
        const double mu_fit = shear_modulus(argmin_pt->kappa);
        const double mu_cur =
            std::holds_alternative<MaterialParams>(current)
                ? shear_modulus(std::get<MaterialParams>(current).kappa)
                : mu_prior;
        if (mu_fit > 0.0 && std::abs(amp_ratio - 1.0) > 0.2)
          candidates.push_back(argmin_pt->kappa * (mu_cur * amp_ratio / mu_fit));
      }

      // Fixed-point-accelerated variant of the raw best-fit sequence.
      const Vec accelerated = accelerate(argmin_pt->kappa);
      if ((accelerated - argmin_pt->kappa).norm() > 0.0)
        candidates.push_back(accelerated);
      if (std::holds_alternative<MaterialParams>(current))
        candidates.push_back(std::get<MaterialParams>(current).kappa);

      // The weak form is locally degenerate in two directions: the first
      // order isochoric split (J1-3) vs (J2-3) at fixed shear modulus, and
      // the weakly observed volumetric scale. Scan both predictively with
      // cleaned candidates (higher-order leakage stripped).
      {
        const Vec& base = argmin_pt->kappa;

        // Truncations of the best fit to its largest few terms, always
        // retaining the dominant volumetric coefficient.
        std::vector<int> order(lib.n_phi());
        for (int m = 0; m < lib.n_phi(); ++m) order[m] = m;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return base[a] > base[b]; });
        int vol_idx = lib.n_iso();
        for (int m = lib.n_iso(); m < lib.n_phi(); ++m)
          if (base[m] > base[vol_idx]) vol_idx = m;
        for (int keep : {2, 3, 4}) {
          Vec v = Vec::Zero(lib.n_phi());
          for (int k = 0; k < keep && k < lib.n_phi(); ++k)
            v[order[k]] = base[order[k]];
          v[vol_idx] = base[vol_idx];
          candidates.push_back(v);
        }

        // Clean split scan: total first-order isochoric weight redistributed
        // between (J1-3) and (J2-3) with the fitted volumetric part.
        const double iso_total = base[0] + base[1];
        if (iso_total > 0.0) {
          for (int k = 0; k <= 6; ++k) {
            const double t = k / 6.0;
            Vec v = Vec::Zero(lib.n_phi());
            v[0] = t * iso_total;
            v[1] = (1.0 - t) * iso_total;
            for (int m = lib.n_iso(); m < lib.n_phi(); ++m) v[m] = base[m];
            candidates.push_back(v);
          }
        }

        if (std::holds_alternative<MaterialParams>(current)) {
          for (double f : {0.9, 1.1}) {
            Vec v = std::get<MaterialParams>(current).kappa;
            for (int m = lib.n_iso(); m < lib.n_phi(); ++m) v[m] *= f;
            candidates.push_back(v);
          }
        }
      }

      auto predictive_rmse = [&](const Vec& kappa) {
        try {
          const auto sol = solve_forward(mesh, MaterialParams(kappa, lib), load,
                                         config.solver);
          Vec h_u(obs.n_gsen());
          for (int r = 0; r < obs.n_gsen(); ++r)
            h_u[r] = sol.u[obs.observed_dofs[r]];
          return rmse_sensors(h_u, y_mean, setup.sensors.n_sen());
        } catch (const NumericalError&) {
          return std::numeric_limits<double>::infinity();
        }
      };

      std::vector<double> scores(candidates.size());
      parallel_for(static_cast<int>(candidates.size()), config.jobs,
                   [&](int c) { scores[c] = predictive_rmse(candidates[c]); });
      int winner = -1;
      for (size_t c = 0; c < candidates.size(); ++c)
        if (winner < 0 || scores[c] < scores[winner]) winner = static_cast<int>(c);
      if (winner >= 0 && std::isfinite(scores[winner]))
        current = MaterialParams(candidates[winner], lib);
    }

    if (has_model)
      record_metrics(rec, model.kappa_star);
    else if (std::holds_alternative<MaterialParams>(current))
      rec.kappa = std::get<MaterialParams>(current).kappa;
    result.history.push_back(std::move(rec));
  }

  result.has_model = has_model;
  if (has_model) {
    result.model = model;
    const MaterialParams params(model.kappa_star, lib);
    result.u_disc = solve_forward(mesh, params, load, config.solver).u;
    const auto ew = error_eps_w(truth, params, ranges);
    result.eps_w = ew.value;
    result.eps_w_excluded = ew.excluded;
    result.eps_u = error_eps_u(result.u_disc, setup.u_true);
  }
  return result;
}

BaselineResult run_euclid_baseline(const Mat& readings, const SensorSet& sensors,
                                   const BenchmarkConfig& config) {
  BaselineResult result;
  if (sensors.n_sen() < 10) {
    result.status = BaselineStatus::insufficient_sensors;
    result.message = "cannot build a usable mesh around " +
                     std::to_string(sensors.n_sen()) + " sensors";
    return result;
  }

  Mesh smesh;
  try {
    smesh = build_sensor_mesh(sensors.positions, config.mesh.width,
                              config.mesh.height, config.mesh.hole_radius);
  } catch (const NumericalError& err) {
    result.status = BaselineStatus::insufficient_sensors;
    result.message = err.what();
    return result;
  }
  if (smesh.neumann_edges.empty()) {
    result.status = BaselineStatus::insufficient_sensors;
    result.message = "sensor mesh has no loaded-boundary edges";
    return result;
  }

  // Nodal data: measured displacements at sensors, zero at the anchors.
  const Vec y_mean = readings.rowwise().mean();
  Vec u_data = Vec::Zero(smesh.n_gdof());
  for (int s = 0; s < sensors.n_sen(); ++s) {
    u_data[2 * s] = y_mean[2 * s];
    u_data[2 * s + 1] = y_mean[2 * s + 1];
  }

  const auto lib = config.library();
  const LoadCase load{config.t_max, config.eta};
  try {
    const auto fm = assemble_feature_matrix(smesh, u_data, lib);
    const Vec p_full = external_force(smesh, load);
    const auto free_rows = smesh.free_dofs();
    Mat A_free(free_rows.size(), lib.n_phi());
    Vec p_free(free_rows.size());
    for (size_t r = 0; r < free_rows.size(); ++r) {
      A_free.row(r) = fm.A.row(free_rows[r]);
      p_free[r] = p_full[free_rows[r]];
    }
    const auto path = lambda_path(A_free, p_free, lib, config.euclid);
    result.model = select_model(path, config.euclid.tau, lib,
                                config.euclid.active_threshold);
    result.model.n_rows = static_cast<int>(free_rows.size());
  } catch (const NoAdmissibleModelError& err) {
    result.status = BaselineStatus::no_admissible_model;
    result.message = err.what();
    return result;
  } catch (const NumericalError& err) {
    result.status = BaselineStatus::insufficient_sensors;
    result.message = err.what();
    return result;
  }

  // Metrics against the truth on the full plate mesh.
  const auto full = prepare_case(config);
  const auto truth = config.truth_params();
  const MaterialParams params(result.model.kappa_star, lib);
  const auto ranges = observed_invariant_ranges(full.mesh, full.u_true);
  const auto ew = error_eps_w(truth, params, ranges);
  result.eps_w = ew.value;
  result.eps_w_excluded = ew.excluded;
  result.u_disc = solve_forward(full.mesh, params, load, config.solver).u;
  result.eps_u = error_eps_u(result.u_disc, full.u_true);
  return result;
}

}  // namespace sfe
