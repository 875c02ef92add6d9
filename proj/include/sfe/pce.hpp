#pragma once

#include "sfe/solver.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace sfe {

/// Boundary traction modeled as mean + stddev * xi with xi ~ N(0, 1).
struct TractionRandomField {
  Vec2 mu_t = Vec2(0.5, 0.0);     // MPa
  Vec2 sigma_t = Vec2(0.025, 0.0);

  Vec2 sample(double xi) const { return mu_t + sigma_t * xi; }
};

/// Hermite chaos surrogate u(xi) ~ sum_j coeffs[j] He_j(xi) (probabilists'
/// convention, <He_j^2> = j!).
struct PCExpansion {
  std::vector<Vec> coeffs;  // order + 1 vectors of length n_gdof
  int order() const { return static_cast<int>(coeffs.size()) - 1; }
  double fit_residual = 0.0;  // relative Frobenius residual of the regression

  Vec evaluate(double xi) const;
};

struct GaussianField {
  Vec mean;
  Mat cov;
};

/// Probabilists' Hermite polynomial He_j(x).
double hermite(int j, double x);

/// Inverse standard normal CDF (used for stratified sampling nodes).
double normal_quantile(double p);

/// Deterministic stratified sampling nodes Phi^{-1}((s - 0.5) / S).
std::vector<double> stratified_normal_nodes(int count);

Vec2 sample_traction(const TractionRandomField& field, double xi);

/// Least-squares Hermite regression through the sample set. Throws on
/// rank-deficient designs (duplicate xi values) or too few samples.
PCExpansion fit_pce(const std::vector<std::pair<double, Vec>>& samples, int order);

/// Mean u_0 and covariance sum_j j! u_j u_j' of the surrogate.
GaussianField pce_moments(const PCExpansion& expansion);

struct PceConfig {
  int order = 3;
  int n_samples = 20;
  double sigma_t_ratio = 0.05;  // sigma_t = ratio * t_max * direction
};

/// Non-intrusive forecast: solve the forward problem at stratified traction
/// samples and fit the chaos surrogate. Solves run in parallel across jobs.
PCExpansion forecast_pce(const Mesh& mesh, const Material& material,
                         const LoadCase& load, const TractionRandomField& field,
                         const SolverSettings& settings, const PceConfig& config,
                         int jobs = 1);

}  // namespace sfe
