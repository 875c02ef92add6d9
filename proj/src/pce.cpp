#include "sfe/pce.hpp"

#include "sfe/parallel.hpp"

#include <cmath>

namespace sfe {

double hermite(int j, double x) {
  if (j == 0) return 1.0;
  if (j == 1) return x;
  double hm2 = 1.0, hm1 = x, h = 0.0;
  for (int k = 2; k <= j; ++k) {
    h = x * hm1 - (k - 1) * hm2;
    hm2 = hm1;
    hm1 = h;
  }
  return h;
}

double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0)
    throw ConfigError("normal quantile requires p in (0, 1)");
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  // Bisection bracket, then Newton polish.
  double lo = -10.0, hi = 10.0;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int k = 0; k < 4; ++k) {
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf < 1e-300) break;
    x -= (cdf(x) - p) / pdf;
  }
  return x;
}

std::vector<double> stratified_normal_nodes(int count) {
  std::vector<double> nodes(count);
  for (int s = 0; s < count; ++s)
    nodes[s] = normal_quantile((s + 0.5) / count);
  return nodes;
}

Vec2 sample_traction(const TractionRandomField& field, double xi) {
  return field.sample(xi);
}

Vec PCExpansion::evaluate(double xi) const {
  Vec u = Vec::Zero(coeffs.empty() ? 0 : coeffs[0].size());
  for (size_t j = 0; j < coeffs.size(); ++j)
    u += hermite(static_cast<int>(j), xi) * coeffs[j];
  return u;
}

PCExpansion fit_pce(const std::vector<std::pair<double, Vec>>& samples, int order) {
  if (order < 0) throw ConfigError("PCE order must be nonnegative");
  const int S = static_cast<int>(samples.size());
  const int modes = order + 1;
  if (S < modes)
    throw ConfigError("PCE regression needs at least order + 1 = " +
                      std::to_string(modes) + " samples, got " + std::to_string(S));

  Mat design(S, modes);
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < modes; ++j) design(s, j) = hermite(j, samples[s].first);

  Eigen::ColPivHouseholderQR<Mat> qr(design);
  if (qr.rank() < modes)
    throw NumericalError("PCE design matrix is rank-deficient (duplicate sampling "
                         "nodes?)");

  const auto n_gdof = samples[0].second.size();
  Mat rhs(S, n_gdof);
  for (int s = 0; s < S; ++s) rhs.row(s) = samples[s].second;

  const Mat coeff_rows = qr.solve(rhs);  // modes x n_gdof

  PCExpansion pce;
  pce.coeffs.resize(modes);
  for (int j = 0; j < modes; ++j) pce.coeffs[j] = coeff_rows.row(j);
  const double rhs_norm = rhs.norm();
  pce.fit_residual =
      rhs_norm > 0.0 ? (design * coeff_rows - rhs).norm() / rhs_norm : 0.0;
  return pce;
}

GaussianField pce_moments(const PCExpansion& expansion) {
  GaussianField field;
  field.mean = expansion.coeffs.at(0);
  const auto n = field.mean.size();
  field.cov = Mat::Zero(n, n);
  double factorial = 1.0;
  for (size_t j = 1; j < expansion.coeffs.size(); ++j) {
    factorial *= static_cast<double>(j);  // <He_j^2> = j!
    field.cov.noalias() +=
        factorial * expansion.coeffs[j] * expansion.coeffs[j].transpose();
  }
  return field;
}

PCExpansion forecast_pce(const Mesh& mesh, const Material& material,
                         const LoadCase& load, const TractionRandomField& field,
                         const SolverSettings& settings, const PceConfig& config,
                         int jobs) {
  const auto nodes = stratified_normal_nodes(config.n_samples);
  std::vector<std::pair<double, Vec>> samples(nodes.size());
  parallel_for(static_cast<int>(nodes.size()), jobs, [&](int s) {
    LoadCase sample_load = load;
    // The random field carries the absolute traction; eta only drives the
    // solver's internal load stepping.
    sample_load.eta = 1.0;
    sample_load.traction_override = field.sample(nodes[s]);
    const auto sol = solve_forward(mesh, material, sample_load, settings);
    samples[s] = {nodes[s], sol.u};
  });
  return fit_pce(samples, config.order);
}

}  // namespace sfe
