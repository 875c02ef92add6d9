#include "sfe/statfem.hpp"

#include <cmath>

namespace sfe {

Mat ObservationSet::dense_H(int n_gdof) const {
  Mat H = Mat::Zero(n_gsen(), n_gdof);
  for (int r = 0; r < n_gsen(); ++r) H(r, observed_dofs[r]) = 1.0;
  return H;
}

Mat nearest_spd(const Mat& m) {
  if (m.rows() != m.cols()) throw ConfigError("nearest_spd requires a square matrix");
  const Mat sym = 0.5 * (m + m.transpose());

  // An already-SPD input is its own projection; skip the SVD.
  if ((m - m.transpose()).cwiseAbs().maxCoeff() <=
          1e-14 * std::max(1.0, m.cwiseAbs().maxCoeff()) &&
      Eigen::LLT<Mat>(sym).info() == Eigen::Success)
    return sym;

  Eigen::BDCSVD<Mat> svd(sym, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Mat polar = svd.matrixV() * svd.singularValues().asDiagonal() *
                    svd.matrixV().transpose();
  Mat projected = 0.5 * (sym + polar);
  projected = 0.5 * (projected + projected.transpose());

  auto cholesky_ok = [](const Mat& x) {
    return Eigen::LLT<Mat>(x).info() == Eigen::Success;
  };
  if (cholesky_ok(projected)) return projected;

  const double scale = std::max(projected.diagonal().cwiseAbs().maxCoeff(), 1.0);
  double delta = std::numeric_limits<double>::epsilon() * scale;
  const Mat eye = Mat::Identity(m.rows(), m.cols());
  for (int k = 0; k < 200; ++k) {
    if (cholesky_ok(projected + delta * eye)) return projected + delta * eye;
    delta *= 2.0;
  }
  throw NumericalError("nearest_spd failed to reach positive definiteness");
}

GaussianField posterior_update(const GaussianField& prior, const ObservationSet& obs) {
  const auto n = prior.mean.size();
  if (prior.cov.rows() != n || prior.cov.cols() != n)
    throw ConfigError("prior mean/covariance dimensions disagree");
  if (obs.sigma_e <= 0.0) throw ConfigError("sigma_e must be positive");
  for (int dof : obs.observed_dofs)
    if (dof < 0 || dof >= n)
      throw ConfigError("observed DOF " + std::to_string(dof) + " out of range");

  const Mat spd_cov = nearest_spd(prior.cov);
  Eigen::LLT<Mat> prior_llt(spd_cov);
  if (prior_llt.info() != Eigen::Success)
    throw NumericalError("repaired prior covariance is not factorizable");
  const Mat prior_precision = prior_llt.solve(Mat::Identity(n, n));

  const double noise_precision = 1.0 / (obs.sigma_e * obs.sigma_e);
  Mat posterior_precision = prior_precision;
  for (int r = 0; r < obs.n_gsen(); ++r)
    posterior_precision(obs.observed_dofs[r], obs.observed_dofs[r]) +=
        obs.n_r() * noise_precision;

  Vec rhs = prior_precision * prior.mean;
  const Vec summed = obs.sum_readings();
  for (int r = 0; r < obs.n_gsen(); ++r)
    rhs[obs.observed_dofs[r]] += noise_precision * summed[r];

  Eigen::LLT<Mat> post_llt(posterior_precision);
  if (post_llt.info() != Eigen::Success) {
    const double dmax = posterior_precision.diagonal().maxCoeff();
    const double dmin = posterior_precision.diagonal().minCoeff();
    throw NumericalError("posterior precision is not positive definite "
                         "(diagonal range " +
                         std::to_string(dmin) + " .. " + std::to_string(dmax) + ")");
  }

  GaussianField posterior;
  posterior.mean = post_llt.solve(rhs);
  posterior.cov = post_llt.solve(Mat::Identity(n, n));
  posterior.cov = 0.5 * (posterior.cov + posterior.cov.transpose()).eval();
  return posterior;
}

GaussianField predict_at_sensors(const GaussianField& posterior,
                                 const std::vector<int>& observed_dofs) {
  const int m = static_cast<int>(observed_dofs.size());
  GaussianField z;
  z.mean = Vec(m);
  z.cov = Mat(m, m);
  for (int r = 0; r < m; ++r) {
    z.mean[r] = posterior.mean[observed_dofs[r]];
    for (int c = 0; c < m; ++c)
      z.cov(r, c) = posterior.cov(observed_dofs[r], observed_dofs[c]);
  }
  return z;
}

double rmse_sensors(const Vec& mu_z, const Vec& y, int n_sen) {
  if (mu_z.size() != y.size())
    throw ConfigError("sensor prediction and data lengths differ: " +
                      std::to_string(mu_z.size()) + " vs " + std::to_string(y.size()));
  if (n_sen < 1) throw ConfigError("n_sen must be positive");
  return std::sqrt((mu_z - y).squaredNorm() / static_cast<double>(n_sen));
}

}  // namespace sfe
