#pragma once

#include "sfe/pce.hpp"

#include <vector>

namespace sfe {

/// Point observations of the displacement field: each observed row selects
/// one global DOF. Readings are stacked column-wise for n_r repetitions.
struct ObservationSet {
  std::vector<int> observed_dofs;  // one unit entry per row of H
  Mat readings;                    // n_gsen x n_r
  double sigma_e = 1e-3;           // mm

  int n_gsen() const { return static_cast<int>(observed_dofs.size()); }
  int n_r() const { return static_cast<int>(readings.cols()); }
  /// Dense boolean selection matrix (for oracles and export).
  Mat dense_H(int n_gdof) const;
  Vec sum_readings() const { return readings.rowwise().sum(); }
};

/// Frobenius-nearest symmetric positive definite matrix: symmetrize, polar
/// projection, then the smallest diagonal shift (doubled from machine-epsilon
/// scale) that makes a Cholesky factorization succeed.
Mat nearest_spd(const Mat& m);

/// Closed-form Gaussian conditioning in precision form:
///   C_a = (n_r H' Ce^-1 H + SPD(C_f)^-1)^-1,
///   mu_a = C_a (H' Ce^-1 sum_i y_i + SPD(C_f)^-1 mu_f).
GaussianField posterior_update(const GaussianField& prior, const ObservationSet& obs);

/// Projection of the posterior onto the observed DOFs.
GaussianField predict_at_sensors(const GaussianField& posterior,
                                 const std::vector<int>& observed_dofs);

/// sqrt(||mu_z - y||^2 / n_sen); y is one reading (or the mean of several).
double rmse_sensors(const Vec& mu_z, const Vec& y, int n_sen);

}  // namespace sfe
