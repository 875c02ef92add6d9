#pragma once

#include "sfe/euclid.hpp"
#include "sfe/statfem.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sfe {

struct MeshConfig {
  double width = 1.0;       // mm
  double height = 1.0;      // mm
  double hole_radius = 0.25;  // mm
  int refinement = 3;
};

struct NoiseConfig {
  double sigma_e = 1e-4;  // mm
  int n_r = 1;
};

struct LoopConfig {
  int max_iterations = 10;
  /// Convergence threshold on RMSE_u; <= 0 means the default
  /// tol_multiplier * sqrt(2) * sigma_e, floored by tol_min.
  double tol = 0.0;
  /// The converged posterior's sensor RMSE floors slightly above the noise
  /// level sqrt(2) sigma_e; the multiplier provides the headroom.
  double tol_multiplier = 1.15;
  double tol_min = 1e-6;
  /// Assimilation noise floor, keeps the update well posed for sigma_e = 0.
  double sigma_e_floor = 1e-8;
  /// Assimilate only, never update the constitutive model.
  bool freeze_model = false;
  /// Early iterations may fit worse than the admissibility threshold tau.
  /// The forecast model for the next iteration is the sparsest path point
  /// within (1 + fit_slack) of the best achieved residual (essentially the
  /// best-fit point at the default); a model counts as discovered only when
  /// it passes tau itself.
  double fit_slack = 1e-6;
  /// Scale of the state-equation (constitutive model) error channel in the
  /// forecast covariance. While the forecast disagrees with the data beyond
  /// the convergence threshold, a force-residual uncertainty of magnitude
  /// sigma_s_scale * ||p||_rms is propagated through the tangent stiffness,
  /// letting the update move the field toward the data outside the chaos
  /// span; the term anneals to zero as the misfit approaches the threshold.
  /// 0 disables the channel.
  double sigma_s_scale = 1.0;
};

struct BenchmarkConfig {
  MeshConfig mesh;
  int n_mr = 3;
  int n_vol = 1;
  std::map<std::string, double> truth_coeffs = {{"A10", 0.5}, {"B1", 1.5}};
  /// Loop initialization: hyperelastic coefficients when nonempty, otherwise
  /// the linear elastic prior below.
  std::map<std::string, double> initial_coeffs;
  LinearElastic prior{1.35, 0.35};
  double t_max = 0.5;  // MPa
  double eta = 1.0;
  SolverSettings solver;
  std::string sensor_preset = "dense38";
  std::vector<Vec2> sensor_positions;  // explicit layout when preset empty
  NoiseConfig noise;
  uint64_t seed = 42;
  PceConfig pce;
  LoopConfig loop;
  EuclidConfig euclid;
  int jobs = 1;

  FeatureLibrary library() const { return FeatureLibrary(n_mr, n_vol); }
  MaterialParams truth_params() const {
    return MaterialParams::from_named(truth_coeffs, library());
  }
  SensorLayout sensor_layout() const {
    if (!sensor_preset.empty()) return SensorLayout::from_preset(sensor_preset);
    return SensorLayout::from_points(sensor_positions);
  }
  double resolved_tol() const {
    const double base = loop.tol > 0.0
                            ? loop.tol
                            : loop.tol_multiplier * std::sqrt(2.0) * noise.sigma_e;
    return std::max(base, loop.tol_min);
  }
};

/// Observed invariant ranges of a displacement field over the quadrature
/// points, the sampling box of the energy error metric.
struct InvariantRanges {
  double j1_min = 3, j1_max = 3;
  double j2_min = 3, j2_max = 3;
  double j3_min = 1, j3_max = 1;
};

InvariantRanges observed_invariant_ranges(const Mesh& mesh, const Vec& u);

struct EpsWResult {
  double value = 0.0;
  long excluded = 0;  // grid points with |W_true| below the cutoff
  long total = 0;
};

/// Mean squared relative strain energy error over an n^3 grid of modified
/// invariants spanning the given ranges.
EpsWResult error_eps_w(const MaterialParams& truth, const MaterialParams& disc,
                       const InvariantRanges& ranges, int n_grid = 100);

/// Relative displacement error ||u_disc - u_true|| / ||u_true||.
double error_eps_u(const Vec& u_disc, const Vec& u_true);

/// Pointwise |  ||u_disc|| - ||u_true||  | per node.
Vec nodal_displacement_error(const Mesh& mesh, const Vec& u_disc, const Vec& u_true);

/// Von Mises stress of the Cauchy push-forward, evaluated at Gauss points and
/// projected onto nodes by lumped least squares.
Vec nodal_von_mises(const Mesh& mesh, const Vec& u, const Material& material);

/// y_i = H u_true + e_i with e ~ N(0, sigma_e^2 I); returns n_gsen x n_r.
Mat generate_synthetic_data(const Vec& u_true, const SensorSet& sensors,
                            double sigma_e, int n_r, uint64_t seed);

struct IterationRecord {
  int iteration = 0;
  double rmse_u = 0.0;
  bool model_updated = false;  // an admissible model was discovered
  bool admissible = true;      // false when the EUCLID step found no model
  Vec kappa;                   // current model after the iteration (may be empty)
  double eps_w = 0.0;
  double eps_u = 0.0;
  long eps_w_excluded = 0;
  bool converged = false;
};

struct StatFemEuclidResult {
  bool has_model = false;
  DiscoveredModel model;
  std::vector<IterationRecord> history;
  bool converged = false;
  double tol = 0.0;
  Vec u_true;
  Vec u_disc;       // forward solve with the final model (empty if none)
  double eps_w = 0.0;
  double eps_u = 0.0;
  long eps_w_excluded = 0;
};

/// The iterative discovery loop: PCE forecast with the current model,
/// Bayesian update against the observations, convergence check on the sensor
/// RMSE, then weak-form discovery on the posterior mean.
StatFemEuclidResult run_statfem_euclid(const BenchmarkConfig& config);

enum class BaselineStatus { ok, insufficient_sensors, no_admissible_model };

struct BaselineResult {
  BaselineStatus status = BaselineStatus::ok;
  DiscoveredModel model;
  std::string message;
  double eps_w = 0.0;
  double eps_u = 0.0;
  long eps_w_excluded = 0;
  Vec u_disc;
};

/// Direct discovery on a coarse mesh built around the sensors, displacement
/// data taken as nodal values. Too-sparse sensor sets yield an explicit
/// insufficient-sensors outcome rather than an error.
BaselineResult run_euclid_baseline(const Mat& readings, const SensorSet& sensors,
                                   const BenchmarkConfig& config);

/// Shared per-case context: mesh, sensors, truth field and data.
struct CaseSetup {
  Mesh mesh;
  SensorSet sensors;
  Vec u_true;
  Mat readings;
};

CaseSetup prepare_case(const BenchmarkConfig& config);

}  // namespace sfe
