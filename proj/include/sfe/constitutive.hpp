#pragma once

#include "sfe/common.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace sfe {

/// Dense fourth-order tensor on 3x3x3x3, used for second derivatives of the
/// invariants and the material tangent. Index order (a,b,c,d) corresponds to
/// d2(.)/dE_ab dE_cd.
class Tensor4 {
public:
  Tensor4() { data_.fill(0.0); }

  double& operator()(int a, int b, int c, int d) {
    return data_[((a * 3 + b) * 3 + c) * 3 + d];
  }
  double operator()(int a, int b, int c, int d) const {
    return data_[((a * 3 + b) * 3 + c) * 3 + d];
  }

  Tensor4& operator+=(const Tensor4& o) {
    for (int i = 0; i < 81; ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor4 operator*(double s) const {
    Tensor4 r;
    for (int i = 0; i < 81; ++i) r.data_[i] = data_[i] * s;
    return r;
  }
  Tensor4 operator+(const Tensor4& o) const {
    Tensor4 r;
    for (int i = 0; i < 81; ++i) r.data_[i] = data_[i] + o.data_[i];
    return r;
  }
  Tensor4 operator-(const Tensor4& o) const {
    Tensor4 r;
    for (int i = 0; i < 81; ++i) r.data_[i] = data_[i] - o.data_[i];
    return r;
  }

  /// A_ab B_cd
  static Tensor4 outer(const Mat3& A, const Mat3& B);
  /// 0.5 (A_ac B_bd + A_ad B_bc); with A = B = C^{-1} this is the derivative
  /// of -C^{-1} w.r.t. C up to sign.
  static Tensor4 odot(const Mat3& A, const Mat3& B);

  double max_abs() const;

private:
  std::array<double, 81> data_;
};

struct IsoExponents {
  int i = 0;  // power of (J1 - 3)
  int j = 0;  // power of (J2 - 3)
};

/// Generalized Mooney-Rivlin feature library: isochoric terms
/// (J1-3)^i (J2-3)^j for 1 <= i+j <= n_mr followed by volumetric terms
/// (J3-1)^(2k) for k = 1..n_vol.
class FeatureLibrary {
public:
  FeatureLibrary() : FeatureLibrary(3, 1) {}
  FeatureLibrary(int n_mr, int n_vol);

  int n_mr() const { return n_mr_; }
  int n_vol() const { return n_vol_; }
  int n_phi() const { return static_cast<int>(iso_.size() + vol_.size()); }
  int n_iso() const { return static_cast<int>(iso_.size()); }

  const std::vector<IsoExponents>& iso_terms() const { return iso_; }
  const std::vector<int>& vol_exponents() const { return vol_; }

  bool is_volumetric(int idx) const { return idx >= n_iso(); }

  /// Coefficient label in the usual notation, e.g. "A10", "A01", "B1".
  std::string label(int idx) const;
  /// Feature as a printable expression, e.g. "(J1-3)^2*(J2-3)", "(J3-1)^2".
  std::string expression(int idx) const;

  /// Feature values at given modified invariants, in library order.
  Vec features(double J1, double J2, double J3) const;
  /// Gradient of each feature w.r.t. (J1, J2, J3); rows follow library order.
  Mat feature_gradients(double J1, double J2, double J3) const;
  /// Hessian of kappa . phi w.r.t. (J1, J2, J3).
  Mat3 energy_hessian(double J1, double J2, double J3, const Vec& kappa) const;

  bool operator==(const FeatureLibrary& o) const {
    return n_mr_ == o.n_mr_ && n_vol_ == o.n_vol_;
  }

private:
  int n_mr_;
  int n_vol_;
  std::vector<IsoExponents> iso_;
  std::vector<int> vol_;
};

/// Material coefficient vector kappa (MPa) over a feature library.
struct MaterialParams {
  Vec kappa;
  FeatureLibrary library;

  MaterialParams() = default;
  MaterialParams(Vec kappa, FeatureLibrary lib);

  /// Build from a named coefficient map, e.g. {{"A10", 0.5}, {"B1", 1.5}};
  /// unnamed coefficients are zero.
  static MaterialParams from_named(const std::map<std::string, double>& coeffs,
                                   const FeatureLibrary& lib);

  /// Indices with |kappa_j| above the numerical-zero threshold.
  std::vector<int> active_set(double threshold = 1e-10) const;

  /// Human-readable strain energy expression, terms below the threshold
  /// suppressed, e.g. "0.5*(J1-3) + 1.5*(J3-1)^2".
  std::string to_string(double threshold = 1e-10) const;
};

/// Kinematic state at a material point under plane strain (F_33 = 1).
struct DeformationState {
  Mat3 F;  // embedded deformation gradient
  Mat3 C;  // right Cauchy-Green
  Mat3 E;  // Green-Lagrange
  double I1 = 3, I2 = 3, I3 = 1;
  double J1 = 3, J2 = 3, J3 = 1;

  static DeformationState from_in_plane_F(const Mat2& F_2d);
};

/// First and second derivatives of the modified invariants w.r.t. the
/// Green-Lagrange strain E.
struct InvariantDerivatives {
  std::array<Mat3, 3> dJ;    // dJ_k/dE
  std::array<Tensor4, 3> d2J;  // d2J_k/dE dE
};

InvariantDerivatives invariant_derivatives(const DeformationState& state);

double strain_energy(const DeformationState& state, const MaterialParams& params);

/// Second Piola-Kirchhoff stress S = dW/dE (full embedded 3x3).
Mat3 second_pk_stress(const DeformationState& state, const MaterialParams& params);

/// Per-feature stresses S_m = d(phi_m)/dE; second_pk_stress is their
/// kappa-weighted sum. Used by the weak-form feature matrix assembly.
std::vector<Mat3> feature_pk2_stresses(const DeformationState& state,
                                       const FeatureLibrary& lib);

/// Consistent tangent dS/dE as a full fourth-order tensor.
Tensor4 material_tangent_full(const DeformationState& state,
                              const MaterialParams& params);

/// In-plane Voigt 3x3 tangent with row/column order (11, 22, 12); maps
/// [dE11, dE22, 2 dE12] to [dS11, dS22, dS12].
Mat3 material_tangent(const DeformationState& state, const MaterialParams& params);

/// Hard-coded closed-form stress for the 10-feature library (n_mr = 3,
/// n_vol = 1). Cross-check path for tests; production uses the generic
/// chain rule.
Mat3 second_pk_stress_mr3(const DeformationState& state, const MaterialParams& params);
Tensor4 material_tangent_mr3(const DeformationState& state, const MaterialParams& params);

Mat3 in_plane_voigt(const Tensor4& D);

/// Isotropic plane-strain Hooke's law, sigma = lambda tr(eps) I + 2 mu eps.
Mat2 linear_elastic_stress(const Mat2& strain, double youngs_modulus,
                           double poisson_ratio);

/// Plane-strain elasticity matrix in Voigt order (11, 22, 12), engineering
/// shear on the strain side.
Mat3 linear_elastic_voigt(double youngs_modulus, double poisson_ratio);

}  // namespace sfe
