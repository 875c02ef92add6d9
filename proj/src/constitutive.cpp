#include "sfe/constitutive.hpp"

#include <cmath>
#include <sstream>

namespace sfe {

Tensor4 Tensor4::outer(const Mat3& A, const Mat3& B) {
  Tensor4 r;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) r(a, b, c, d) = A(a, b) * B(c, d);
  return r;
}

Tensor4 Tensor4::odot(const Mat3& A, const Mat3& B) {
  Tensor4 r;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          r(a, b, c, d) = 0.5 * (A(a, c) * B(b, d) + A(a, d) * B(b, c));
  return r;
}

double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

FeatureLibrary::FeatureLibrary(int n_mr, int n_vol) : n_mr_(n_mr), n_vol_(n_vol) {
  if (n_mr < 1 || n_mr > 5 || n_vol < 1 || n_vol > 2)
    throw ConfigError("feature library supports n_mr in 1..5, n_vol in 1..2");
  for (int deg = 1; deg <= n_mr; ++deg)
    for (int i = deg; i >= 0; --i) iso_.push_back({i, deg - i});
  for (int k = 1; k <= n_vol; ++k) vol_.push_back(k);
}

std::string FeatureLibrary::label(int idx) const {
  if (idx < n_iso()) {
    const auto& t = iso_[idx];
    return "A" + std::to_string(t.i) + std::to_string(t.j);
  }
  return "B" + std::to_string(vol_[idx - n_iso()]);
}

namespace {

std::string pow_str(const std::string& base, int p) {
  if (p == 0) return "";
  if (p == 1) return base;
  return base + "^" + std::to_string(p);
}

}  // namespace

std::string FeatureLibrary::expression(int idx) const {
  if (idx < n_iso()) {
    const auto& t = iso_[idx];
    std::string a = pow_str("(J1-3)", t.i);
    std::string b = pow_str("(J2-3)", t.j);
    if (a.empty()) return b;
    if (b.empty()) return a;
    return a + "*" + b;
  }
  return pow_str("(J3-1)", 2 * vol_[idx - n_iso()]);
}

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

}  // namespace

Vec FeatureLibrary::features(double J1, double J2, double J3) const {
  Vec phi(n_phi());
  const double a = J1 - 3.0, b = J2 - 3.0, c = J3 - 1.0;
  int m = 0;
  for (const auto& t : iso_) phi[m++] = ipow(a, t.i) * ipow(b, t.j);
  for (int k : vol_) phi[m++] = ipow(c, 2 * k);
  return phi;
}

Mat FeatureLibrary::feature_gradients(double J1, double J2, double J3) const {
  Mat g = Mat::Zero(n_phi(), 3);
  const double a = J1 - 3.0, b = J2 - 3.0, c = J3 - 1.0;
  int m = 0;
  for (const auto& t : iso_) {
    if (t.i > 0) g(m, 0) = t.i * ipow(a, t.i - 1) * ipow(b, t.j);
    if (t.j > 0) g(m, 1) = t.j * ipow(a, t.i) * ipow(b, t.j - 1);
    ++m;
  }
  for (int k : vol_) g(m++, 2) = 2.0 * k * ipow(c, 2 * k - 1);
  return g;
}

Mat3 FeatureLibrary::energy_hessian(double J1, double J2, double J3,
                                    const Vec& kappa) const {
  Mat3 h = Mat3::Zero();
  const double a = J1 - 3.0, b = J2 - 3.0, c = J3 - 1.0;
  int m = 0;
  for (const auto& t : iso_) {
    const double k = kappa[m++];
    if (k == 0.0) continue;
    if (t.i > 1) h(0, 0) += k * t.i * (t.i - 1) * ipow(a, t.i - 2) * ipow(b, t.j);
    if (t.i > 0 && t.j > 0) {
      const double v = k * t.i * t.j * ipow(a, t.i - 1) * ipow(b, t.j - 1);
      h(0, 1) += v;
      h(1, 0) += v;
    }
    if (t.j > 1) h(1, 1) += k * t.j * (t.j - 1) * ipow(a, t.i) * ipow(b, t.j - 2);
  }
  for (int k_exp : vol_) {
    const double k = kappa[m++];
    if (k == 0.0) continue;
    h(2, 2) += k * 2.0 * k_exp * (2 * k_exp - 1) * ipow(c, 2 * k_exp - 2);
  }
  return h;
}

MaterialParams::MaterialParams(Vec kappa_in, FeatureLibrary lib)
    : kappa(std::move(kappa_in)), library(std::move(lib)) {
  if (kappa.size() != library.n_phi())
    throw ConfigError("material parameter vector length " +
                      std::to_string(kappa.size()) + " does not match library size " +
                      std::to_string(library.n_phi()));
}

MaterialParams MaterialParams::from_named(const std::map<std::string, double>& coeffs,
                                          const FeatureLibrary& lib) {
  Vec kappa = Vec::Zero(lib.n_phi());
  for (const auto& [name, value] : coeffs) {
    int idx = -1;
    for (int m = 0; m < lib.n_phi(); ++m)
      if (lib.label(m) == name) {
        idx = m;
        break;
      }
    if (idx < 0) throw ConfigError("unknown material coefficient '" + name + "'");
    kappa[idx] = value;
  }
  return MaterialParams(std::move(kappa), lib);
}

std::vector<int> MaterialParams::active_set(double threshold) const {
  std::vector<int> active;
  for (int m = 0; m < kappa.size(); ++m)
    if (kappa[m] > threshold) active.push_back(m);
  return active;
}

std::string MaterialParams::to_string(double threshold) const {
  std::ostringstream out;
  bool first = true;
  for (int m = 0; m < kappa.size(); ++m) {
    if (std::abs(kappa[m]) <= threshold) continue;
    if (!first) out << " + ";
    out << kappa[m] << "*" << library.expression(m);
    first = false;
  }
  if (first) out << "0";
  return out.str();
}

DeformationState DeformationState::from_in_plane_F(const Mat2& F_2d) {
  DeformationState s;
  s.F = Mat3::Identity();
  s.F.topLeftCorner<2, 2>() = F_2d;
  const double det_f = s.F.determinant();
  if (det_f <= 0.0)
    throw NumericalError("inverted deformation state: det F = " + std::to_string(det_f));
  s.C = s.F.transpose() * s.F;
  s.E = 0.5 * (s.C - Mat3::Identity());
  s.I1 = s.C.trace();
  s.I2 = 0.5 * (s.I1 * s.I1 - (s.C * s.C).trace());
  s.I3 = s.C.determinant();
  s.J1 = s.I1 * std::pow(s.I3, -1.0 / 3.0);
  s.J2 = s.I2 * std::pow(s.I3, -2.0 / 3.0);
  s.J3 = std::sqrt(s.I3);
  return s;
}

InvariantDerivatives invariant_derivatives(const DeformationState& state) {
  const Mat3& C = state.C;
  const Mat3 Cinv = C.inverse();
  const Mat3 I = Mat3::Identity();
  const double I1 = state.I1, I2 = state.I2, I3 = state.I3;
  const double f = std::pow(I3, -1.0 / 3.0);   // J1 = f I1
  const double g = std::pow(I3, -2.0 / 3.0);   // J2 = g I2
  const double J3 = state.J3;

  InvariantDerivatives d;

  // dJ_k/dC, then scale by 2 for dJ_k/dE.
  const Mat3 dJ1_dC = f * (I - (I1 / 3.0) * Cinv);
  const Mat3 dJ2_dC = g * ((I1 * I - C) - (2.0 * I2 / 3.0) * Cinv);
  const Mat3 dJ3_dC = 0.5 * J3 * Cinv;
  d.dJ[0] = 2.0 * dJ1_dC;
  d.dJ[1] = 2.0 * dJ2_dC;
  d.dJ[2] = 2.0 * dJ3_dC;

  const Tensor4 CiCi = Tensor4::outer(Cinv, Cinv);
  const Tensor4 CiOCi = Tensor4::odot(Cinv, Cinv);  // = -dC^{-1}/dC
  const Tensor4 II = Tensor4::outer(I, I);
  const Tensor4 Is = Tensor4::odot(I, I);

  // d2J1/dC2 = f [ -(1/3)(I x Cinv + Cinv x I) + (I1/9) Cinv x Cinv
  //               + (I1/3) Cinv o Cinv ]
  Tensor4 d2J1 = (Tensor4::outer(I, Cinv) + Tensor4::outer(Cinv, I)) * (-f / 3.0);
  d2J1 += CiCi * (f * I1 / 9.0);
  d2J1 += CiOCi * (f * I1 / 3.0);

  // d2J2/dC2 = g [ -(2/3)((I1 I - C) x Cinv + Cinv x (I1 I - C))
  //               + (I x I - Is) + (4/9) I2 Cinv x Cinv + (2/3) I2 Cinv o Cinv ]
  const Mat3 I1ImC = I1 * I - C;
  Tensor4 d2J2 =
      (Tensor4::outer(I1ImC, Cinv) + Tensor4::outer(Cinv, I1ImC)) * (-2.0 * g / 3.0);
  d2J2 += (II - Is) * g;
  d2J2 += CiCi * (4.0 * g * I2 / 9.0);
  d2J2 += CiOCi * (2.0 * g * I2 / 3.0);

  // d2J3/dC2 = J3 [ (1/4) Cinv x Cinv - (1/2) Cinv o Cinv ]
  Tensor4 d2J3 = CiCi * (J3 / 4.0) + CiOCi * (-J3 / 2.0);

  d.d2J[0] = d2J1 * 4.0;
  d.d2J[1] = d2J2 * 4.0;
  d.d2J[2] = d2J3 * 4.0;
  return d;
}

double strain_energy(const DeformationState& state, const MaterialParams& params) {
  return params.kappa.dot(params.library.features(state.J1, state.J2, state.J3));
}

Mat3 second_pk_stress(const DeformationState& state, const MaterialParams& params) {
  const auto d = invariant_derivatives(state);
  const Mat grad = params.library.feature_gradients(state.J1, state.J2, state.J3);
  const Vec w = grad.transpose() * params.kappa;  // dW/dJ_k
  return w[0] * d.dJ[0] + w[1] * d.dJ[1] + w[2] * d.dJ[2];
}

std::vector<Mat3> feature_pk2_stresses(const DeformationState& state,
                                       const FeatureLibrary& lib) {
  const auto d = invariant_derivatives(state);
  const Mat grad = lib.feature_gradients(state.J1, state.J2, state.J3);
  std::vector<Mat3> stresses(lib.n_phi());
  for (int m = 0; m < lib.n_phi(); ++m)
    stresses[m] = grad(m, 0) * d.dJ[0] + grad(m, 1) * d.dJ[1] + grad(m, 2) * d.dJ[2];
  return stresses;
}

Tensor4 material_tangent_full(const DeformationState& state,
                              const MaterialParams& params) {
  const auto d = invariant_derivatives(state);
  const Mat grad = params.library.feature_gradients(state.J1, state.J2, state.J3);
  const Vec w = grad.transpose() * params.kappa;
  const Mat3 h = params.library.energy_hessian(state.J1, state.J2, state.J3,
                                               params.kappa);
  Tensor4 D;
  for (int k = 0; k < 3; ++k) {
    if (w[k] != 0.0) D += d.d2J[k] * w[k];
    for (int l = 0; l < 3; ++l)
      if (h(k, l) != 0.0) D += Tensor4::outer(d.dJ[k], d.dJ[l]) * h(k, l);
  }
  return D;
}

Mat3 in_plane_voigt(const Tensor4& D) {
  static const int vi[3] = {0, 1, 0};
  static const int vj[3] = {0, 1, 1};
  Mat3 v;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) v(a, b) = D(vi[a], vj[a], vi[b], vj[b]);
  return v;
}

Mat3 material_tangent(const DeformationState& state, const MaterialParams& params) {
  return in_plane_voigt(material_tangent_full(state, params));
}

namespace {

// Coefficient lookup for the hard-coded 10-feature expansion.
double coeff(const MaterialParams& p, const char* name) {
  for (int m = 0; m < p.library.n_phi(); ++m)
    if (p.library.label(m) == name) return p.kappa[m];
  return 0.0;
}

}  // namespace

Mat3 second_pk_stress_mr3(const DeformationState& state, const MaterialParams& params) {
  if (params.library.n_mr() != 3 || params.library.n_vol() != 1)
    throw ConfigError("closed-form stress requires the 10-feature library");
  const auto d = invariant_derivatives(state);
  const Mat3 &J1E = d.dJ[0], &J2E = d.dJ[1], &J3E = d.dJ[2];
  const double a = state.J1 - 3.0, b = state.J2 - 3.0, c = state.J3 - 1.0;
  const double A10 = coeff(params, "A10"), A01 = coeff(params, "A01"),
               A20 = coeff(params, "A20"), A11 = coeff(params, "A11"),
               A02 = coeff(params, "A02"), A30 = coeff(params, "A30"),
               A21 = coeff(params, "A21"), A12 = coeff(params, "A12"),
               A03 = coeff(params, "A03"), B1 = coeff(params, "B1");

  Mat3 S = A10 * J1E + A01 * J2E;
  S += 2.0 * A20 * a * J1E + A11 * b * J1E + A11 * a * J2E + 2.0 * A02 * b * J2E;
  S += 3.0 * A30 * a * a * J1E;
  S += A21 * a * a * J2E + 2.0 * A21 * a * b * J1E;
  S += 2.0 * A12 * a * b * J2E + A12 * b * b * J1E;
  S += 3.0 * A03 * b * b * J2E;
  S += 2.0 * B1 * c * J3E;
  return S;
}

Tensor4 material_tangent_mr3(const DeformationState& state,
                             const MaterialParams& params) {
  if (params.library.n_mr() != 3 || params.library.n_vol() != 1)
    throw ConfigError("closed-form tangent requires the 10-feature library");
  const auto d = invariant_derivatives(state);
  const Mat3 &J1E = d.dJ[0], &J2E = d.dJ[1], &J3E = d.dJ[2];
  const Tensor4 &J1EE = d.d2J[0], &J2EE = d.d2J[1], &J3EE = d.d2J[2];
  const double a = state.J1 - 3.0, b = state.J2 - 3.0, c = state.J3 - 1.0;
  const double A10 = coeff(params, "A10"), A01 = coeff(params, "A01"),
               A20 = coeff(params, "A20"), A11 = coeff(params, "A11"),
               A02 = coeff(params, "A02"), A30 = coeff(params, "A30"),
               A21 = coeff(params, "A21"), A12 = coeff(params, "A12"),
               A03 = coeff(params, "A03"), B1 = coeff(params, "B1");

  const Tensor4 o11 = Tensor4::outer(J1E, J1E);
  const Tensor4 o12 = Tensor4::outer(J1E, J2E);
  const Tensor4 o21 = Tensor4::outer(J2E, J1E);
  const Tensor4 o22 = Tensor4::outer(J2E, J2E);
  const Tensor4 o33 = Tensor4::outer(J3E, J3E);

  Tensor4 D = J1EE * A10 + J2EE * A01;
  D += o11 * (2.0 * A20) + J1EE * (2.0 * A20 * a);
  D += o21 * A11 + o12 * A11 + J1EE * (A11 * b) + J2EE * (A11 * a);
  D += o22 * (2.0 * A02) + J2EE * (2.0 * A02 * b);
  D += o11 * (6.0 * A30 * a) + J1EE * (3.0 * A30 * a * a);
  D += J2EE * (A21 * a * a) + J1EE * (2.0 * A21 * a * b);
  D += o12 * (2.0 * A21 * a) + o11 * (2.0 * A21 * b) + o21 * (2.0 * A21 * a);
  D += o12 * (2.0 * A12 * b) + o22 * (2.0 * A12 * a) + J1EE * (A12 * b * b);
  D += J2EE * (2.0 * A12 * a * b) + o21 * (2.0 * A12 * b);
  D += o22 * (6.0 * A03 * b) + J2EE * (3.0 * A03 * b * b);
  D += J3EE * (2.0 * B1 * c) + o33 * (2.0 * B1);
  return D;
}

Mat2 linear_elastic_stress(const Mat2& strain, double youngs_modulus,
                           double poisson_ratio) {
  if (poisson_ratio <= -1.0 || poisson_ratio >= 0.5)
    throw ConfigError("Poisson ratio must lie in (-1, 0.5), got " +
                      std::to_string(poisson_ratio));
  const double mu = youngs_modulus / (2.0 * (1.0 + poisson_ratio));
  const double lambda = youngs_modulus * poisson_ratio /
                        ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  return lambda * strain.trace() * Mat2::Identity() + 2.0 * mu * strain;
}

Mat3 linear_elastic_voigt(double youngs_modulus, double poisson_ratio) {
  if (poisson_ratio <= -1.0 || poisson_ratio >= 0.5)
    throw ConfigError("Poisson ratio must lie in (-1, 0.5), got " +
                      std::to_string(poisson_ratio));
  const double mu = youngs_modulus / (2.0 * (1.0 + poisson_ratio));
  const double lambda = youngs_modulus * poisson_ratio /
                        ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  Mat3 D = Mat3::Zero();
  D(0, 0) = D(1, 1) = lambda + 2.0 * mu;
  D(0, 1) = D(1, 0) = lambda;
  D(2, 2) = mu;
  return D;
}

}  // namespace sfe
