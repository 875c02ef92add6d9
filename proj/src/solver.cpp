#include "sfe/solver.hpp"

#include <Eigen/Sparse>

#include <cmath>

namespace sfe {

namespace {

using Triplet = Eigen::Triplet<double>;

Mat2 in_plane_F(const QuadPoint& qp, const Eigen::Matrix<double, 4, 2>& u_el) {
  return Mat2::Identity() + (u_el.transpose() * qp.grad).eval();
}

Eigen::Matrix<double, 4, 2> gather_element_u(const Mesh& mesh, const Vec& u, int e) {
  Eigen::Matrix<double, 4, 2> u_el;
  for (int a = 0; a < 4; ++a) {
    const int n = mesh.elements[e][a];
    u_el(a, 0) = u[2 * n];
    u_el(a, 1) = u[2 * n + 1];
  }
  return u_el;
}

// delta E in Voigt order (11, 22, 2*12) per nodal displacement component.
Eigen::Matrix<double, 3, 8> strain_displacement(const Mat2& F,
                                                const QuadPoint& qp) {
  Eigen::Matrix<double, 3, 8> B;
  for (int a = 0; a < 4; ++a)
    for (int k = 0; k < 2; ++k) {
      const int col = 2 * a + k;
      B(0, col) = F(k, 0) * qp.grad(a, 0);
      B(1, col) = F(k, 1) * qp.grad(a, 1);
      B(2, col) = F(k, 0) * qp.grad(a, 1) + F(k, 1) * qp.grad(a, 0);
    }
  return B;
}

Eigen::Matrix<double, 3, 8> small_strain_B(const QuadPoint& qp) {
  Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    B(0, 2 * a) = qp.grad(a, 0);
    B(1, 2 * a + 1) = qp.grad(a, 1);
    B(2, 2 * a) = qp.grad(a, 1);
    B(2, 2 * a + 1) = qp.grad(a, 0);
  }
  return B;
}

void element_internal_force(const Mesh& mesh, const ElementQuadrature& equad,
                            const Eigen::Matrix<double, 4, 2>& u_el,
                            const Material& material, int e,
                            Eigen::Matrix<double, 8, 1>& f_el) {
  f_el.setZero();
  for (const auto& qp : equad.pts) {
    if (std::holds_alternative<MaterialParams>(material)) {
      const Mat2 F = in_plane_F(qp, u_el);
      const double detF = F.determinant();
      if (detF <= 0.0)
        throw NumericalError("inverted element " + std::to_string(e) +
                             " during internal force evaluation (det F = " +
                             std::to_string(detF) + ")");
      const auto state = DeformationState::from_in_plane_F(F);
      const Mat3 S = second_pk_stress(state, std::get<MaterialParams>(material));
      const Mat2 P = F * S.topLeftCorner<2, 2>();
      for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 2; ++i)
          f_el(2 * a + i) += (P(i, 0) * qp.grad(a, 0) + P(i, 1) * qp.grad(a, 1)) *
                             qp.weight;
    } else {
      const auto& le = std::get<LinearElastic>(material);
      const Mat2 grad_u = (u_el.transpose() * qp.grad).eval();
      const Mat2 eps = 0.5 * (grad_u + grad_u.transpose());
      const Mat2 sig = linear_elastic_stress(eps, le.youngs_modulus, le.poisson_ratio);
      for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 2; ++i)
          f_el(2 * a + i) += (sig(i, 0) * qp.grad(a, 0) + sig(i, 1) * qp.grad(a, 1)) *
                             qp.weight;
    }
  }
}

void element_tangent(const Mesh& mesh, const ElementQuadrature& equad,
                     const Eigen::Matrix<double, 4, 2>& u_el,
                     const Material& material, int e,
                     Eigen::Matrix<double, 8, 8>& k_el) {
  k_el.setZero();
  for (const auto& qp : equad.pts) {
    if (std::holds_alternative<MaterialParams>(material)) {
      const Mat2 F = in_plane_F(qp, u_el);
      const double detF = F.determinant();
      if (detF <= 0.0)
        throw NumericalError("inverted element " + std::to_string(e) +
                             " during tangent assembly (det F = " +
                             std::to_string(detF) + ")");
      const auto state = DeformationState::from_in_plane_F(F);
      const auto& params = std::get<MaterialParams>(material);
      const Mat3 D = material_tangent(state, params);
      const Mat3 S = second_pk_stress(state, params);
      const auto B = strain_displacement(F, qp);
      k_el += qp.weight * (B.transpose() * D * B);
      // Geometric stiffness: grad_a . S . grad_b on the displacement diagonal.
      const Mat2 S2 = S.topLeftCorner<2, 2>();
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const double g = qp.grad.row(a) * S2 * qp.grad.row(b).transpose();
          k_el(2 * a, 2 * b) += g * qp.weight;
          k_el(2 * a + 1, 2 * b + 1) += g * qp.weight;
        }
    } else {
      const auto& le = std::get<LinearElastic>(material);
      const Mat3 D = linear_elastic_voigt(le.youngs_modulus, le.poisson_ratio);
      const auto B = small_strain_B(qp);
      k_el += qp.weight * (B.transpose() * D * B);
    }
  }
}

}  // namespace

Vec internal_force(const Mesh& mesh, const std::vector<ElementQuadrature>& quad,
                   const Vec& u, const Material& material) {
  Vec f = Vec::Zero(mesh.n_gdof());
  Eigen::Matrix<double, 8, 1> f_el;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    element_internal_force(mesh, quad[e], gather_element_u(mesh, u, e), material, e,
                           f_el);
    for (int a = 0; a < 4; ++a) {
      const int n = mesh.elements[e][a];
      f[2 * n] += f_el(2 * a);
      f[2 * n + 1] += f_el(2 * a + 1);
    }
  }
  return f;
}

Vec internal_force(const Mesh& mesh, const Vec& u, const Material& material) {
  return internal_force(mesh, compute_quadrature(mesh), u, material);
}

Vec external_force(const Mesh& mesh, const LoadCase& load) {
  Vec f = Vec::Zero(mesh.n_gdof());
  const Vec2 t = load.traction();
  for (const auto& edge : mesh.neumann_edges) {
    auto [a, b] = mesh.edge_nodes(edge);
    const double half = 0.5 * mesh.edge_length(edge);
    for (int i = 0; i < 2; ++i) {
      f[2 * a + i] += t[i] * half;
      f[2 * b + i] += t[i] * half;
    }
  }
  return f;
}

Eigen::SparseMatrix<double> assemble_tangent(const Mesh& mesh, const Vec& u,
                                             const Material& material) {
  const auto quad = compute_quadrature(mesh);
  const int n = mesh.n_gdof();
  std::vector<char> constrained(n, 0);
  for (int d : mesh.dirichlet_dofs) constrained[d] = 1;

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mesh.n_elements()) * 64 + n);
  Eigen::Matrix<double, 8, 8> k_el;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    element_tangent(mesh, quad[e], gather_element_u(mesh, u, e), material, e, k_el);
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 2; ++i) {
        const int row = 2 * mesh.elements[e][a] + i;
        if (constrained[row]) continue;
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 2; ++j) {
            const int col = 2 * mesh.elements[e][b] + j;
            if (constrained[col]) continue;
            triplets.emplace_back(row, col, k_el(2 * a + i, 2 * b + j));
          }
      }
  }
  for (int d = 0; d < n; ++d)
    if (constrained[d]) triplets.emplace_back(d, d, 1.0);

  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(triplets.begin(), triplets.end());
  return K;
}

Vec tangent_action(const Mesh& mesh, const Vec& u, const Material& material,
                   const Vec& v) {
  const auto quad = compute_quadrature(mesh);
  Vec result = Vec::Zero(mesh.n_gdof());
  Eigen::Matrix<double, 8, 8> k_el;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    element_tangent(mesh, quad[e], gather_element_u(mesh, u, e), material, e, k_el);
    Eigen::Matrix<double, 8, 1> v_el;
    for (int a = 0; a < 4; ++a) {
      const int n = mesh.elements[e][a];
      v_el(2 * a) = v[2 * n];
      v_el(2 * a + 1) = v[2 * n + 1];
    }
    const Eigen::Matrix<double, 8, 1> r_el = k_el * v_el;
    for (int a = 0; a < 4; ++a) {
      const int n = mesh.elements[e][a];
      result[2 * n] += r_el(2 * a);
      result[2 * n + 1] += r_el(2 * a + 1);
    }
  }
  return result;
}

DisplacementField solve_forward(const Mesh& mesh, const Material& material,
                                const LoadCase& load, const SolverSettings& settings,
                                const Vec* dirichlet_values) {
  if (settings.newton_tol <= 0.0) throw ConfigError("newton_tol must be positive");
  if (settings.n_load_steps < 1) throw ConfigError("n_load_steps must be >= 1");

  const auto quad = compute_quadrature(mesh);
  const bool linear = std::holds_alternative<LinearElastic>(material);
  const int n_steps = linear ? 1 : settings.n_load_steps;

  const int n = mesh.n_gdof();
  std::vector<char> constrained(n, 0);
  for (int d : mesh.dirichlet_dofs) constrained[d] = 1;

  Vec u = Vec::Zero(n);
  int last_iters = 0;
  std::vector<double> last_residuals;

  for (int step = 1; step <= n_steps; ++step) {
    const double frac = static_cast<double>(step) / n_steps;
    LoadCase step_load = load;
    step_load.eta = load.eta * frac;
    const Vec f_ext = external_force(mesh, step_load);

    for (int d : mesh.dirichlet_dofs)
      u[d] = dirichlet_values ? frac * (*dirichlet_values)[d] : 0.0;

    int iter = 0;
    last_residuals.clear();
    for (;; ++iter) {
      Vec residual = internal_force(mesh, quad, u, material) - f_ext;
      for (int d = 0; d < n; ++d)
        if (constrained[d]) residual[d] = 0.0;
      const double rnorm = residual.norm();
      last_residuals.push_back(rnorm);
      if (rnorm <= settings.newton_tol) break;
      if (iter >= settings.max_iters)
        throw NumericalError("Newton did not converge within " +
                             std::to_string(settings.max_iters) +
                             " iterations (residual norm " + std::to_string(rnorm) +
                             ", load step " + std::to_string(step) + ")");

      std::vector<Triplet> triplets;
      triplets.reserve(static_cast<size_t>(mesh.n_elements()) * 64 + n);
      Eigen::Matrix<double, 8, 8> k_el;
      for (int e = 0; e < mesh.n_elements(); ++e) {
        element_tangent(mesh, quad[e], gather_element_u(mesh, u, e), material, e,
                        k_el);
        for (int a = 0; a < 4; ++a)
          for (int i = 0; i < 2; ++i) {
            const int row = 2 * mesh.elements[e][a] + i;
            if (constrained[row]) continue;
            for (int b = 0; b < 4; ++b)
              for (int j = 0; j < 2; ++j) {
                const int col = 2 * mesh.elements[e][b] + j;
                if (constrained[col]) continue;
                triplets.emplace_back(row, col, k_el(2 * a + i, 2 * b + j));
              }
          }
      }
      for (int d = 0; d < n; ++d)
        if (constrained[d]) triplets.emplace_back(d, d, 1.0);

      Eigen::SparseMatrix<double> K(n, n);
      K.setFromTriplets(triplets.begin(), triplets.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(K);
      if (lu.info() != Eigen::Success)
        throw NumericalError("tangent stiffness factorization failed at load step " +
                             std::to_string(step));
      const Vec du = lu.solve(-residual);
      // Backtracking on element inversion or residual blow-up. The full step
      // tolerates a transient residual increase; shortened steps must
      // strictly decrease it. Full steps win near the solution, preserving
      // quadratic convergence.
      double alpha = 1.0;
      bool accepted = false;
      for (int cut = 0; cut < 8 && !accepted; ++cut, alpha *= 0.5) {
        const Vec trial = u + alpha * du;
        try {
          Vec trial_residual = internal_force(mesh, quad, trial, material) - f_ext;
          for (int d = 0; d < n; ++d)
            if (constrained[d]) trial_residual[d] = 0.0;
          const double trial_norm = trial_residual.norm();
          if (std::isfinite(trial_norm) &&
              trial_norm < (cut == 0 ? 2.0 * rnorm : rnorm)) {
            u = trial;
            accepted = true;
          }
        } catch (const NumericalError&) {
          // inverted element at this step length; halve and retry
        }
      }
      if (!accepted)
        throw NumericalError("Newton line search failed at load step " +
                             std::to_string(step) + " (residual norm " +
                             std::to_string(rnorm) + ")");
      // Keep constrained entries exact.
      for (int d : mesh.dirichlet_dofs)
        u[d] = dirichlet_values ? frac * (*dirichlet_values)[d] : 0.0;
    }
    last_iters = iter;
  }

  DisplacementField field;
  field.u = std::move(u);
  field.newton_iterations = last_iters;
  field.residual_norms = std::move(last_residuals);
  return field;
}

}  // namespace sfe
