#include "autosimp/fem.hpp"

#include <algorithm>
#include <cmath>

#include "autosimp/errors.hpp"

namespace autosimp {
namespace {

constexpr double kSign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};

// Strain-displacement matrix at a natural point.
Eigen::MatrixXd strain_displacement(const ElementDims& d, double xi, double eta, double zeta) {
  if (!d.solid) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 8);
    for (int a = 0; a < 4; ++a) {
      const double sx = kSign[a][0], sy = kSign[a][1];
      const double dx = 0.25 * sx * (1 + sy * eta) * (2.0 / d.hx);
      const double dy = 0.25 * sy * (1 + sx * xi) * (2.0 / d.hy);
      b(0, 2 * a) = dx;
      b(1, 2 * a + 1) = dy;
      b(2, 2 * a) = dy;
      b(2, 2 * a + 1) = dx;
    }
    return b;
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 24);
  for (int a = 0; a < 8; ++a) {
    const double sx = kSign[a][0], sy = kSign[a][1], sz = kSign[a][2];
    const double dx = 0.125 * sx * (1 + sy * eta) * (1 + sz * zeta) * (2.0 / d.hx);
    const double dy = 0.125 * sy * (1 + sx * xi) * (1 + sz * zeta) * (2.0 / d.hy);
    const double dz = 0.125 * sz * (1 + sx * xi) * (1 + sy * eta) * (2.0 / d.hz);
    const int c = 3 * a;
    b(0, c) = dx;
    b(1, c + 1) = dy;
    b(2, c + 2) = dz;
    b(3, c + 1) = dz;
    b(3, c + 2) = dy;
    b(4, c) = dz;
    b(4, c + 2) = dx;
    b(5, c) = dy;
    b(5, c + 1) = dx;
  }
  return b;
}

} // namespace

Eigen::MatrixXd constitutive_matrix(const Material& mat, bool solid) {
  const double E = mat.E0, nu = mat.nu;
  if (!solid) {
    Eigen::MatrixXd d(3, 3);
    d << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
    return d * (E / (1 - nu * nu));
  }
  const double lambda = E * nu / ((1 + nu) * (1 - 2 * nu));
  const double mu = E / (2 * (1 + nu));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = lambda;
    d(i, i) = lambda + 2 * mu;
    d(i + 3, i + 3) = mu;
  }
  return d;
}

ElementMatrix element_stiffness(const Material& mat, const ElementDims& dims) {
  const Eigen::MatrixXd d = constitutive_matrix(mat, dims.solid);
  const double g = 1.0 / std::sqrt(3.0);
  const double gp[2] = {-g, g};
  const int n = dims.solid ? 24 : 8;
  ElementMatrix k = ElementMatrix::Zero(n, n);
  if (!dims.solid) {
    const double det = dims.hx * dims.hy / 4.0;
    for (double xi : gp)
      for (double eta : gp) {
        const auto b = strain_displacement(dims, xi, eta, 0.0);
        k.noalias() += b.transpose() * d * b * det;
      }
  } else {
    const double det = dims.hx * dims.hy * dims.hz / 8.0;
    for (double xi : gp)
      for (double eta : gp)
        for (double zeta : gp) {
          const auto b = strain_displacement(dims, xi, eta, zeta);
          k.noalias() += b.transpose() * d * b * det;
        }
  }
  return 0.5 * (k + k.transpose());
}

Eigen::VectorXd element_strain(const ElementDims& dims, const Eigen::VectorXd& u_e, double xi, double eta,
                               double zeta) {
  return strain_displacement(dims, xi, eta, zeta) * u_e;
}

FeModel::FeModel(const Mesh& mesh, const Material& material, const SolverArrays& arrays, FeOptions options)
    : mesh_(mesh), material_(material), options_(options), force_(arrays.force) {
  kind_ = options.solver;
  if (kind_ == LinearSolverKind::automatic) kind_ = mesh.solid ? LinearSolverKind::pcg : LinearSolverKind::direct;
  e_min_ = options.e_min_ratio * material.E0;

  Material unit = material;
  unit.E0 = 1.0;
  k0_ = element_stiffness(unit, ElementDims::of(mesh));

  const int ndof = mesh.num_dofs();
  if (static_cast<int>(force_.size()) != ndof)
    throw Error(ErrorCode::invalid_argument, "force vector length does not match the mesh");
  reduced_index_.assign(static_cast<std::size_t>(ndof), 0);
  for (int dof : arrays.fixed_dofs)
    if (dof >= 0 && dof < ndof) reduced_index_[dof] = -1;
  for (int dof = 0; dof < ndof; ++dof) {
    if (reduced_index_[dof] < 0) continue;
    reduced_index_[dof] = static_cast<int>(free_dofs_.size());
    free_dofs_.push_back(dof);
  }
  const int nfree = static_cast<int>(free_dofs_.size());
  f_reduced_.resize(nfree);
  for (int i = 0; i < nfree; ++i) f_reduced_[i] = force_[free_dofs_[i]];

  const int nloc = mesh.dofs_per_element();
  std::vector<Eigen::Triplet<double>> pattern;
  pattern.reserve(static_cast<std::size_t>(mesh.num_elements()) * nloc * nloc);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.element_dofs(e);
    for (int i = 0; i < nloc; ++i) {
      const int ri = reduced_index_[dofs[i]];
      if (ri < 0) continue;
      for (int j = 0; j < nloc; ++j) {
        const int rj = reduced_index_[dofs[j]];
        if (rj >= 0) pattern.emplace_back(ri, rj, 0.0);
      }
    }
  }
  stiffness_.resize(nfree, nfree);
  stiffness_.setFromTriplets(pattern.begin(), pattern.end());
  stiffness_.makeCompressed();

  slots_.assign(static_cast<std::size_t>(mesh.num_elements()) * nloc * nloc, -1);
  const int* outer = stiffness_.outerIndexPtr();
  const int* inner = stiffness_.innerIndexPtr();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.element_dofs(e);
    for (int j = 0; j < nloc; ++j) {
      const int rj = reduced_index_[dofs[j]];
      if (rj < 0) continue;
      for (int i = 0; i < nloc; ++i) {
        const int ri = reduced_index_[dofs[i]];
        if (ri < 0) continue;
        const int* pos = std::lower_bound(inner + outer[rj], inner + outer[rj + 1], ri);
        slots_[(static_cast<std::size_t>(e) * nloc + i) * nloc + j] = static_cast<int>(pos - inner);
      }
    }
  }
}

void FeModel::assemble(std::span<const double> rho, double penal) {
  double* values = stiffness_.valuePtr();
  std::fill(values, values + stiffness_.nonZeros(), 0.0);
  const int nloc = mesh_.dofs_per_element();
  const double span_e = material_.E0 - e_min_;
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const double modulus = e_min_ + std::pow(rho[e], penal) * span_e;
    const int* slot = &slots_[static_cast<std::size_t>(e) * nloc * nloc];
    for (int i = 0; i < nloc; ++i)
      for (int j = 0; j < nloc; ++j) {
        const int s = slot[i * nloc + j];
        if (s >= 0) values[s] += modulus * k0_(i, j);
      }
  }
}

Eigen::VectorXd FeModel::solve_direct() {
  if (!analyzed_) {
    llt_.analyzePattern(stiffness_);
    analyzed_ = true;
  }
  llt_.factorize(stiffness_);
  if (llt_.info() != Eigen::Success)
    throw Error(ErrorCode::singular_system, "sparse Cholesky factorization failed");
  Eigen::VectorXd u = llt_.solve(f_reduced_);
  if (llt_.info() != Eigen::Success || !u.allFinite())
    throw Error(ErrorCode::singular_system, "sparse Cholesky solve failed");
  const double residual = (stiffness_ * u - f_reduced_).norm();
  if (residual > 1e-6 * f_reduced_.norm())
    throw Error(ErrorCode::singular_system, "direct solve residual too large; system is singular");
  return u;
}

// Jacobi-preconditioned conjugate gradient, warm-started from the previous solution.
Eigen::VectorXd FeModel::solve_pcg(int& iterations) {
  const Eigen::Index n = f_reduced_.size();
  const Eigen::VectorXd diag = stiffness_.diagonal();
  if ((diag.array() <= 0.0).any())
    throw Error(ErrorCode::singular_system, "nonpositive stiffness diagonal");
  const Eigen::VectorXd inv_diag = diag.cwiseInverse();

  Eigen::VectorXd x = warm_start_.size() == n ? warm_start_ : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = f_reduced_ - stiffness_ * x;
  const double b_norm = f_reduced_.norm();
  const double target = options_.cg_tolerance * b_norm;
  const int max_iter = options_.cg_max_iterations > 0 ? options_.cg_max_iterations : static_cast<int>(10 * n);

  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd q(n);
  double rz = r.dot(z);
  iterations = 0;
  while (r.norm() > target) {
    if (iterations >= max_iter)
      throw Error(ErrorCode::singular_system,
                  "conjugate gradient did not converge in " + std::to_string(max_iter) + " iterations");
    q.noalias() = stiffness_ * p;
    const double pq = p.dot(q);
    if (!(pq > 0.0)) throw Error(ErrorCode::singular_system, "conjugate gradient breakdown");
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    ++iterations;
  }
  warm_start_ = x;
  return x;
}

FieldState FeModel::solve(std::span<const double> rho, double penal) {
  if (static_cast<int>(rho.size()) != mesh_.num_elements())
    throw Error(ErrorCode::invalid_argument, "density length does not match the mesh");
  FieldState state;
  state.displacement.assign(force_.size(), 0.0);
  state.sensitivity.assign(rho.size(), 0.0);
  if (f_reduced_.size() == 0 || f_reduced_.isZero(0.0)) return state;

  assemble(rho, penal);
  Eigen::VectorXd u;
  if (kind_ == LinearSolverKind::direct) {
    u = solve_direct();
  } else {
    u = solve_pcg(state.solver_iterations);
  }
  for (std::size_t i = 0; i < free_dofs_.size(); ++i) state.displacement[free_dofs_[i]] = u[static_cast<Eigen::Index>(i)];

  double c = 0.0;
  for (std::size_t i = 0; i < force_.size(); ++i) c += force_[i] * state.displacement[i];
  state.compliance = c;

  const int nloc = mesh_.dofs_per_element();
  const double span_e = material_.E0 - e_min_;
  Eigen::VectorXd ue(nloc);
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const auto dofs = mesh_.element_dofs(e);
    for (int i = 0; i < nloc; ++i) ue[i] = state.displacement[dofs[i]];
    const double energy = ue.dot(k0_ * ue);
    state.sensitivity[e] = -penal * std::pow(rho[e], penal - 1.0) * span_e * energy;
  }
  return state;
}

FieldState assemble_and_solve(const Mesh& mesh, const Material& material, std::span<const double> rho_phys,
                              const SolverArrays& arrays, double penal, FeOptions options) {
  FeModel model(mesh, material, arrays, options);
  return model.solve(rho_phys, penal);
}

double compliance_gradient_check(const Mesh& mesh, const Material& material, const SolverArrays& arrays,
                                 std::span<const double> rho_phys, double penal) {
  FeOptions opts;
  opts.solver = LinearSolverKind::direct;
  FeModel model(mesh, material, arrays, opts);
  const FieldState base = model.solve(rho_phys, penal);
  std::vector<double> rho(rho_phys.begin(), rho_phys.end());
  const double step = 1e-6;
  double worst = 0.0;
  for (std::size_t e = 0; e < rho.size(); ++e) {
    if (std::abs(base.sensitivity[e]) <= 1e-12) continue;
    const double keep = rho[e];
    rho[e] = keep + step;
    const double c_plus = model.solve(rho, penal).compliance;
    rho[e] = keep - step;
    const double c_minus = model.solve(rho, penal).compliance;
    rho[e] = keep;
    const double fd = (c_plus - c_minus) / (2 * step);
    worst = std::max(worst, std::abs(base.sensitivity[e] - fd) / std::abs(base.sensitivity[e]));
  }
  return worst;
}

} // namespace autosimp
