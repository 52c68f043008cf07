#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "autosimp/bc_generator.hpp"
#include "autosimp/mesh.hpp"
#include "autosimp/problem_spec.hpp"

namespace autosimp {

using ElementMatrix = Eigen::MatrixXd;

struct ElementDims {
  double hx = 1.0;
  double hy = 1.0;
  double hz = 1.0;
  bool solid = false;

  static ElementDims of(const Mesh& m) { return {m.hx, m.hy, m.hz, m.solid}; }
};

/// Isotropic constitutive matrix in Voigt order; plane stress for planar elements
/// ([xx, yy, xy]), full 3-D otherwise ([xx, yy, zz, yz, xz, xy], engineering shear).
Eigen::MatrixXd constitutive_matrix(const Material& mat, bool solid);

/// Bilinear quad (8x8) or trilinear hex (24x24) stiffness at modulus E0, 2-point Gauss rule.
ElementMatrix element_stiffness(const Material& mat, const ElementDims& dims);

/// Strain at a natural-coordinate point (each in [-1, 1]) for element DOF values `u_e`.
Eigen::VectorXd element_strain(const ElementDims& dims, const Eigen::VectorXd& u_e,
                               double xi, double eta, double zeta = 0.0);

struct FieldState {
  std::vector<double> displacement;
  double compliance = 0.0;
  std::vector<double> sensitivity; // dC/d(physical density), one per element
  int solver_iterations = 0;
};

enum class LinearSolverKind { automatic, direct, pcg };

struct FeOptions {
  LinearSolverKind solver = LinearSolverKind::automatic; // direct in 2-D, PCG in 3-D
  double cg_tolerance = 1e-8;
  int cg_max_iterations = 0; // 0 selects 10 * reduced size
  double e_min_ratio = 1e-9; // E_min = e_min_ratio * E0
};

/// Reusable assembly + solve context for one (mesh, material, boundary conditions) triple.
/// Holds the reduced sparsity pattern and solver state; not safe to share between threads.
class FeModel {
public:
  FeModel(const Mesh& mesh, const Material& material, const SolverArrays& arrays, FeOptions options = {});

  /// Modified SIMP: E(rho) = E_min + rho^p (E0 - E_min). Throws SINGULAR_SYSTEM.
  FieldState solve(std::span<const double> rho_phys, double penal);

  const Mesh& mesh() const { return mesh_; }
  const ElementMatrix& unit_stiffness() const { return k0_; }
  LinearSolverKind solver_kind() const { return kind_; }
  double e_min() const { return e_min_; }

private:
  void assemble(std::span<const double> rho_phys, double penal);
  Eigen::VectorXd solve_direct();
  Eigen::VectorXd solve_pcg(int& iterations);

  Mesh mesh_;
  Material material_;
  FeOptions options_;
  LinearSolverKind kind_;
  double e_min_;
  ElementMatrix k0_; // unit-modulus element stiffness
  std::vector<double> force_;
  std::vector<int> reduced_index_; // global dof -> reduced index, -1 if fixed
  std::vector<int> free_dofs_;
  Eigen::VectorXd f_reduced_;
  Eigen::SparseMatrix<double> stiffness_; // reduced, full symmetric storage
  std::vector<int> slots_;                // per element, per local (i, j): value index or -1
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  bool analyzed_ = false;
  Eigen::VectorXd warm_start_;
};

FieldState assemble_and_solve(const Mesh& mesh, const Material& material, std::span<const double> rho_phys,
                              const SolverArrays& arrays, double penal, FeOptions options = {});

/// Max relative error between analytic dC/drho and central differences (step 1e-6) on
/// physical densities, over elements with |grad| > 1e-12.
double compliance_gradient_check(const Mesh& mesh, const Material& material, const SolverArrays& arrays,
                                 std::span<const double> rho_phys, double penal);

} // namespace autosimp
