#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autosimp/mesh.hpp"
#include "autosimp/problem_spec.hpp"

namespace autosimp {

enum class PassiveState : std::uint8_t { free, void_, solid };

struct BcWarning {
  std::string code; // WARN_LOAD_ON_FIXED_DOF, WARN_REGION_EMPTY
  std::string detail;
  bool operator==(const BcWarning&) const = default;
};

/// Solver-ready boundary conditions for one solve.
struct SolverArrays {
  std::vector<int> fixed_dofs; // sorted, unique
  std::vector<double> force;   // length ndof
  std::vector<PassiveState> passive_mask; // length num_elements
  std::vector<BcWarning> warnings;

  bool operator==(const SolverArrays&) const = default;
};

/// Nearest node by Euclidean distance, ties to the lowest node index.
int snap_point(std::span<const double> x, const Mesh& mesh);

/// Node indices lying on a named boundary edge (a face in 3-D), ascending.
std::vector<int> boundary_nodes(Edge edge, const Mesh& mesh);

/// Displacement components constrained by a support kind (axis indices).
std::vector<int> constrained_axes(SupportKind kind, int dim);

std::vector<int> fixed_dofs_for(const std::vector<SupportConstraint>& supports, const Mesh& mesh);

/// Point loads go to the snapped node; distributed loads use trapezoidal nodal weights
/// along the edge (tensor-product weights on 3-D faces) acting along the inward normal.
std::vector<double> assemble_force(const std::vector<LoadSpec>& loads, const Mesh& mesh);

/// Element-wise marking by strict centroid containment; later regions override earlier ones.
std::vector<PassiveState> build_passive_mask(const std::vector<PassiveRegion>& regions,
                                             const Mesh& mesh,
                                             std::vector<BcWarning>* warnings = nullptr);

SolverArrays generate_bc(const ProblemSpec& spec);

/// Nodes that carry a nonzero entry of the force vector, ascending.
std::vector<int> loaded_nodes(const SolverArrays& arrays, const Mesh& mesh);

} // namespace autosimp
