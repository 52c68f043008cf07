#pragma once

#include <array>
#include <cstddef>

#include "autosimp/problem_spec.hpp"

namespace autosimp {

/// Structured grid of unit-index elements.
///
/// Element index: e = iz*(nx*ny) + iy*nx + ix (ix fastest, iy = 0 at the bottom,
/// iz = 0 at the front face). Node index: n = iz*((nx+1)*(ny+1)) + iy*(nx+1) + ix.
/// DOF index: dim*n + axis. Planar meshes have nz = 1 and no z nodes.
struct Mesh {
  int nx = 1;
  int ny = 1;
  int nz = 1;
  bool solid = false; // true for hexahedral meshes
  double hx = 1.0;
  double hy = 1.0;
  double hz = 1.0;

  static Mesh from_spec(const ProblemSpec& spec);

  int dim() const { return solid ? 3 : 2; }
  int nodes_x() const { return nx + 1; }
  int nodes_y() const { return ny + 1; }
  int nodes_z() const { return solid ? nz + 1 : 1; }
  int num_elements() const { return nx * ny * nz; }
  int num_nodes() const { return nodes_x() * nodes_y() * nodes_z(); }
  int num_dofs() const { return dim() * num_nodes(); }
  int nodes_per_element() const { return solid ? 8 : 4; }
  int dofs_per_element() const { return dim() * nodes_per_element(); }

  int element_index(int ix, int iy, int iz = 0) const { return (iz * ny + iy) * nx + ix; }
  int node_index(int ix, int iy, int iz = 0) const {
    return (iz * nodes_y() + iy) * nodes_x() + ix;
  }
  std::array<int, 3> element_coords(int e) const {
    return {e % nx, (e / nx) % ny, e / (nx * ny)};
  }
  std::array<int, 3> node_coords(int n) const {
    return {n % nodes_x(), (n / nodes_x()) % nodes_y(), n / (nodes_x() * nodes_y())};
  }
  std::array<double, 3> node_position(int n) const;
  std::array<double, 3> element_centroid(int e) const;

  /// Local node order: counter-clockwise in the z = iz plane (00, 10, 11, 01),
  /// then the same four at iz + 1 for hexahedra.
  std::array<int, 8> element_nodes(int e) const;
  /// Element DOF list in local node order, `dofs_per_element()` entries used.
  std::array<int, 24> element_dofs(int e) const;
};

} // namespace autosimp
