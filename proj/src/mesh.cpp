#include "autosimp/mesh.hpp"

namespace autosimp {

Mesh Mesh::from_spec(const ProblemSpec& spec) {
  Mesh m;
  m.nx = spec.mesh.nx;
  m.ny = spec.mesh.ny;
  m.solid = spec.is_3d();
  m.nz = m.solid ? spec.mesh.nz.value_or(1) : 1;
  m.hx = spec.domain_size.lx / m.nx;
  m.hy = spec.domain_size.ly / m.ny;
  m.hz = m.solid ? *spec.domain_size.lz / m.nz : 1.0;
  return m;
}

std::array<double, 3> Mesh::node_position(int n) const {
  const auto c = node_coords(n);
  return {c[0] * hx, c[1] * hy, solid ? c[2] * hz : 0.0};
}

std::array<double, 3> Mesh::element_centroid(int e) const {
  const auto c = element_coords(e);
  return {(c[0] + 0.5) * hx, (c[1] + 0.5) * hy, solid ? (c[2] + 0.5) * hz : 0.0};
}

std::array<int, 8> Mesh::element_nodes(int e) const {
  const auto [ix, iy, iz] = element_coords(e);
  std::array<int, 8> nodes{};
  nodes[0] = node_index(ix, iy, iz);
  nodes[1] = node_index(ix + 1, iy, iz);
  nodes[2] = node_index(ix + 1, iy + 1, iz);
  nodes[3] = node_index(ix, iy + 1, iz);
  if (solid) {
    nodes[4] = node_index(ix, iy, iz + 1);
    nodes[5] = node_index(ix + 1, iy, iz + 1);
    nodes[6] = node_index(ix + 1, iy + 1, iz + 1);
    nodes[7] = node_index(ix, iy + 1, iz + 1);
  }
  return nodes;
}

std::array<int, 24> Mesh::element_dofs(int e) const {
  const auto nodes = element_nodes(e);
  const int d = dim();
  std::array<int, 24> dofs{};
  for (int a = 0; a < nodes_per_element(); ++a)
    for (int k = 0; k < d; ++k) dofs[a * d + k] = d * nodes[a] + k;
  return dofs;
}

} // namespace autosimp
