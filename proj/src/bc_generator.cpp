#include "autosimp/bc_generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace autosimp {
namespace {

int nearest_index(double x, double h, int n) {
  const int lo = std::clamp(static_cast<int>(std::floor(x / h)), 0, n);
  if (lo == n) return n;
  const double d_lo = std::abs(x - lo * h);
  const double d_hi = std::abs((lo + 1) * h - x);
  return d_lo <= d_hi ? lo : lo + 1;
}

// Axis that is constant on a boundary, and the index value along it.
struct BoundaryPlane {
  int axis;
  bool at_max;
};

BoundaryPlane plane_of(Edge edge) {
  switch (edge) {
  case Edge::left: return {0, false};
  case Edge::right: return {0, true};
  case Edge::bottom: return {1, false};
  case Edge::top: return {1, true};
  case Edge::front: return {2, false};
  case Edge::back: return {2, true};
  }
  return {0, false};
}

void add_distributed(const DistributedLoad& load, const Mesh& mesh, std::vector<double>& force) {
  const auto [axis, at_max] = plane_of(load.edge);
  const int d = mesh.dim();
  const std::array<int, 3> counts{mesh.nx, mesh.ny, mesh.nz};
  const std::array<double, 3> spacing{mesh.hx, mesh.hy, mesh.hz};
  const double normal_sign = at_max ? -1.0 : 1.0;

  auto tributary = [&](int ax, int i) {
    if (ax >= d) return 1.0; // planar: unit thickness
    const double h = spacing[ax];
    return (i == 0 || i == counts[ax]) ? h / 2.0 : h;
  };

  for (int n : boundary_nodes(load.edge, mesh)) {
    const auto c = mesh.node_coords(n);
    double w = 1.0;
    for (int ax = 0; ax < d; ++ax)
      if (ax != axis) w *= tributary(ax, c[ax]);
    force[d * n + axis] += load.pressure * w * normal_sign;
  }
}

} // namespace

int snap_point(std::span<const double> x, const Mesh& mesh) {
  const int ix = nearest_index(x.size() > 0 ? x[0] : 0.0, mesh.hx, mesh.nx);
  const int iy = nearest_index(x.size() > 1 ? x[1] : 0.0, mesh.hy, mesh.ny);
  const int iz = mesh.solid ? nearest_index(x.size() > 2 ? x[2] : 0.0, mesh.hz, mesh.nz) : 0;
  return mesh.node_index(ix, iy, iz);
}

std::vector<int> boundary_nodes(Edge edge, const Mesh& mesh) {
  const auto [axis, at_max] = plane_of(edge);
  const std::array<int, 3> counts{mesh.nx, mesh.ny, mesh.nz};
  const int target = at_max ? counts[axis] : 0;
  std::vector<int> nodes;
  if (axis == 2 && !mesh.solid) return nodes;
  for (int n = 0; n < mesh.num_nodes(); ++n)
    if (mesh.node_coords(n)[axis] == target) nodes.push_back(n);
  return nodes;
}

std::vector<int> constrained_axes(SupportKind kind, int dim) {
  switch (kind) {
  case SupportKind::fixed:
    return dim == 3 ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 1};
  case SupportKind::pin_x:
  case SupportKind::roller_x: return {0};
  case SupportKind::pin_y:
  case SupportKind::roller_y: return {1};
  case SupportKind::pin_z:
  case SupportKind::roller_z: return dim == 3 ? std::vector<int>{2} : std::vector<int>{};
  }
  return {};
}

std::vector<int> fixed_dofs_for(const std::vector<SupportConstraint>& supports, const Mesh& mesh) {
  const int d = mesh.dim();
  std::vector<int> dofs;
  for (const auto& s : supports) {
    std::vector<int> nodes;
    if (const auto* edge = std::get_if<Edge>(&s.location))
      nodes = boundary_nodes(*edge, mesh);
    else
      nodes.push_back(snap_point(std::get<Coords>(s.location), mesh));
    for (int n : nodes)
      for (int ax : constrained_axes(s.kind, d)) dofs.push_back(d * n + ax);
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

std::vector<double> assemble_force(const std::vector<LoadSpec>& loads, const Mesh& mesh) {
  const int d = mesh.dim();
  std::vector<double> force(static_cast<std::size_t>(mesh.num_dofs()), 0.0);
  for (const auto& load : loads) {
    if (const auto* p = std::get_if<PointLoad>(&load)) {
      const int n = snap_point(p->point, mesh);
      for (int ax = 0; ax < d && ax < static_cast<int>(p->force.size()); ++ax)
        force[d * n + ax] += p->force[ax];
    } else {
      add_distributed(std::get<DistributedLoad>(load), mesh, force);
    }
  }
  return force;
}

std::vector<PassiveState> build_passive_mask(const std::vector<PassiveRegion>& regions,
                                             const Mesh& mesh, std::vector<BcWarning>* warnings) {
  std::vector<PassiveState> mask(static_cast<std::size_t>(mesh.num_elements()), PassiveState::free);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& region = regions[r];
    const PassiveState state =
        region.type == PassiveType::solid ? PassiveState::solid : PassiveState::void_;
    int hits = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto c = mesh.element_centroid(e);
      bool inside = false;
      if (const auto* circle = std::get_if<Circle>(&region.shape)) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < circle->center.size() && k < 3; ++k) {
          const double dk = c[k] - circle->center[k];
          d2 += dk * dk;
        }
        inside = std::sqrt(d2) < circle->radius;
      } else {
        const auto& box = std::get<Box>(region.shape);
        inside = true;
        for (std::size_t k = 0; k < box.min.size() && k < 3; ++k)
          inside = inside && c[k] > box.min[k] && c[k] < box.max[k];
      }
      if (inside) {
        mask[e] = state;
        ++hits;
      }
    }
    if (hits == 0 && warnings) {
      std::ostringstream os;
      os << "passive region " << r << " contains no element centroids";
      warnings->push_back({"WARN_REGION_EMPTY", os.str()});
    }
  }
  return mask;
}

SolverArrays generate_bc(const ProblemSpec& spec) {
  const Mesh mesh = Mesh::from_spec(spec);
  SolverArrays arrays;
  arrays.fixed_dofs = fixed_dofs_for(spec.supports, mesh);
  arrays.force = assemble_force(spec.loads, mesh);
  arrays.passive_mask = build_passive_mask(spec.passive_regions, mesh, &arrays.warnings);

  const int d = mesh.dim();
  for (std::size_t i = 0; i < spec.loads.size(); ++i) {
    const auto* p = std::get_if<PointLoad>(&spec.loads[i]);
    if (!p) continue;
    const int n = snap_point(p->point, mesh);
    for (int ax = 0; ax < d && ax < static_cast<int>(p->force.size()); ++ax) {
      if (p->force[ax] == 0.0) continue;
      if (std::binary_search(arrays.fixed_dofs.begin(), arrays.fixed_dofs.end(), d * n + ax)) {
        std::ostringstream os;
        os << "load " << i << " acts on constrained DOF " << d * n + ax << " (node " << n << ")";
        arrays.warnings.push_back({"WARN_LOAD_ON_FIXED_DOF", os.str()});
      }
    }
  }
  return arrays;
}

std::vector<int> loaded_nodes(const SolverArrays& arrays, const Mesh& mesh) {
  const int d = mesh.dim();
  std::vector<int> nodes;
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    for (int ax = 0; ax < d; ++ax) {
      if (arrays.force[static_cast<std::size_t>(d * n + ax)] != 0.0) {
        nodes.push_back(n);
        break;
      }
    }
  }
  return nodes;
}

} // namespace autosimp
