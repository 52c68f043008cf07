#include "autosimp/problem_spec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "autosimp/bc_generator.hpp"
#include "autosimp/errors.hpp"
#include "autosimp/mesh.hpp"

namespace autosimp {

std::string_view to_string(Edge e) {
  switch (e) {
  case Edge::left: return "left";
  case Edge::right: return "right";
  case Edge::bottom: return "bottom";
  case Edge::top: return "top";
  case Edge::front: return "front";
  case Edge::back: return "back";
  }
  return "left";
}

std::string_view to_string(SupportKind k) {
  switch (k) {
  case SupportKind::fixed: return "fixed";
  case SupportKind::pin_x: return "pin_x";
  case SupportKind::pin_y: return "pin_y";
  case SupportKind::pin_z: return "pin_z";
  case SupportKind::roller_x: return "roller_x";
  case SupportKind::roller_y: return "roller_y";
  case SupportKind::roller_z: return "roller_z";
  }
  return "fixed";
}

std::string_view to_string(PassiveType t) { return t == PassiveType::solid ? "solid" : "void"; }

std::string_view to_string(RailAction a) {
  switch (a) {
  case RailAction::clamped: return "clamped";
  case RailAction::defaulted: return "defaulted";
  case RailAction::adjusted: return "adjusted";
  case RailAction::warned: return "warned";
  case RailAction::rejected: return "rejected";
  }
  return "warned";
}

std::optional<Edge> parse_edge(std::string_view s) {
  for (Edge e : {Edge::left, Edge::right, Edge::bottom, Edge::top, Edge::front, Edge::back})
    if (to_string(e) == s) return e;
  return std::nullopt;
}

std::optional<SupportKind> parse_support_kind(std::string_view s) {
  for (SupportKind k : {SupportKind::fixed, SupportKind::pin_x, SupportKind::pin_y, SupportKind::pin_z,
                        SupportKind::roller_x, SupportKind::roller_y, SupportKind::roller_z})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<PassiveType> parse_passive_type(std::string_view s) {
  if (s == "void") return PassiveType::void_;
  if (s == "solid") return PassiveType::solid;
  return std::nullopt;
}

SpecCandidate SpecCandidate::from_spec(const ProblemSpec& spec) {
  SpecCandidate c;
  c.domain_size = spec.domain_size;
  c.mesh = spec.mesh;
  c.volume_fraction = spec.volume_fraction;
  c.supports = spec.supports;
  c.loads = spec.loads;
  c.passive_regions = spec.passive_regions;
  c.material = spec.material;
  c.solve = spec.solve;
  return c;
}

bool has_rail_action(const RailLog& log, RailAction action) {
  return std::any_of(log.begin(), log.end(), [&](const RailEntry& e) { return e.action == action; });
}

namespace {

[[noreturn]] void reject(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

bool edge_valid(Edge e, int dim) { return dim == 3 || (e != Edge::front && e != Edge::back); }

bool kind_valid(SupportKind k, int dim) {
  return dim == 3 || (k != SupportKind::pin_z && k != SupportKind::roller_z);
}

double element_aspect(const Domain& d, const MeshSize& m) {
  std::vector<double> h{d.lx / m.nx, d.ly / m.ny};
  if (d.lz && m.nz) h.push_back(*d.lz / *m.nz);
  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  return *hi / *lo;
}

long total_elements(const MeshSize& m) {
  return static_cast<long>(m.nx) * m.ny * (m.nz ? *m.nz : 1);
}

// square-element repair: keep nx, derive the other counts from the domain ratio;
// if that drifts more than 25% from the original element count, redistribute
// the original count over the axes instead.
MeshSize repair_mesh(const Domain& d, const MeshSize& m) {
  auto count_for = [](double length_ratio, int n) {
    return std::max(1, static_cast<int>(std::lround(n * length_ratio)));
  };
  MeshSize square = m;
  square.ny = count_for(d.ly / d.lx, m.nx);
  if (d.lz) square.nz = count_for(*d.lz / d.lx, m.nx);

  const double original = static_cast<double>(total_elements(m));
  if (std::abs(total_elements(square) - original) <= 0.25 * original) return square;

  const double volume = d.lx * d.ly * (d.lz ? *d.lz : 1.0);
  const double per_length = std::pow(original / volume, 1.0 / (d.lz ? 3.0 : 2.0));
  MeshSize balanced = m;
  balanced.nx = std::max(1, static_cast<int>(std::lround(d.lx * per_length)));
  balanced.ny = std::max(1, static_cast<int>(std::lround(d.ly * per_length)));
  if (d.lz) balanced.nz = std::max(1, static_cast<int>(std::lround(*d.lz * per_length)));
  return balanced;
}

void check_coords_length(const Coords& c, int dim, ErrorCode code, const std::string& what) {
  if (static_cast<int>(c.size()) != dim)
    reject(code, what + " has " + std::to_string(c.size()) + " components, expected " +
                     std::to_string(dim));
}

void clamp_into_domain(Coords& x, const Domain& d, RailLog& log, const std::string& what) {
  const double bounds[3] = {d.lx, d.ly, d.lz.value_or(0.0)};
  for (std::size_t k = 0; k < x.size() && k < 3; ++k) {
    const double clamped = std::clamp(x[k], 0.0, bounds[k]);
    if (clamped != x[k]) {
      log.push_back({"coordinate_bounds", RailAction::clamped,
                     what + " axis " + std::to_string(k) + " " + fmt(x[k]) + " -> " + fmt(clamped)});
      x[k] = clamped;
    }
  }
}

bool all_zero(const Coords& v) {
  return std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; });
}

} // namespace

ValidatedSpec validate_spec(const SpecCandidate& raw) {
  ValidatedSpec out;
  ProblemSpec& spec = out.spec;
  RailLog& log = out.log;

  // Geometry.
  if (raw.domain_size) {
    spec.domain_size = *raw.domain_size;
  } else {
    spec.domain_size = Domain{};
    log.push_back({"domain_size", RailAction::defaulted, "domain 2 x 1"});
  }
  const Domain& dom = spec.domain_size;
  if (!(dom.lx > 0.0) || !(dom.ly > 0.0) || (dom.lz && !(*dom.lz > 0.0)))
    reject(ErrorCode::reject_bad_geometry, "domain dimensions must be strictly positive");
  const int dim = spec.dim();

  if (raw.mesh) {
    spec.mesh = *raw.mesh;
  } else {
    spec.mesh = MeshSize{};
    log.push_back({"mesh", RailAction::defaulted, "mesh 60 x 30"});
  }
  if (dim == 3 && !spec.mesh.nz) {
    spec.mesh.nz = std::max(1, static_cast<int>(std::lround(spec.mesh.nx * *dom.lz / dom.lx)));
    log.push_back({"mesh", RailAction::defaulted, "nz = " + std::to_string(*spec.mesh.nz)});
  }
  if (dim == 2 && spec.mesh.nz) {
    log.push_back({"mesh", RailAction::adjusted, "dropped nz for a planar domain"});
    spec.mesh.nz.reset();
  }
  if (spec.mesh.nx < 1 || spec.mesh.ny < 1 || (spec.mesh.nz && *spec.mesh.nz < 1))
    reject(ErrorCode::reject_bad_geometry, "element counts must be positive");

  // Volume fraction.
  if (raw.volume_fraction) {
    spec.volume_fraction = *raw.volume_fraction;
    if (!std::isfinite(spec.volume_fraction))
      reject(ErrorCode::reject_bad_geometry, "volume fraction is not finite");
    const double clamped = std::clamp(spec.volume_fraction, kMinVolumeFraction, kMaxVolumeFraction);
    if (clamped != spec.volume_fraction) {
      log.push_back({"volume_fraction", RailAction::clamped,
                     fmt(spec.volume_fraction) + " -> " + fmt(clamped)});
      spec.volume_fraction = clamped;
    }
  } else {
    spec.volume_fraction = 0.5;
    log.push_back({"volume_fraction", RailAction::defaulted, "0.5"});
  }

  // Material and solve settings.
  if (raw.material) {
    spec.material = *raw.material;
  } else {
    log.push_back({"material", RailAction::defaulted, "E0 = 1, nu = 0.3, rho_min = 0.001"});
  }
  const Material& mat = spec.material;
  if (!(mat.E0 > 0.0) || !(mat.nu > 0.0 && mat.nu < 0.5) || !(mat.rho_min > 0.0 && mat.rho_min < 1.0))
    reject(ErrorCode::reject_bad_material, "require E0 > 0, 0 < nu < 0.5, 0 < rho_min < 1");
  if (raw.solve) spec.solve = *raw.solve;
  if (spec.solve.max_iterations < 0)
    reject(ErrorCode::invalid_argument, "max_iterations must be nonnegative");

  // Supports.
  if (raw.supports.empty()) reject(ErrorCode::reject_no_supports, "no supports given");
  for (std::size_t i = 0; i < raw.supports.size(); ++i) {
    SupportConstraint s = raw.supports[i];
    const std::string what = "support " + std::to_string(i);
    if (!kind_valid(s.kind, dim))
      reject(ErrorCode::reject_bad_support, what + ": kind " + std::string(to_string(s.kind)) +
                                                " needs a 3-D domain");
    if (const auto* e = std::get_if<Edge>(&s.location)) {
      if (!edge_valid(*e, dim))
        reject(ErrorCode::reject_bad_support, what + ": edge " + std::string(to_string(*e)) +
                                                  " needs a 3-D domain");
    } else {
      auto& p = std::get<Coords>(s.location);
      check_coords_length(p, dim, ErrorCode::reject_bad_support, what);
      clamp_into_domain(p, dom, log, what);
    }
    spec.supports.push_back(std::move(s));
  }

  // Loads.
  for (std::size_t i = 0; i < raw.loads.size(); ++i) {
    LoadSpec load = raw.loads[i];
    const std::string what = "load " + std::to_string(i);
    if (auto* p = std::get_if<PointLoad>(&load)) {
      check_coords_length(p->point, dim, ErrorCode::reject_bad_load, what + " point");
      check_coords_length(p->force, dim, ErrorCode::reject_bad_load, what + " force");
      if (all_zero(p->force)) {
        log.push_back({"load_nonzero", RailAction::warned, what + " has zero force and was dropped"});
        continue;
      }
      clamp_into_domain(p->point, dom, log, what);
    } else {
      const auto& d = std::get<DistributedLoad>(load);
      if (!edge_valid(d.edge, dim))
        reject(ErrorCode::reject_bad_load, what + ": edge " + std::string(to_string(d.edge)) +
                                               " needs a 3-D domain");
      if (d.pressure == 0.0) {
        log.push_back({"load_nonzero", RailAction::warned, what + " has zero pressure and was dropped"});
        continue;
      }
    }
    spec.loads.push_back(std::move(load));
  }
  if (spec.loads.empty()) reject(ErrorCode::reject_no_loads, "no nonzero loads given");

  // Passive regions.
  for (std::size_t i = 0; i < raw.passive_regions.size(); ++i) {
    const PassiveRegion& r = raw.passive_regions[i];
    const std::string what = "passive region " + std::to_string(i);
    auto length_ok = [&](const Coords& c) {
      return c.size() == 2 || static_cast<int>(c.size()) == dim;
    };
    if (const auto* c = std::get_if<Circle>(&r.shape)) {
      if (!(c->radius > 0.0)) reject(ErrorCode::reject_bad_region, what + ": radius must be positive");
      if (!length_ok(c->center)) reject(ErrorCode::reject_bad_region, what + ": bad center length");
    } else {
      const auto& b = std::get<Box>(r.shape);
      if (!length_ok(b.min) || b.min.size() != b.max.size())
        reject(ErrorCode::reject_bad_region, what + ": bad bounding box length");
      for (std::size_t k = 0; k < b.min.size(); ++k)
        if (!(b.min[k] < b.max[k]))
          reject(ErrorCode::reject_bad_region, what + ": box min must be below max on every axis");
    }
    spec.passive_regions.push_back(r);
  }

  // Mesh aspect ratio.
  const double aspect = element_aspect(dom, spec.mesh);
  if (aspect > kMaxElementAspect) {
    const MeshSize before = spec.mesh;
    spec.mesh = repair_mesh(dom, spec.mesh);
    std::ostringstream os;
    os << "element aspect " << aspect << " > 3; mesh " << before.nx << "x" << before.ny;
    if (before.nz) os << "x" << *before.nz;
    os << " -> " << spec.mesh.nx << "x" << spec.mesh.ny;
    if (spec.mesh.nz) os << "x" << *spec.mesh.nz;
    log.push_back({"mesh_aspect", RailAction::adjusted, os.str()});
  }

  // Loads landing on constrained DOFs are flagged, not rejected.
  const SolverArrays arrays = generate_bc(spec);
  for (const auto& w : arrays.warnings) {
    const char* rail = w.code == "WARN_LOAD_ON_FIXED_DOF" ? "load_on_fixed_dof" : "passive_region";
    log.push_back({rail, RailAction::warned, w.code + ": " + w.detail});
  }

  return out;
}

ValidatedSpec validate_spec(const ProblemSpec& spec) {
  return validate_spec(SpecCandidate::from_spec(spec));
}

} // namespace autosimp
