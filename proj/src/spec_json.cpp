#include "autosimp/spec_json.hpp"

#include <initializer_list>

#include "autosimp/errors.hpp"

namespace autosimp {
namespace {

using json = nlohmann::json;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::parse_error, (where.empty() ? std::string("/") : where) + ": " + what);
}

void only_fields(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) parse_fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) parse_fail(where + "/" + key, "unknown field \"" + key + "\"");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) parse_fail(where, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) parse_fail(where, "expected a string");
  return j.get<std::string>();
}

Coords get_coords(const json& j, const std::string& where) {
  if (!j.is_array()) parse_fail(where, "expected an array of numbers");
  Coords c;
  for (std::size_t i = 0; i < j.size(); ++i) c.push_back(get_number(j[i], where + "/" + std::to_string(i)));
  return c;
}

Edge get_edge(const json& j, const std::string& where) {
  const auto s = get_string(j, where);
  const auto e = parse_edge(s);
  if (!e) parse_fail(where, "unknown edge \"" + s + "\"");
  return *e;
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& require(const json& j, const char* key, const std::string& where) {
  const json* v = find(j, key);
  if (!v) parse_fail(where + "/" + key, "missing required field");
  return *v;
}

SupportConstraint parse_support(const json& j, const std::string& where) {
  only_fields(j, where, {"edge", "point", "kind"});
  SupportConstraint s;
  const auto kind = get_string(require(j, "kind", where), where + "/kind");
  const auto k = parse_support_kind(kind);
  if (!k) parse_fail(where + "/kind", "unknown support kind \"" + kind + "\"");
  s.kind = *k;
  const json* edge = find(j, "edge");
  const json* point = find(j, "point");
  if ((edge != nullptr) == (point != nullptr)) parse_fail(where, "exactly one of \"edge\" or \"point\" is required");
  if (edge)
    s.location = get_edge(*edge, where + "/edge");
  else
    s.location = get_coords(*point, where + "/point");
  return s;
}

LoadSpec parse_load(const json& j, const std::string& where) {
  only_fields(j, where, {"point", "force", "edge", "pressure"});
  if (find(j, "point")) {
    if (find(j, "edge") || find(j, "pressure")) parse_fail(where, "point loads take only \"point\" and \"force\"");
    PointLoad p;
    p.point = get_coords(*find(j, "point"), where + "/point");
    p.force = get_coords(require(j, "force", where), where + "/force");
    return p;
  }
  if (find(j, "force")) parse_fail(where + "/force", "\"force\" requires \"point\"");
  DistributedLoad d;
  d.edge = get_edge(require(j, "edge", where), where + "/edge");
  d.pressure = get_number(require(j, "pressure", where), where + "/pressure");
  return d;
}

PassiveRegion parse_region(const json& j, const std::string& where) {
  PassiveRegion r;
  const auto shape = get_string(require(j, "shape", where), where + "/shape");
  const auto type = get_string(require(j, "type", where), where + "/type");
  const auto t = parse_passive_type(type);
  if (!t) parse_fail(where + "/type", "unknown region type \"" + type + "\"");
  r.type = *t;
  if (shape == "circle") {
    only_fields(j, where, {"shape", "center", "radius", "type"});
    r.shape = Circle{get_coords(require(j, "center", where), where + "/center"),
                     get_number(require(j, "radius", where), where + "/radius")};
  } else if (shape == "rectangle") {
    only_fields(j, where, {"shape", "min", "max", "type"});
    r.shape = Box{get_coords(require(j, "min", where), where + "/min"),
                  get_coords(require(j, "max", where), where + "/max")};
  } else {
    parse_fail(where + "/shape", "unknown shape \"" + shape + "\"");
  }
  return r;
}

template <class F>
auto parse_list(const json& root, const char* key, F&& parse_one) {
  std::vector<decltype(parse_one(root, std::string{}))> out;
  const json* arr = find(root, key);
  if (!arr) return out;
  const std::string where = std::string("/") + key;
  if (!arr->is_array()) parse_fail(where, "expected an array");
  for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(parse_one((*arr)[i], where + "/" + std::to_string(i)));
  return out;
}

ordered_json coords_json(const Coords& c) {
  ordered_json a = ordered_json::array();
  for (double v : c) a.push_back(v);
  return a;
}

} // namespace

SpecCandidate candidate_from_json(const json& j) {
  only_fields(j, "", {"domain_size", "mesh", "volume_fraction", "supports", "loads", "passive_regions",
                      "material", "solve"});
  SpecCandidate c;
  if (const json* d = find(j, "domain_size")) {
    only_fields(*d, "/domain_size", {"lx", "ly", "lz"});
    Domain dom;
    dom.lx = get_number(require(*d, "lx", "/domain_size"), "/domain_size/lx");
    dom.ly = get_number(require(*d, "ly", "/domain_size"), "/domain_size/ly");
    if (const json* lz = find(*d, "lz")) dom.lz = get_number(*lz, "/domain_size/lz");
    c.domain_size = dom;
  }
  if (const json* m = find(j, "mesh")) {
    only_fields(*m, "/mesh", {"nx", "ny", "nz"});
    MeshSize mesh;
    mesh.nx = get_int(require(*m, "nx", "/mesh"), "/mesh/nx");
    mesh.ny = get_int(require(*m, "ny", "/mesh"), "/mesh/ny");
    if (const json* nz = find(*m, "nz")) mesh.nz = get_int(*nz, "/mesh/nz");
    c.mesh = mesh;
  }
  if (const json* vf = find(j, "volume_fraction")) c.volume_fraction = get_number(*vf, "/volume_fraction");
  c.supports = parse_list(j, "supports", parse_support);
  c.loads = parse_list(j, "loads", parse_load);
  c.passive_regions = parse_list(j, "passive_regions", parse_region);
  if (const json* mat = find(j, "material")) {
    only_fields(*mat, "/material", {"E0", "nu", "rho_min"});
    Material m;
    if (const json* v = find(*mat, "E0")) m.E0 = get_number(*v, "/material/E0");
    if (const json* v = find(*mat, "nu")) m.nu = get_number(*v, "/material/nu");
    if (const json* v = find(*mat, "rho_min")) m.rho_min = get_number(*v, "/material/rho_min");
    c.material = m;
  }
  if (const json* s = find(j, "solve")) {
    only_fields(*s, "/solve", {"max_iterations", "seed"});
    SolveSettings st;
    if (const json* v = find(*s, "max_iterations")) st.max_iterations = get_int(*v, "/solve/max_iterations");
    if (const json* v = find(*s, "seed")) {
      if (!v->is_number_integer()) parse_fail("/solve/seed", "expected an integer");
      st.seed = v->get<std::int64_t>();
    }
    c.solve = st;
  }
  return c;
}

SpecCandidate deserialize_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return candidate_from_json(j);
}

ordered_json spec_to_json(const ProblemSpec& spec) {
  ordered_json j;
  ordered_json dom;
  dom["lx"] = spec.domain_size.lx;
  dom["ly"] = spec.domain_size.ly;
  if (spec.domain_size.lz) dom["lz"] = *spec.domain_size.lz;
  j["domain_size"] = dom;
  ordered_json mesh;
  mesh["nx"] = spec.mesh.nx;
  mesh["ny"] = spec.mesh.ny;
  if (spec.mesh.nz) mesh["nz"] = *spec.mesh.nz;
  j["mesh"] = mesh;
  j["volume_fraction"] = spec.volume_fraction;

  ordered_json supports = ordered_json::array();
  for (const auto& s : spec.supports) {
    ordered_json o;
    if (const auto* e = std::get_if<Edge>(&s.location))
      o["edge"] = std::string(to_string(*e));
    else
      o["point"] = coords_json(std::get<Coords>(s.location));
    o["kind"] = std::string(to_string(s.kind));
    supports.push_back(o);
  }
  j["supports"] = supports;

  ordered_json loads = ordered_json::array();
  for (const auto& l : spec.loads) {
    ordered_json o;
    if (const auto* p = std::get_if<PointLoad>(&l)) {
      o["point"] = coords_json(p->point);
      o["force"] = coords_json(p->force);
    } else {
      const auto& d = std::get<DistributedLoad>(l);
      o["edge"] = std::string(to_string(d.edge));
      o["pressure"] = d.pressure;
    }
    loads.push_back(o);
  }
  j["loads"] = loads;

  ordered_json regions = ordered_json::array();
  for (const auto& r : spec.passive_regions) {
    ordered_json o;
    if (const auto* c = std::get_if<Circle>(&r.shape)) {
      o["shape"] = "circle";
      o["center"] = coords_json(c->center);
      o["radius"] = c->radius;
    } else {
      const auto& b = std::get<Box>(r.shape);
      o["shape"] = "rectangle";
      o["min"] = coords_json(b.min);
      o["max"] = coords_json(b.max);
    }
    o["type"] = std::string(to_string(r.type));
    regions.push_back(o);
  }
  j["passive_regions"] = regions;

  ordered_json mat;
  mat["E0"] = spec.material.E0;
  mat["nu"] = spec.material.nu;
  mat["rho_min"] = spec.material.rho_min;
  j["material"] = mat;
  ordered_json solve;
  solve["max_iterations"] = spec.solve.max_iterations;
  solve["seed"] = spec.solve.seed;
  j["solve"] = solve;
  return j;
}

std::string serialize_spec(const ProblemSpec& spec) { return spec_to_json(spec).dump(2) + "\n"; }

ordered_json rail_log_to_json(const RailLog& log) {
  ordered_json a = ordered_json::array();
  for (const auto& e : log) {
    ordered_json o;
    o["rail"] = e.rail;
    o["action"] = std::string(to_string(e.action));
    o["detail"] = e.detail;
    a.push_back(o);
  }
  return a;
}

} // namespace autosimp
