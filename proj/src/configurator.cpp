#include "autosimp/configurator.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "autosimp/errors.hpp"
#include "autosimp/prompts.hpp"
#include "autosimp/spec_json.hpp"

namespace autosimp {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

enum class Archetype { cantilever, mbb, bridge, simply_supported };

std::optional<Archetype> find_archetype(const std::string& text) {
  if (text.find("mbb") != std::string::npos) return Archetype::mbb;
  if (text.find("cantilever") != std::string::npos) return Archetype::cantilever;
  if (text.find("bridge") != std::string::npos) return Archetype::bridge;
  if (std::regex_search(text, std::regex(R"(simply[\s-]+supported)"))) return Archetype::simply_supported;
  return std::nullopt;
}

/// Candidate from the LLM reply text; throws PARSE_ERROR.
SpecCandidate parse_reply(const std::string& reply) {
  const auto body = extract_json_object(reply);
  if (!body) throw Error(ErrorCode::parse_error, "reply contains no JSON object");
  return deserialize_spec(*body);
}

} // namespace

SpecCandidate regex_fallback(std::string_view prompt) {
  const std::string text = lower(prompt);
  const auto archetype = find_archetype(text);
  if (!archetype) throw Error(ErrorCode::fallback_no_archetype, "no archetype keyword in prompt");

  SpecCandidate c;
  std::smatch m;

  MeshSize mesh;
  static const std::regex mesh_re(R"((\d+)\s*(?:x|\*|\xC3\x97)\s*(\d+)(?:\s*(?:x|\*|\xC3\x97)\s*(\d+))?)");
  if (std::regex_search(text, m, mesh_re)) {
    mesh.nx = std::stoi(m[1].str());
    mesh.ny = std::stoi(m[2].str());
    if (m[3].matched) mesh.nz = std::stoi(m[3].str());
  }
  if (mesh.nx <= 0 || mesh.ny <= 0 || (mesh.nz && *mesh.nz <= 0))
    throw Error(ErrorCode::fallback_no_archetype, "mesh counts must be positive");

  Domain dom;
  dom.ly = 1.0;
  dom.lx = static_cast<double>(mesh.nx) / mesh.ny;
  if (mesh.nz) dom.lz = static_cast<double>(*mesh.nz) / mesh.ny;
  c.domain_size = dom;
  c.mesh = mesh;
  const bool solid = mesh.nz.has_value();

  static const std::regex pct_re(R"((\d+(?:\.\d+)?)\s*(?:%|percent))");
  static const std::regex vf_re(R"(volume[\s_-]*fraction\s*(?:of|=|:|is)?\s*(\d*\.\d+))");
  if (std::regex_search(text, m, pct_re)) c.volume_fraction = std::stod(m[1].str()) / 100.0;
  else if (std::regex_search(text, m, vf_re)) c.volume_fraction = std::stod(m[1].str());

  auto pt = [&](double x, double y, double z) {
    Coords p{x, y};
    if (solid) p.push_back(z);
    return p;
  };
  auto down = [&] { return solid ? Coords{0.0, -1.0, 0.0} : Coords{0.0, -1.0}; };
  const double lx = dom.lx, ly = dom.ly, lz = dom.lz.value_or(0.0);

  switch (*archetype) {
  case Archetype::cantilever:
    c.supports.push_back({Edge::left, SupportKind::fixed});
    c.loads.push_back(PointLoad{pt(lx, ly / 2, lz / 2), down()});
    break;
  case Archetype::mbb:
    c.supports.push_back({Edge::left, SupportKind::pin_x});
    c.supports.push_back({pt(lx, 0.0, lz / 2), SupportKind::pin_y});
    if (solid) c.supports.push_back({Edge::front, SupportKind::pin_z});
    c.loads.push_back(PointLoad{pt(0.0, ly, lz / 2), down()});
    break;
  case Archetype::bridge:
    c.supports.push_back({pt(0.0, 0.0, lz / 2), SupportKind::fixed});
    c.supports.push_back({pt(lx, 0.0, lz / 2), SupportKind::fixed});
    c.loads.push_back(DistributedLoad{Edge::top, 1.0});
    break;
  case Archetype::simply_supported:
    c.supports.push_back({pt(0.0, 0.0, lz / 2), SupportKind::fixed});
    c.supports.push_back({pt(lx, 0.0, lz / 2), SupportKind::pin_y});
    c.loads.push_back(PointLoad{pt(lx / 2, ly, lz / 2), down()});
    break;
  }

  if (std::regex_search(text, std::regex(R"(\b(hole|void|cutout|opening)s?\b)")))
    c.passive_regions.push_back({Circle{{lx / 2, ly / 2}, 0.2 * ly}, PassiveType::void_});
  return c;
}

ConfigureResult configure(std::string_view prompt, LlmBackend* backend, const LlmBackendConfig& config) {
  if (blank(prompt)) throw Error(ErrorCode::configure_failed, "empty prompt");

  ConfigureResult out;
  if (backend) {
    std::vector<ChatMessage> messages{{"system", std::string(prompts::kConfiguratorSystemV1)},
                                      {"user", std::string(prompt)}};
    bool reprompted = false;
    int api_attempts = 0;
    while (true) {
      std::string reply;
      try {
        reply = backend->complete(messages, config);
      } catch (const BackendError& e) {
        out.llm_failure = std::string("backend: ") + e.what();
        if (++api_attempts > config.max_retries_api) break;
        continue;
      }
      try {
        const ValidatedSpec v = validate_spec(parse_reply(reply));
        out.spec = v.spec;
        out.log = v.log;
        return out;
      } catch (const Error& e) {
        out.llm_failure = e.what();
        if (e.code() != ErrorCode::parse_error || reprompted) break;
        reprompted = true;
        messages.push_back({"assistant", reply});
        messages.push_back({"user", std::string("The previous reply could not be used (") + e.what() +
                                        "). Reply with only the corrected JSON object."});
      }
    }
  } else {
    out.llm_failure = "no backend configured";
  }

  out.used_fallback = true;
  RailLog log{{"fallback", RailAction::warned, "LLM path failed (" + out.llm_failure + "); regex fallback used"}};
  try {
    const ValidatedSpec v = validate_spec(regex_fallback(prompt));
    out.spec = v.spec;
    log.insert(log.end(), v.log.begin(), v.log.end());
    out.log = std::move(log);
    return out;
  } catch (const Error& e) {
    throw Error(ErrorCode::configure_failed,
                "LLM path: " + out.llm_failure + "; fallback: " + std::string(e.what()));
  }
}

} // namespace autosimp
