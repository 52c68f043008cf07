#include "autosimp/llm_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "autosimp/errors.hpp"

namespace autosimp {

LlmBackendConfig LlmBackendConfig::from_env() {
  LlmBackendConfig cfg;
  if (const char* url = std::getenv("AUTOSIMP_LLM_BASE_URL"); url && *url) cfg.base_url = url;
  if (const char* model = std::getenv("AUTOSIMP_LLM_MODEL"); model && *model) cfg.model_name = model;
  return cfg;
}

namespace {

struct SplitUrl {
  std::string origin; // scheme://host[:port]
  std::string path;   // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto slash = url.find('/', host_start);
  SplitUrl out;
  out.origin = slash == std::string::npos ? url : url.substr(0, slash);
  out.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

} // namespace

std::string OpenAiCompatibleBackend::complete(const std::vector<ChatMessage>& messages,
                                              const LlmBackendConfig& config) {
  const SplitUrl url = split_url(config.base_url);
  httplib::Client client(url.origin);
  if (!client.is_valid()) throw BackendError(BackendFailure::transport, "unsupported base url: " + config.base_url);

  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(usec);
  client.set_read_timeout(usec);
  client.set_write_timeout(usec);

  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_ref.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  nlohmann::json body;
  body["model"] = config.model_name;
  body["temperature"] = config.temperature;
  body["response_format"] = {{"type", "json_object"}};
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  auto res = client.Post(url.path + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    throw BackendError(timed_out ? BackendFailure::timeout : BackendFailure::transport,
                       "request failed: " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw BackendError(BackendFailure::http_status, "HTTP " + std::to_string(res->status));

  try {
    const auto doc = nlohmann::json::parse(res->body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendFailure::bad_response, std::string("unexpected response shape: ") + e.what());
  }
}

std::string prompt_hash(std::string_view prompt) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

void MockBackend::add_fixture(std::string_view prompt, MockReply reply) {
  add_fixture_hash(prompt_hash(prompt), std::move(reply));
}

void MockBackend::add_fixture_hash(std::string hash, MockReply reply) {
  std::lock_guard lock(mu_);
  fixtures_[std::move(hash)] = std::move(reply);
}

namespace {

MockReply reply_from_json(const nlohmann::json& entry) {
  MockReply r;
  if (entry.is_object() && entry.contains("failure")) {
    const auto kind = entry.at("failure").get<std::string>();
    if (kind == "timeout") r.kind = MockReply::Kind::timeout;
    else if (kind == "error") r.kind = MockReply::Kind::error;
    else throw Error(ErrorCode::parse_error, "unknown mock failure kind: " + kind);
    return r;
  }
  const auto& reply = entry.is_object() && entry.contains("reply") ? entry.at("reply") : entry;
  r.text = reply.is_string() ? reply.get<std::string>() : reply.dump();
  return r;
}

} // namespace

std::shared_ptr<MockBackend> MockBackend::from_json(const nlohmann::json& doc) {
  auto mock = std::make_shared<MockBackend>();
  if (doc.contains("fixtures")) {
    for (const auto& f : doc.at("fixtures")) {
      MockReply reply = reply_from_json(f);
      if (f.contains("hash")) mock->add_fixture_hash(f.at("hash").get<std::string>(), std::move(reply));
      else mock->add_fixture(f.at("prompt").get<std::string>(), std::move(reply));
    }
  }
  if (doc.contains("script")) {
    std::vector<MockReply> script;
    for (const auto& s : doc.at("script")) script.push_back(reply_from_json(s));
    mock->set_script(std::move(script));
  }
  return mock;
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open mock fixtures: " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, path + ": " + e.what());
  }
}

std::string MockBackend::complete(const std::vector<ChatMessage>& messages, const LlmBackendConfig&) {
  std::unique_lock lock(mu_);
  ++calls_;
  std::string prompt;
  for (const auto& m : messages)
    if (m.role == "user") {
      prompt = m.content;
      break;
    }

  auto deliver = [](const MockReply& r) -> std::string {
    switch (r.kind) {
    case MockReply::Kind::timeout: throw BackendError(BackendFailure::timeout, "mock timeout");
    case MockReply::Kind::error: throw BackendError(BackendFailure::transport, "mock backend error");
    case MockReply::Kind::content: break;
    }
    return r.text;
  };

  if (auto it = fixtures_.find(prompt_hash(prompt)); it != fixtures_.end()) return deliver(it->second);
  if (responder_) {
    auto responder = responder_;
    lock.unlock();
    if (auto text = responder(messages)) return *text;
    lock.lock();
  }
  if (!script_.empty()) {
    const MockReply& r = script_[std::min(script_pos_, script_.size() - 1)];
    ++script_pos_;
    return deliver(r);
  }
  throw BackendError(BackendFailure::transport, "mock: no fixture for prompt hash " + prompt_hash(prompt));
}

int MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::optional<std::string> extract_json_object(std::string_view text) {
  const auto start = text.find('{');
  if (start == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return std::string(text.substr(start, i - start + 1));
  }
  return std::nullopt;
}

} // namespace autosimp
