#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace autosimp {

struct ChatMessage {
  std::string role; // system | user | assistant
  std::string content;
};

struct LlmBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o-mini";
  std::string api_key_ref = "AUTOSIMP_LLM_API_KEY"; // name of the environment variable holding the key
  double temperature = 0.0;
  double timeout_seconds = 20.0;
  int max_retries_api = 2;

  /// Defaults overridden by AUTOSIMP_LLM_BASE_URL and AUTOSIMP_LLM_MODEL when set.
  static LlmBackendConfig from_env();
};

enum class BackendFailure { timeout, transport, http_status, bad_response };

/// Thrown by backends; callers treat every failure as recoverable.
class BackendError : public std::runtime_error {
public:
  BackendError(BackendFailure kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  BackendFailure kind() const { return kind_; }

private:
  BackendFailure kind_;
};

class LlmBackend {
public:
  virtual ~LlmBackend() = default;
  /// Returns the assistant message text. Throws BackendError.
  virtual std::string complete(const std::vector<ChatMessage>& messages, const LlmBackendConfig& config) = 0;
};

/// POST {base_url}/chat/completions with a bearer token read from `api_key_ref`.
class OpenAiCompatibleBackend : public LlmBackend {
public:
  std::string complete(const std::vector<ChatMessage>& messages, const LlmBackendConfig& config) override;
};

/// 16 hex digits of FNV-1a 64 over the prompt text.
std::string prompt_hash(std::string_view prompt);

struct MockReply {
  enum class Kind { content, timeout, error };
  Kind kind = Kind::content;
  std::string text;
};

/// Deterministic backend for tests and offline runs. Lookup order for a request, keyed on
/// the first user message: hash fixtures, responder, then the reply script (last entry repeats).
class MockBackend : public LlmBackend {
public:
  using Responder = std::function<std::optional<std::string>(const std::vector<ChatMessage>&)>;

  MockBackend() = default;

  void add_fixture(std::string_view prompt, MockReply reply);
  void add_fixture_hash(std::string hash, MockReply reply);
  void set_responder(Responder r) { responder_ = std::move(r); }
  void set_script(std::vector<MockReply> script) { script_ = std::move(script); }

  /// {"fixtures": [{"prompt"|"hash", "reply" (object or string) | "failure": "timeout"|"error"}],
  ///  "script": [reply, ...]}
  static std::shared_ptr<MockBackend> from_json(const nlohmann::json& doc);
  static std::shared_ptr<MockBackend> from_file(const std::string& path);

  std::string complete(const std::vector<ChatMessage>& messages, const LlmBackendConfig& config) override;
  int calls() const;

private:
  std::map<std::string, MockReply> fixtures_;
  Responder responder_;
  std::vector<MockReply> script_;
  std::size_t script_pos_ = 0;
  int calls_ = 0;
  mutable std::mutex mu_;
};

/// Slice from the first '{' to its matching '}', skipping braces inside strings.
/// Returns nullopt when no balanced object is present.
std::optional<std::string> extract_json_object(std::string_view text);

} // namespace autosimp
