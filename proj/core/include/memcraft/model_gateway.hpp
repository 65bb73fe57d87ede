#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "memcraft/embedding_store.hpp"

namespace memcraft {

struct ChatRequest {
  std::string system_prompt;
  std::string user_content;  // must be non-empty
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::optional<std::int64_t> seed;
};

enum class Backend : std::uint8_t { http, mock_scripted, mock_hash };

std::string_view to_string(Backend b);
std::optional<Backend> parse_backend(std::string_view s);

struct GatewayConfig {
  Backend backend = Backend::mock_hash;
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name;
  std::string api_key_env_var = "OPENAI_API_KEY";  // the key itself never lives in config
  int timeout_ms = 60000;
  int max_retries = 3;
  int backoff_base_ms = 250;
  int max_in_flight = 8;
  std::size_t embed_dim = 64;          // mock_hash
  std::uint64_t hash_seed = 0;         // mock_hash
  std::filesystem::path script_path;   // mock_scripted

  void validate() const;
};

enum class GatewayErrorKind : std::uint8_t {
  transport,
  rate_limited_exhausted,
  bad_status,
  script_exhausted,
  dimension_mismatch,
  invalid_request,
};

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& message, int status = 0)
      : std::runtime_error(message), kind_(kind), status_(status) {}
  GatewayErrorKind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  GatewayErrorKind kind_;
  int status_;
};

// Uniform chat + embedding interface. Instances are shareable across
// threads; at most max_in_flight chat calls run at once.
class ModelGateway {
 public:
  explicit ModelGateway(int max_in_flight = 8);
  virtual ~ModelGateway() = default;
  ModelGateway(const ModelGateway&) = delete;
  ModelGateway& operator=(const ModelGateway&) = delete;

  std::string chat(const ChatRequest& req);
  // One unit-norm vector per text, all of the same dimension.
  std::vector<Vector> embed(const std::vector<std::string>& texts);
  EmbedFn embed_fn();

 protected:
  virtual std::string do_chat(const ChatRequest& req) = 0;
  virtual std::vector<Vector> do_embed(const std::vector<std::string>& texts) = 0;

 private:
  std::counting_semaphore<> slots_;
};

// Deterministic embedding: each lowercase alphanumeric token maps to a
// Gaussian vector seeded by SHA-256(seed, token); the text vector is the
// normalized sum. Texts without tokens hash their raw bytes instead.
// Identical text gives bitwise-identical vectors on every run.
class HashEmbedder {
 public:
  explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
  Vector embed(std::string_view text) const;
  std::size_t dimension() const { return dim_; }

 private:
  Vector token_vector(std::string_view token) const;
  std::size_t dim_;
  std::uint64_t seed_;
};

// mock_hash: embeddings from HashEmbedder; chat echoes user_content.
class HashGateway final : public ModelGateway {
 public:
  explicit HashGateway(std::size_t dim = 64, std::uint64_t seed = 0, int max_in_flight = 8)
      : ModelGateway(max_in_flight), embedder_(dim, seed) {}

 protected:
  std::string do_chat(const ChatRequest& req) override;
  std::vector<Vector> do_embed(const std::vector<std::string>& texts) override;

 private:
  HashEmbedder embedder_;
};

// Hex prefix of SHA-256(system_prompt, user_content) used to key scripts.
std::string prompt_fingerprint(const ChatRequest& req);

// mock_scripted: canned responses.
//  * fingerprint queues are consulted first (exact prompt match, FIFO);
//  * then rules in order: a rule applies when both of its substrings occur in
//    the system prompt / user content. Queue rules pop responses; by_seed
//    rules pick responses[seed % n] and never run out, which keeps
//    concurrent rollouts reproducible.
// Script file (JSON):
//   {"fingerprints": {"<hex>": ["..."]},
//    "rules": [{"system_contains": "...", "user_contains": "...",
//               "mode": "queue" | "by_seed", "responses": ["..."]}]}
class ScriptedGateway final : public ModelGateway {
 public:
  enum class Mode : std::uint8_t { queue, by_seed };
  struct Rule {
    std::string system_contains;
    std::string user_contains;
    Mode mode = Mode::queue;
    std::deque<std::string> responses;
  };

  explicit ScriptedGateway(int max_in_flight = 8, std::size_t embed_dim = 64,
                           std::uint64_t embed_seed = 0)
      : ModelGateway(max_in_flight), embedder_(embed_dim, embed_seed) {}

  static std::unique_ptr<ScriptedGateway> from_json(const nlohmann::json& script,
                                                    int max_in_flight = 8,
                                                    std::size_t embed_dim = 64,
                                                    std::uint64_t embed_seed = 0);
  static std::unique_ptr<ScriptedGateway> from_file(const std::filesystem::path& path,
                                                    int max_in_flight = 8,
                                                    std::size_t embed_dim = 64,
                                                    std::uint64_t embed_seed = 0);

  void enqueue(const std::string& fingerprint, std::string response);
  // Catch-all FIFO response.
  void enqueue(std::string response);
  void add_rule(Rule rule);
  std::size_t calls() const;

 protected:
  std::string do_chat(const ChatRequest& req) override;
  std::vector<Vector> do_embed(const std::vector<std::string>& texts) override;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<std::string>> by_fingerprint_;
  std::vector<Rule> rules_;
  std::size_t calls_ = 0;
  HashEmbedder embedder_;
};

// OpenAI-compatible client: POST {base_url}/chat/completions and
// {base_url}/embeddings. Retries 429 and 5xx with exponential backoff and
// jitter; the bearer credential is read from the configured environment
// variable and never appears in errors or logs.
class HttpGateway final : public ModelGateway {
 public:
  explicit HttpGateway(GatewayConfig cfg);

 protected:
  std::string do_chat(const ChatRequest& req) override;
  std::vector<Vector> do_embed(const std::vector<std::string>& texts) override;

 private:
  nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body);
  std::string redact(std::string text) const;

  GatewayConfig cfg_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
};

std::shared_ptr<ModelGateway> make_gateway(const GatewayConfig& cfg);

}  // namespace memcraft
