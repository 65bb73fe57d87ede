#include "memcraft/model_gateway.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "memcraft/digest.hpp"

namespace memcraft {

using nlohmann::json;

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::http: return "http";
    case Backend::mock_scripted: return "mock_scripted";
    case Backend::mock_hash: return "mock_hash";
  }
  return "?";
}

std::optional<Backend> parse_backend(std::string_view s) {
  if (s == "http") return Backend::http;
  if (s == "mock_scripted") return Backend::mock_scripted;
  if (s == "mock_hash") return Backend::mock_hash;
  return std::nullopt;
}

void GatewayConfig::validate() const {
  if (max_retries < 0) throw std::invalid_argument("gateway max_retries must be >= 0");
  if (timeout_ms <= 0) throw std::invalid_argument("gateway timeout_ms must be > 0");
  if (max_in_flight <= 0) throw std::invalid_argument("gateway max_in_flight must be > 0");
  if (embed_dim == 0) throw std::invalid_argument("gateway embed_dim must be > 0");
}

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

ModelGateway::ModelGateway(int max_in_flight) : slots_(max_in_flight > 0 ? max_in_flight : 1) {}

std::string ModelGateway::chat(const ChatRequest& req) {
  if (req.user_content.empty()) {
    throw GatewayError(GatewayErrorKind::invalid_request, "chat request with empty user content");
  }
  if (req.temperature < 0.0) {
    throw GatewayError(GatewayErrorKind::invalid_request, "negative sampling temperature");
  }
  SlotGuard guard(slots_);
  return do_chat(req);
}

std::vector<Vector> ModelGateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw GatewayError(GatewayErrorKind::invalid_request, "embed called with no texts");
  }
  auto vectors = do_embed(texts);
  if (vectors.size() != texts.size()) {
    throw GatewayError(GatewayErrorKind::dimension_mismatch,
                       "embedding backend returned " + std::to_string(vectors.size()) +
                           " vectors for " + std::to_string(texts.size()) + " texts");
  }
  for (auto& v : vectors) {
    if (v.empty() || v.size() != vectors.front().size()) {
      throw GatewayError(GatewayErrorKind::dimension_mismatch,
                         "embedding backend returned vectors of differing dimension");
    }
    v = normalized(std::move(v));
  }
  return vectors;
}

EmbedFn ModelGateway::embed_fn() {
  return [this](const std::vector<std::string>& texts) { return embed(texts); };
}

// ---------------------------------------------------------------------------
// Hash embedding

Vector HashEmbedder::token_vector(std::string_view token) const {
  std::string material(8, '\0');
  for (int i = 0; i < 8; ++i) material[i] = static_cast<char>((seed_ >> (8 * i)) & 0xff);
  material.append(token);
  const auto digest = sha256(material);
  std::uint64_t state = 0;
  for (int i = 0; i < 8; ++i) state |= static_cast<std::uint64_t>(digest[i]) << (8 * i);
  // mt19937_64's output sequence is fixed by the standard; the Box-Muller
  // transform below is done by hand so no library distribution is involved.
  std::mt19937_64 gen(state);
  auto uniform = [&gen] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53; };
  Vector v(dim_);
  for (std::size_t i = 0; i < dim_; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    v[i] = r * std::cos(theta);
    if (i + 1 < dim_) v[i + 1] = r * std::sin(theta);
  }
  return v;
}

Vector HashEmbedder::embed(std::string_view text) const {
  Vector sum(dim_, 0.0);
  bool any = false;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const auto tv = token_vector(token);
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += tv[i];
    any = true;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  if (!any || l2_norm(sum) == 0.0) sum = token_vector(std::string("\x01raw:") + std::string(text));
  return normalized(std::move(sum));
}

std::string HashGateway::do_chat(const ChatRequest& req) { return req.user_content; }

std::vector<Vector> HashGateway::do_embed(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embedder_.embed(t));
  return out;
}

// ---------------------------------------------------------------------------
// Scripted mock

std::string prompt_fingerprint(const ChatRequest& req) {
  return sha256_hex(req.system_prompt + '\x1f' + req.user_content).substr(0, 16);
}

std::unique_ptr<ScriptedGateway> ScriptedGateway::from_json(const json& script, int max_in_flight,
                                                            std::size_t embed_dim,
                                                            std::uint64_t embed_seed) {
  auto gw = std::make_unique<ScriptedGateway>(max_in_flight, embed_dim, embed_seed);
  if (auto it = script.find("fingerprints"); it != script.end()) {
    for (const auto& [fp, responses] : it->items()) {
      for (const auto& r : responses) gw->enqueue(fp, r.get<std::string>());
    }
  }
  if (auto it = script.find("rules"); it != script.end()) {
    for (const auto& r : *it) {
      Rule rule;
      rule.system_contains = r.value("system_contains", "");
      rule.user_contains = r.value("user_contains", "");
      const auto mode = r.value("mode", "queue");
      if (mode == "by_seed") {
        rule.mode = Mode::by_seed;
      } else if (mode != "queue") {
        throw std::invalid_argument("unknown script rule mode '" + mode + "'");
      }
      for (const auto& resp : r.at("responses")) {
        rule.responses.push_back(resp.is_string() ? resp.get<std::string>() : resp.dump());
      }
      gw->add_rule(std::move(rule));
    }
  }
  return gw;
}

std::unique_ptr<ScriptedGateway> ScriptedGateway::from_file(const std::filesystem::path& path,
                                                            int max_in_flight,
                                                            std::size_t embed_dim,
                                                            std::uint64_t embed_seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read mock script " + path.string());
  return from_json(json::parse(in), max_in_flight, embed_dim, embed_seed);
}

void ScriptedGateway::enqueue(const std::string& fingerprint, std::string response) {
  std::lock_guard lock(mutex_);
  by_fingerprint_[fingerprint].push_back(std::move(response));
}

void ScriptedGateway::enqueue(std::string response) {
  std::lock_guard lock(mutex_);
  if (rules_.empty() || !rules_.back().system_contains.empty() ||
      !rules_.back().user_contains.empty() || rules_.back().mode != Mode::queue) {
    rules_.push_back(Rule{});
  }
  rules_.back().responses.push_back(std::move(response));
}

void ScriptedGateway::add_rule(Rule rule) {
  std::lock_guard lock(mutex_);
  rules_.push_back(std::move(rule));
}

std::size_t ScriptedGateway::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::string ScriptedGateway::do_chat(const ChatRequest& req) {
  const auto fp = prompt_fingerprint(req);
  std::lock_guard lock(mutex_);
  ++calls_;
  if (auto it = by_fingerprint_.find(fp); it != by_fingerprint_.end() && !it->second.empty()) {
    auto out = std::move(it->second.front());
    it->second.pop_front();
    return out;
  }
  for (auto& rule : rules_) {
    if (rule.responses.empty()) continue;
    if (!rule.system_contains.empty() &&
        req.system_prompt.find(rule.system_contains) == std::string::npos) {
      continue;
    }
    if (!rule.user_contains.empty() &&
        req.user_content.find(rule.user_contains) == std::string::npos) {
      continue;
    }
    if (rule.mode == Mode::by_seed) {
      const auto seed = static_cast<std::uint64_t>(req.seed.value_or(0));
      return rule.responses[seed % rule.responses.size()];
    }
    auto out = std::move(rule.responses.front());
    rule.responses.pop_front();
    return out;
  }
  throw GatewayError(GatewayErrorKind::script_exhausted,
                     "no scripted response left for prompt fingerprint " + fp);
}

std::vector<Vector> ScriptedGateway::do_embed(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embedder_.embed(t));
  return out;
}

// ---------------------------------------------------------------------------
// HTTP

HttpGateway::HttpGateway(GatewayConfig cfg) : ModelGateway(cfg.max_in_flight), cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto scheme_end = cfg_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("base_url must include a scheme: " + cfg_.base_url);
  }
  const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = cfg_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (!cfg_.api_key_env_var.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env_var.c_str())) api_key_ = key;
  }
}

std::string HttpGateway::redact(std::string text) const {
  if (api_key_.empty()) return text;
  for (auto pos = text.find(api_key_); pos != std::string::npos; pos = text.find(api_key_, pos)) {
    text.replace(pos, api_key_.size(), "[REDACTED]");
  }
  return text;
}

json HttpGateway::post_json(const std::string& endpoint, const json& body) {
  const std::string path = path_prefix_ + endpoint;
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  thread_local std::minstd_rand jitter_rng{std::random_device{}()};
  int last_status = 0;
  std::string last_problem;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const int base = cfg_.backoff_base_ms << std::min(attempt - 1, 16);
      std::uniform_int_distribution<int> jitter(0, std::max(1, cfg_.backoff_base_ms / 2));
      std::this_thread::sleep_for(std::chrono::milliseconds(base + jitter(jitter_rng)));
    }
    httplib::Client client(scheme_host_port_);
    const auto sec = cfg_.timeout_ms / 1000;
    const auto usec = (cfg_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_problem = "transport error: " + httplib::to_string(res.error());
      spdlog::warn("POST {}{} attempt {} failed: {}", cfg_.base_url, endpoint, attempt + 1,
                   last_problem);
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      auto parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) {
        throw GatewayError(GatewayErrorKind::bad_status,
                           "unparseable response body from " + cfg_.base_url + endpoint,
                           res->status);
      }
      return parsed;
    }
    last_problem = redact(res->body.substr(0, 200));
    if (res->status == 429 || res->status >= 500) {
      spdlog::warn("POST {}{} attempt {} returned {}", cfg_.base_url, endpoint, attempt + 1,
                   res->status);
      continue;
    }
    throw GatewayError(GatewayErrorKind::bad_status,
                       "HTTP " + std::to_string(res->status) + " from " + cfg_.base_url +
                           endpoint + ": " + last_problem,
                       res->status);
  }
  const std::string tries = std::to_string(cfg_.max_retries + 1) + " attempt(s)";
  if (last_status == 0) {
    throw GatewayError(GatewayErrorKind::transport,
                       cfg_.base_url + endpoint + " unreachable after " + tries + " (" +
                           last_problem + ")");
  }
  if (last_status == 429) {
    throw GatewayError(GatewayErrorKind::rate_limited_exhausted,
                       "rate limited by " + cfg_.base_url + endpoint + " after " + tries, 429);
  }
  throw GatewayError(GatewayErrorKind::bad_status,
                     "HTTP " + std::to_string(last_status) + " from " + cfg_.base_url + endpoint +
                         " after " + tries + ": " + last_problem,
                     last_status);
}

std::string HttpGateway::do_chat(const ChatRequest& req) {
  json body;
  body["model"] = cfg_.model_name;
  body["messages"] = json::array();
  if (!req.system_prompt.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", req.system_prompt}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", req.user_content}});
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_output_tokens;
  if (req.seed) body["seed"] = *req.seed;
  const auto resp = post_json("/chat/completions", body);
  try {
    return resp.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw GatewayError(GatewayErrorKind::bad_status,
                       "chat response from " + cfg_.base_url + " lacks choices[0].message.content",
                       200);
  }
}

std::vector<Vector> HttpGateway::do_embed(const std::vector<std::string>& texts) {
  json body;
  body["model"] = cfg_.model_name;
  body["input"] = texts;
  const auto resp = post_json("/embeddings", body);
  std::vector<Vector> out(texts.size());
  try {
    for (const auto& item : resp.at("data")) {
      const auto idx = item.value("index", std::size_t{0});
      if (idx >= out.size()) throw GatewayError(GatewayErrorKind::dimension_mismatch, "embedding index out of range");
      out[idx] = item.at("embedding").get<Vector>();
    }
  } catch (const json::exception&) {
    throw GatewayError(GatewayErrorKind::bad_status,
                       "embedding response from " + cfg_.base_url + " lacks data[].embedding", 200);
  }
  return out;
}

std::shared_ptr<ModelGateway> make_gateway(const GatewayConfig& cfg) {
  cfg.validate();
  switch (cfg.backend) {
    case Backend::http: return std::make_shared<HttpGateway>(cfg);
    case Backend::mock_hash:
      return std::make_shared<HashGateway>(cfg.embed_dim, cfg.hash_seed, cfg.max_in_flight);
    case Backend::mock_scripted:
      if (cfg.script_path.empty()) {
        return std::make_shared<ScriptedGateway>(cfg.max_in_flight, cfg.embed_dim, cfg.hash_seed);
      }
      return std::shared_ptr<ModelGateway>(ScriptedGateway::from_file(
          cfg.script_path, cfg.max_in_flight, cfg.embed_dim, cfg.hash_seed));
  }
  throw std::invalid_argument("unknown gateway backend");
}

}  // namespace memcraft
