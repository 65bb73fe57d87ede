#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memcraft/action_codec.hpp"
#include "memcraft/attribution.hpp"
#include "memcraft/config.hpp"
#include "memcraft/dataset.hpp"
#include "memcraft/embedding_store.hpp"
#include "memcraft/memory_model.hpp"
#include "memcraft/model_gateway.hpp"
#include "memcraft/prompts.hpp"
#include "memcraft/reward_engine.hpp"

namespace memcraft {

// Gateways, prompts and judge for one run.
struct Services {
  RunConfig cfg;
  PromptSet prompts;
  std::shared_ptr<ModelGateway> agent;
  std::shared_ptr<ModelGateway> answer;
  std::shared_ptr<ModelGateway> judge;
  std::shared_ptr<ModelGateway> qa_gen;
  std::shared_ptr<ModelGateway> embed;

  static Services create(const RunConfig& cfg);

  EmbedFn embed_fn() const;
  JudgeFn judge_fn() const;
  Answerer answerer() const;
};

class BuildAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "[EPISODIC] ..." lines, or "(none)".
std::string format_retrieved(const MemoryBank& bank, const RetrievalResult& retrieved);

// Prompts the four agents concurrently against one frozen bank. An agent
// whose gateway call fails yields nullopt; its error text goes to `errors`.
AgentOutputs run_agents(const Services& svc, const MemoryBank& bank, const EmbeddingStore& store,
                        const Session& session, double temperature, std::optional<std::int64_t> seed,
                        std::vector<std::string>* errors = nullptr);

enum class CompressionPath : std::uint8_t { none, first_pass, aggressive_pass, truncated };
std::string_view to_string(CompressionPath p);

// Shrinks Core text that exceeds capacity: a compression prompt, then an
// aggressive one, then hard truncation.
std::pair<MemoryBank, CompressionPath> compress_core(const Services& svc, const MemoryBank& bank);

struct SessionStep {
  MemoryBank bank;
  EmbeddingStore store;
  ValidityReport report;
  long core_delta = 0;
  PerEntryType<long> new_tokens{};
  CompressionPath compression = CompressionPath::none;
};

// Validates the agent outputs against `prev`, applies the operations allowed
// by `gate` in the order core, episodic, semantic, procedural, compresses
// Core if needed and indexes the new entries.
SessionStep apply_session(const Services& svc, const MemoryBank& prev, const EmbeddingStore& prev_store,
                          const Session& session, std::size_t session_number,
                          const AgentOutputs& outputs, GateMode gate);

// Per-dialogue work directory layout.
struct DialoguePaths {
  std::filesystem::path root;
  std::filesystem::path snapshot(std::size_t session) const;  // snapshots/session_NNNN
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path trajectory() const { return root / "trajectory.jsonl"; }
  std::filesystem::path qa() const { return root / "qa.jsonl"; }
  std::filesystem::path rewards() const { return root / "rewards.jsonl"; }
};

DialoguePaths dialogue_paths(const RunConfig& cfg, const std::string& dialogue_id);

struct Snapshot {
  MemoryBank bank;
  EmbeddingStore store;
};
void save_snapshot(const Snapshot& s, const std::filesystem::path& dir);
Snapshot load_snapshot(const std::filesystem::path& dir);

// Expert reference written by build_memory, one record per session.
struct TrajectoryStep {
  std::size_t session = 0;
  long core_delta = 0;
  PerEntryType<long> new_tokens{};
  PerComponent<bool> valid{};
  std::string digest;
};
std::vector<TrajectoryStep> load_trajectory(const std::filesystem::path& file);

struct BuildOptions {
  bool resume = true;
  std::optional<std::size_t> stop_after;  // stop once this many sessions are done
};

struct BuildResult {
  MemoryBank bank;
  EmbeddingStore store;
  std::size_t sessions_completed = 0;
  bool complete = false;
};

// Sequential construction over all sessions with a snapshot after each one.
// A gateway failure throws BuildAborted; the next call resumes after the last
// completed session.
BuildResult build_memory(const Dialogue& dialogue, const Services& svc, const BuildOptions& opts = {});

struct SessionQa {
  std::size_t session = 0;  // 1-based
  std::vector<QaPair> pairs;
};

// Parses {"qa_pairs": [{"question", "answer", "qtype"}]}; nullopt if malformed.
std::optional<std::vector<QaPair>> parse_qa_pairs(std::string_view raw, std::size_t max_pairs);

// Questions about each session from the qa_gen gateway; needs a finished
// build. Writes qa.jsonl.
std::vector<SessionQa> generate_session_qa(const Dialogue& dialogue, const Services& svc);
std::vector<SessionQa> load_session_qa(const std::filesystem::path& file);

struct RolloutOutcome {
  std::size_t rollout = 0;
  std::int64_t seed = 0;
  RewardRecord record;
  WeightAssignment weights;
  double advantage = 0.0;
  std::vector<std::string> diagnostics;
  std::string bank_digest;
};

// N isolated rollouts for one session against snapshot session-1.
std::vector<RolloutOutcome> rollout_and_reward(const Dialogue& dialogue, std::size_t session,
                                               const std::vector<QaPair>& qa, const Services& svc);

// Runs every session with questions and writes rewards.jsonl.
void rollout_and_reward_all(const Dialogue& dialogue, const Services& svc);

struct CategoryScore {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvalReport {
  std::map<std::string, CategoryScore> by_category;
  CategoryScore overall;
  std::size_t failures = 0;

  void add(const std::string& category, bool correct);
  std::string to_csv() const;
  std::string to_table() const;
};

// Answers every dataset question from each dialogue's final bank.
EvalReport evaluate(const std::vector<Dialogue>& dialogues, const Services& svc);

}  // namespace memcraft
