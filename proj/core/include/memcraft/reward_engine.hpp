#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memcraft/embedding_store.hpp"
#include "memcraft/memory_model.hpp"
#include "memcraft/model_gateway.hpp"
#include "memcraft/prompts.hpp"

namespace memcraft {

struct PenaltyParams {
  double lambda = 0.8;
  long theta_min = 150;
  long theta_max = 400;
  long delta_min = 200;
  double gamma_l = 0.5;
  double gamma_u = 1.3;
  double gamma_min = 0.1;
  double gamma_max = 3.0;

  // Throws std::invalid_argument when the thresholds are inconsistent.
  void validate() const;
};

// Penalty on the Core token increment of one operation.
double core_length_penalty(long delta_core, const PenaltyParams& p);

// Penalty on the tokens written to an entry section relative to the expert
// reference for the same session. expert_tokens <= 0 yields 0 and a warning.
double entry_length_penalty(long new_tokens, long expert_tokens, const PenaltyParams& p);

enum class EllAggregation : std::uint8_t { mean, max };

double aggregate_ell(const PerComponent<double>& penalties,
                     EllAggregation mode = EllAggregation::mean);

class EmptyQuestionSet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double task_reward(const std::vector<bool>& verdicts);

double combine_reward(bool valid, double r_task, double ell, double lambda);

enum class QaType : std::uint8_t { single_session, multi_session, temporal_reasoning };

std::string_view to_string(QaType t);
std::optional<QaType> parse_qa_type(std::string_view s);

struct QaPair {
  std::string question;
  std::string answer;
  QaType qtype = QaType::single_session;
  std::string question_date;  // YYYY-MM-DD, may be empty

  bool operator==(const QaPair&) const = default;
};

struct RewardRecord {
  bool valid = false;
  double r_task = 0.0;
  PerComponent<double> penalties{};
  double ell_aggregate = 0.0;
  double reward = 0.0;
  PerEntryType<std::size_t> retrieval_counts{};
  std::vector<bool> verdicts;

  nlohmann::ordered_json to_json() const;
};

// Retrieval-augmented answering: Core text is always in the context, followed
// by the top-k entries pooled across the three entry sections.
struct Answerer {
  ModelGateway* gateway = nullptr;
  const PromptTemplate* prompt = nullptr;
  EmbedFn embed;
  std::size_t k_answer = 10;
};

struct AnswerResult {
  std::string text;
  RetrievalResult trace;
};

std::string format_answer_context(const MemoryBank& bank, const RetrievalResult& retrieved);

AnswerResult answer_question(const Answerer& answerer, const MemoryBank& bank,
                             const EmbeddingStore& store, const std::string& question,
                             const std::string& question_date = {});

// Verdict for (qa pair, produced answer).
using JudgeFn = std::function<bool(const QaPair&, const std::string&)>;

// Gateway judge; only a reply of exactly CORRECT (after trimming) counts.
JudgeFn llm_judge(ModelGateway& gateway, const PromptTemplate& prompt);

// True when the normalized gold answer occurs in the normalized answer.
JudgeFn lexical_judge();

struct RolloutEvalInputs {
  bool valid = false;
  long core_delta = 0;
  PerEntryType<long> new_tokens{};
  PerEntryType<std::optional<long>> expert_tokens{};
};

struct RewardSettings {
  PenaltyParams penalty;
  EllAggregation aggregation = EllAggregation::mean;
};

// Answers every question from `bank`, judges the answers and assembles the
// record. Gateway failures are rethrown with the question index in the text.
RewardRecord evaluate_rollout(const MemoryBank& bank, const EmbeddingStore& store,
                              const std::vector<QaPair>& qa, const Answerer& answerer,
                              const JudgeFn& judge, const RolloutEvalInputs& inputs,
                              const RewardSettings& settings);

}  // namespace memcraft
