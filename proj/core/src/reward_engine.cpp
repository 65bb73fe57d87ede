#include "memcraft/reward_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

namespace memcraft {

void PenaltyParams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (theta_min >= theta_max) throw std::invalid_argument("theta_min must be below theta_max");
  if (delta_min < 0) throw std::invalid_argument("delta_min must be non-negative");
  if (!(gamma_min < gamma_l && gamma_l <= gamma_u && gamma_u < gamma_max)) {
    throw std::invalid_argument("need gamma_min < gamma_l <= gamma_u < gamma_max");
  }
  if (gamma_l > 1.0 || gamma_u < 1.0) {
    throw std::invalid_argument("tolerance band [gamma_l, gamma_u] must contain 1");
  }
}

double core_length_penalty(long delta_core, const PenaltyParams& p) {
  if (delta_core <= p.theta_min) return 0.0;
  if (delta_core >= p.theta_max) return 1.0;
  return static_cast<double>(delta_core - p.theta_min) /
         static_cast<double>(p.theta_max - p.theta_min);
}

double entry_length_penalty(long new_tokens, long expert_tokens, const PenaltyParams& p) {
  if (expert_tokens <= 0) {
    if (new_tokens == 0) return 0.0;
    spdlog::warn("entry length penalty: expert reference has {} tokens, using 0", expert_tokens);
    return 0.0;
  }
  const long diff = new_tokens > expert_tokens ? new_tokens - expert_tokens
                                               : expert_tokens - new_tokens;
  if (diff < p.delta_min) return 0.0;
  const double rho = static_cast<double>(new_tokens) / static_cast<double>(expert_tokens);
  if (rho >= p.gamma_l && rho <= p.gamma_u) return 0.0;
  double v = 1.0;
  if (rho > p.gamma_u && rho <= p.gamma_max) {
    v = (rho - p.gamma_u) / (p.gamma_max - p.gamma_u);
  } else if (rho < p.gamma_l && rho >= p.gamma_min) {
    v = (p.gamma_l - rho) / (p.gamma_l - p.gamma_min);
  }
  return std::clamp(v, 0.0, 1.0);
}

double aggregate_ell(const PerComponent<double>& penalties, EllAggregation mode) {
  if (mode == EllAggregation::max) return *std::max_element(penalties.begin(), penalties.end());
  return std::accumulate(penalties.begin(), penalties.end(), 0.0) / penalties.size();
}

double task_reward(const std::vector<bool>& verdicts) {
  if (verdicts.empty()) throw EmptyQuestionSet("task reward needs at least one question");
  const auto correct = std::count(verdicts.begin(), verdicts.end(), true);
  return static_cast<double>(correct) / static_cast<double>(verdicts.size());
}

double combine_reward(bool valid, double r_task, double ell, double lambda) {
  return (valid ? 1.0 : 0.0) * r_task * (1.0 - lambda * ell);
}

std::string_view to_string(QaType t) {
  switch (t) {
    case QaType::single_session: return "single_session";
    case QaType::multi_session: return "multi_session";
    case QaType::temporal_reasoning: return "temporal_reasoning";
  }
  return "?";
}

std::optional<QaType> parse_qa_type(std::string_view s) {
  for (auto t : {QaType::single_session, QaType::multi_session, QaType::temporal_reasoning}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

nlohmann::ordered_json RewardRecord::to_json() const {
  nlohmann::ordered_json j;
  j["valid"] = valid;
  j["r_task"] = r_task;
  auto& pen = j["penalties"];
  for (auto c : kComponents) pen[std::string(short_name(c))] = penalties[index_of(c)];
  j["ell_aggregate"] = ell_aggregate;
  j["reward"] = reward;
  auto& counts = j["retrieval_counts"];
  for (auto t : kEntryTypes) counts[std::string(short_name(t))] = retrieval_counts[index_of(t)];
  j["verdicts"] = verdicts;
  return j;
}

std::string format_answer_context(const MemoryBank& bank, const RetrievalResult& retrieved) {
  std::string ctx = "Core Memory:\n";
  ctx += bank.core().text.empty() ? "(empty)" : bank.core().text;
  ctx += "\n\nRetrieved memories:\n";
  if (retrieved.ranked.empty()) ctx += "(none)\n";
  for (const auto& hit : retrieved.ranked) {
    const auto* entry = bank.find(hit.entry_id);
    if (!entry) {
      throw std::logic_error("retrieved entry " + std::to_string(hit.entry_id.value) +
                             " is not in the bank");
    }
    ctx += "[";
    ctx += upper_label(entry->mem_type);
    ctx += "] ";
    ctx += entry->content;
    ctx += '\n';
  }
  return ctx;
}

AnswerResult answer_question(const Answerer& answerer, const MemoryBank& bank,
                             const EmbeddingStore& store, const std::string& question,
                             const std::string& question_date) {
  if (!answerer.gateway || !answerer.prompt) throw std::invalid_argument("answerer not configured");
  AnswerResult out;
  out.trace = store.top_k(question, answerer.k_answer, std::nullopt, answerer.embed);
  const std::map<std::string, std::string> vars{
      {"context", format_answer_context(bank, out.trace)},
      {"question", question},
      {"question_date", question_date.empty() ? "undated" : question_date},
  };
  ChatRequest req;
  req.system_prompt = PromptTemplate::render(answerer.prompt->system, vars);
  req.user_content = PromptTemplate::render(answerer.prompt->user, vars);
  out.text = answerer.gateway->chat(req);
  return out;
}

JudgeFn llm_judge(ModelGateway& gateway, const PromptTemplate& prompt) {
  return [&gateway, &prompt](const QaPair& qa, const std::string& answer) {
    const std::map<std::string, std::string> vars{
        {"question", qa.question}, {"gold", qa.answer}, {"answer", answer}};
    ChatRequest req;
    req.system_prompt = PromptTemplate::render(prompt.system, vars);
    req.user_content = PromptTemplate::render(prompt.user, vars);
    const std::string verdict = trim(gateway.chat(req));
    if (verdict == "CORRECT") return true;
    if (verdict != "INCORRECT") {
      spdlog::warn("judge reply '{}' is not a verdict, scoring INCORRECT", utf8_truncate(verdict, 60));
    }
    return false;
  };
}

namespace {

std::string normalize_words(std::string_view s) {
  std::string out = " ";
  for (unsigned char c : s) {
    if (std::isalnum(c) || c >= 0x80) {
      out += static_cast<char>(std::tolower(c));
    } else if (out.back() != ' ') {
      out += ' ';
    }
  }
  if (out.back() != ' ') out += ' ';
  return out;
}

}  // namespace

JudgeFn lexical_judge() {
  return [](const QaPair& qa, const std::string& answer) {
    const std::string gold = normalize_words(qa.answer);
    if (gold == " ") return false;
    return normalize_words(answer).find(gold) != std::string::npos;
  };
}

RewardRecord evaluate_rollout(const MemoryBank& bank, const EmbeddingStore& store,
                              const std::vector<QaPair>& qa, const Answerer& answerer,
                              const JudgeFn& judge, const RolloutEvalInputs& inputs,
                              const RewardSettings& settings) {
  if (qa.empty()) throw EmptyQuestionSet("rollout evaluation needs at least one question");
  RewardRecord rec;
  rec.valid = inputs.valid;
  for (std::size_t i = 0; i < qa.size(); ++i) {
    try {
      const auto ans = answer_question(answerer, bank, store, qa[i].question, qa[i].question_date);
      const auto counts = ans.trace.counts_by_type();
      for (auto t : kEntryTypes) rec.retrieval_counts[index_of(t)] += counts[index_of(t)];
      rec.verdicts.push_back(judge(qa[i], ans.text));
    } catch (const GatewayError& e) {
      throw GatewayError(e.kind(), "question " + std::to_string(i) + ": " + e.what(), e.status());
    }
  }
  rec.r_task = task_reward(rec.verdicts);

  const auto& p = settings.penalty;
  rec.penalties[index_of(Component::core)] = core_length_penalty(inputs.core_delta, p);
  for (auto t : kEntryTypes) {
    const auto& expert = inputs.expert_tokens[index_of(t)];
    if (!expert) {
      spdlog::warn("no expert reference for {} memory, length penalty set to 0", to_string(t));
      continue;
    }
    rec.penalties[index_of(component_of(t))] =
        entry_length_penalty(inputs.new_tokens[index_of(t)], *expert, p);
  }
  rec.ell_aggregate = aggregate_ell(rec.penalties, settings.aggregation);
  rec.reward = combine_reward(rec.valid, rec.r_task, rec.ell_aggregate, p.lambda);
  return rec;
}

}  // namespace memcraft
