#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "memcraft/action_codec.hpp"
#include "memcraft/adrpo.hpp"
#include "memcraft/model_gateway.hpp"
#include "memcraft/reward_engine.hpp"
#include "memcraft/toy_trainer.hpp"

namespace memcraft {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class JudgeMode : std::uint8_t { llm, lexical };

struct ToySettings {
  std::string environment = "bandit";  // bandit | attribution
  ToyTrainConfig train;
};

struct RunConfig {
  GatewayConfig agent;
  GatewayConfig answer;
  GatewayConfig judge;
  GatewayConfig qa_gen;
  GatewayConfig embed;
  JudgeMode judge_mode = JudgeMode::llm;

  std::size_t k_construct = 20;
  std::size_t k_answer = 10;
  std::size_t questions_per_session = 5;
  std::size_t rollouts = 8;
  double rollout_temperature = 1.0;
  double resolve_threshold = kDefaultResolveThreshold;
  GateMode gate_mode = GateMode::per_rollout;
  std::size_t core_capacity_chars = 5000;

  PenaltyParams penalty;
  EllAggregation ell_aggregation = EllAggregation::mean;
  AdrpoConfig adrpo;
  WeightingMode weighting = WeightingMode::contribution;
  ToySettings toy;

  std::int64_t seed = 0;
  std::filesystem::path prompts_dir = "prompts";
  std::filesystem::path work_dir = "work";
  std::filesystem::path mock_script;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// INI file with sections [run], [agent], [answer], [judge], [qa_gen],
// [embed], [penalty], [adrpo], [toy], [paths] and [mock]. Unknown keys are
// errors. Relative paths resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& file);
RunConfig parse_config(const std::string& ini_text, const std::filesystem::path& base_dir = {});

// Offline backends: agent and qa_gen read the mock script, answer and embed
// use hash embeddings with an echoing chat, judging is lexical.
void apply_mock(RunConfig& cfg);

}  // namespace memcraft
