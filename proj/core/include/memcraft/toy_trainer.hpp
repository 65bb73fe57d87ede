#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "memcraft/adrpo.hpp"

namespace memcraft {

struct ToyOutcome {
  bool valid = false;
  double r_task = 0.0;
  double ell = 0.0;
  double length = 0.0;
  PerEntryType<std::size_t> counts{};  // retrieved relevant positions per entry type
};

// Scripted session-reward environment over a ToyPolicy-shaped sequence.
// Every position is one "memory operation" token of its segment's type.
// Emitting `invalid_token` anywhere makes the rollout invalid; emitting
// `verbose_token` costs length. Task reward is the fraction of relevant
// positions that emit their target token.
struct ToyEnvironment {
  std::size_t vocab = 4;
  PerComponent<std::size_t> segment_lengths{1, 2, 2, 1};
  std::vector<int> target;     // per position
  std::vector<bool> relevant;  // per position
  int verbose_token = 2;
  int invalid_token = 3;
  double lambda = 0.8;

  std::size_t length() const;
  Component component_at(std::size_t pos) const;
  ToyOutcome score(std::span<const int> tokens) const;
  // Full session reward valid * r_task * (1 - lambda * ell).
  double reward(const ToyOutcome& o) const;
  // Reward of a session without a task signal: valid * (1 - lambda * ell).
  double format_reward(const ToyOutcome& o) const;

  // Every position relevant, target token 0.
  static ToyEnvironment bandit();
  // Only the episodic segment is relevant; it is also the longest segment.
  static ToyEnvironment attribution_sensitive();
};

struct ToyTrainConfig {
  AdrpoConfig adrpo;
  WeightingMode weighting = WeightingMode::contribution;
  std::size_t epochs = 50;
  std::size_t sessions_per_epoch = 4;
  std::size_t group_size = 8;
  std::size_t updates_per_batch = 1;
  double learning_rate = 0.5;
  double reward_density = 1.0;  // probability that a session carries task reward
  std::uint64_t seed = 0;
  // Starting logits per token, shared by all positions; empty = uniform.
  // The default warm start already avoids invalid and verbose output, like
  // a fine-tuned starting policy would.
  std::vector<double> initial_token_logits{0.0, 0.0, -1.0, -3.0};
};

struct CurvePoint {
  std::size_t epoch = 0;
  double mean_reward = 0.0;  // exact expectation of the full session reward
  double task_reward = 0.0;
  double mean_length = 0.0;
};

// Exact expectations over all V^L sequences.
CurvePoint expected_metrics(const ToyPolicy& policy, const ToyEnvironment& env);

// Row 0 is the initial (uniform) policy; row e follows epoch e.
std::vector<CurvePoint> train_toy(const ToyEnvironment& env, const ToyTrainConfig& cfg);

// First epoch whose mean_reward reaches `threshold`, or nullopt.
std::optional<std::size_t> epochs_to_reach(const std::vector<CurvePoint>& curve, double threshold);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& file);

}  // namespace memcraft
