#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "memcraft/attribution.hpp"
#include "memcraft/types.hpp"

namespace memcraft {

class GroupTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class SupportMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Which log-probabilities the importance ratio divides by.
enum class RatioBaseline : std::uint8_t { reference, old_policy };

struct AdrpoConfig {
  double clip_eps = 0.2;
  double kl_beta = 0.0;
  double adv_eps = 1e-8;
  double alpha = 4.0;
  RatioBaseline ratio_baseline = RatioBaseline::reference;

  void validate() const;
};

// A_i = (r_i - mean) / (std + eps), population standard deviation.
std::vector<double> advantages(std::span<const double> rewards, double adv_eps = 1e-8);

// min(w * rho * A, clip(rho, 1 - eps, 1 + eps) * A)
double clipped_surrogate(double ratio, double advantage, double weight, double clip_eps);

// Log-probabilities of one component's generated tokens.
struct TokenSegment {
  std::vector<double> logp;      // current policy
  std::vector<double> base_logp; // ratio baseline (reference or old policy)
};

struct RolloutSample {
  PerComponent<TokenSegment> segments;
  double reward = 0.0;
  WeightAssignment weights;
};

struct RolloutGroup {
  std::vector<RolloutSample> rollouts;
  double kl = 0.0;  // KL(pi_theta || pi_ref), computed by the caller
};

// Mean over rollouts of the per-component token-averaged clipped surrogate,
// minus kl_beta * kl. Empty segments contribute 0.
double objective(const RolloutGroup& group, const AdrpoConfig& cfg);

// Tabular softmax policy: one categorical distribution per position.
class ToyPolicy {
 public:
  ToyPolicy(std::size_t length, std::size_t vocab);

  std::size_t length() const { return length_; }
  std::size_t vocab() const { return vocab_; }
  double& logit(std::size_t pos, std::size_t v) { return logits_[pos * vocab_ + v]; }
  double logit(std::size_t pos, std::size_t v) const { return logits_[pos * vocab_ + v]; }
  std::span<double> logits() { return logits_; }
  std::span<const double> logits() const { return logits_; }

  std::vector<double> probs(std::size_t pos) const;
  double log_prob(std::size_t pos, std::size_t v) const;
  double sequence_log_prob(std::span<const int> tokens) const;
  std::vector<int> sample(std::mt19937_64& rng) const;

 private:
  std::size_t length_;
  std::size_t vocab_;
  std::vector<double> logits_;
};

// Exact KL(p || q) summed over positions.
double kl_divergence(const ToyPolicy& p, const ToyPolicy& q);

struct ToyRollout {
  std::vector<int> tokens;             // one token per position
  std::vector<double> behaviour_logp;  // log-prob under the sampling policy
  double reward = 0.0;
  WeightAssignment weights;
};

// Positions are split into consecutive segments core, epi, sem, proc.
struct ToyGroup {
  PerComponent<std::size_t> segment_lengths{};
  std::vector<ToyRollout> rollouts;

  std::size_t total_length() const;
  Component component_at(std::size_t pos) const;
};

double objective(const ToyPolicy& policy, const ToyPolicy& reference, const ToyGroup& group,
                 const AdrpoConfig& cfg);

// d objective / d logits, same layout as ToyPolicy::logits().
std::vector<double> objective_gradient(const ToyPolicy& policy, const ToyPolicy& reference,
                                       const ToyGroup& group, const AdrpoConfig& cfg);

}  // namespace memcraft
