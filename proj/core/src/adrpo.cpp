#include "memcraft/adrpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace memcraft {

void AdrpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw std::invalid_argument("clip_eps must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) throw std::invalid_argument("kl_beta must be non-negative");
  if (!(adv_eps > 0.0)) throw std::invalid_argument("adv_eps must be positive");
}

std::vector<double> advantages(std::span<const double> rewards, double adv_eps) {
  if (rewards.size() < 2) {
    throw GroupTooSmall("advantages need at least 2 rollouts, got " + std::to_string(rewards.size()));
  }
  // A uniform group carries no signal; the rounded mean would leave tiny
  // nonzero residues.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) {
    return std::vector<double>(rewards.size(), 0.0);
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sigma = std::sqrt(var / n);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / (sigma + adv_eps));
  return out;
}

namespace {

double clip(double ratio, double eps) { return std::clamp(ratio, 1.0 - eps, 1.0 + eps); }

// The unclipped branch is taken on ties so that weights stay visible.
bool unclipped_binds(double ratio, double adv, double weight, double eps) {
  return weight * ratio * adv <= clip(ratio, eps) * adv;
}

}  // namespace

double clipped_surrogate(double ratio, double advantage, double weight, double clip_eps) {
  return std::min(weight * ratio * advantage, clip(ratio, clip_eps) * advantage);
}

double objective(const RolloutGroup& group, const AdrpoConfig& cfg) {
  std::vector<double> rewards;
  for (const auto& r : group.rollouts) rewards.push_back(r.reward);
  const auto adv = advantages(rewards, cfg.adv_eps);

  double total = 0.0;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const auto& ro = group.rollouts[i];
    for (auto c : kComponents) {
      const auto& seg = ro.segments[index_of(c)];
      if (seg.logp.size() != seg.base_logp.size()) {
        throw ShapeMismatch("rollout " + std::to_string(i) + " " + std::string(short_name(c)) +
                            ": policy and baseline log-prob lengths differ");
      }
      if (seg.logp.empty()) continue;
      double sum = 0.0;
      for (std::size_t k = 0; k < seg.logp.size(); ++k) {
        sum += clipped_surrogate(std::exp(seg.logp[k] - seg.base_logp[k]), adv[i], ro.weights.of(c),
                                 cfg.clip_eps);
      }
      total += sum / static_cast<double>(seg.logp.size());
    }
  }
  return total / static_cast<double>(group.rollouts.size()) - cfg.kl_beta * group.kl;
}

ToyPolicy::ToyPolicy(std::size_t length, std::size_t vocab)
    : length_(length), vocab_(vocab), logits_(length * vocab, 0.0) {
  if (length == 0 || vocab < 2) throw std::invalid_argument("toy policy needs L >= 1 and V >= 2");
}

std::vector<double> ToyPolicy::probs(std::size_t pos) const {
  const auto row = logits().subspan(pos * vocab_, vocab_);
  const double mx = *std::max_element(row.begin(), row.end());
  std::vector<double> p(vocab_);
  double z = 0.0;
  for (std::size_t v = 0; v < vocab_; ++v) z += p[v] = std::exp(row[v] - mx);
  for (auto& x : p) x /= z;
  return p;
}

double ToyPolicy::log_prob(std::size_t pos, std::size_t v) const {
  const auto row = logits().subspan(pos * vocab_, vocab_);
  const double mx = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double x : row) z += std::exp(x - mx);
  return row[v] - mx - std::log(z);
}

double ToyPolicy::sequence_log_prob(std::span<const int> tokens) const {
  if (tokens.size() != length_) throw ShapeMismatch("token sequence length differs from policy");
  double s = 0.0;
  for (std::size_t pos = 0; pos < length_; ++pos) s += log_prob(pos, static_cast<std::size_t>(tokens[pos]));
  return s;
}

std::vector<int> ToyPolicy::sample(std::mt19937_64& rng) const {
  std::vector<int> out(length_);
  for (std::size_t pos = 0; pos < length_; ++pos) {
    const auto p = probs(pos);
    std::discrete_distribution<int> dist(p.begin(), p.end());
    out[pos] = dist(rng);
  }
  return out;
}

double kl_divergence(const ToyPolicy& p, const ToyPolicy& q) {
  if (p.length() != q.length() || p.vocab() != q.vocab()) {
    throw SupportMismatch("policies have different shapes");
  }
  double kl = 0.0;
  for (std::size_t pos = 0; pos < p.length(); ++pos) {
    const auto pp = p.probs(pos);
    for (std::size_t v = 0; v < p.vocab(); ++v) {
      if (pp[v] > 0.0) kl += pp[v] * (p.log_prob(pos, v) - q.log_prob(pos, v));
    }
  }
  return kl;
}

std::size_t ToyGroup::total_length() const {
  return std::accumulate(segment_lengths.begin(), segment_lengths.end(), std::size_t{0});
}

Component ToyGroup::component_at(std::size_t pos) const {
  for (auto c : kComponents) {
    if (pos < segment_lengths[index_of(c)]) return c;
    pos -= segment_lengths[index_of(c)];
  }
  throw std::out_of_range("position beyond the last segment");
}

namespace {

void check_toy_shapes(const ToyPolicy& policy, const ToyPolicy& reference, const ToyGroup& group,
                      const AdrpoConfig& cfg) {
  if (policy.length() != reference.length() || policy.vocab() != reference.vocab()) {
    throw ShapeMismatch("policy and reference shapes differ");
  }
  if (group.total_length() != policy.length()) {
    throw ShapeMismatch("segment lengths do not cover the policy length");
  }
  for (const auto& r : group.rollouts) {
    if (r.tokens.size() != policy.length()) throw ShapeMismatch("rollout length differs from policy");
    for (int t : r.tokens) {
      if (t < 0 || static_cast<std::size_t>(t) >= policy.vocab()) {
        throw ShapeMismatch("token outside the vocabulary");
      }
    }
    if (cfg.ratio_baseline == RatioBaseline::old_policy && r.behaviour_logp.size() != r.tokens.size()) {
      throw ShapeMismatch("old-policy ratios need one behaviour log-prob per token");
    }
  }
}

double base_logp(const ToyPolicy& reference, const ToyRollout& r, std::size_t pos,
                 const AdrpoConfig& cfg) {
  if (cfg.ratio_baseline == RatioBaseline::old_policy) return r.behaviour_logp[pos];
  return reference.log_prob(pos, static_cast<std::size_t>(r.tokens[pos]));
}

std::vector<double> group_advantages(const ToyGroup& group, const AdrpoConfig& cfg) {
  std::vector<double> rewards;
  rewards.reserve(group.rollouts.size());
  for (const auto& r : group.rollouts) rewards.push_back(r.reward);
  return advantages(rewards, cfg.adv_eps);
}

}  // namespace

double objective(const ToyPolicy& policy, const ToyPolicy& reference, const ToyGroup& group,
                 const AdrpoConfig& cfg) {
  check_toy_shapes(policy, reference, group, cfg);
  const auto adv = group_advantages(group, cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const auto& r = group.rollouts[i];
    for (std::size_t pos = 0; pos < policy.length(); ++pos) {
      const auto c = group.component_at(pos);
      const auto a = static_cast<std::size_t>(r.tokens[pos]);
      const double ratio = std::exp(policy.log_prob(pos, a) - base_logp(reference, r, pos, cfg));
      total += clipped_surrogate(ratio, adv[i], r.weights.of(c), cfg.clip_eps) /
               static_cast<double>(group.segment_lengths[index_of(c)]);
    }
  }
  total /= static_cast<double>(group.rollouts.size());
  if (cfg.kl_beta != 0.0) total -= cfg.kl_beta * kl_divergence(policy, reference);
  return total;
}

std::vector<double> objective_gradient(const ToyPolicy& policy, const ToyPolicy& reference,
                                       const ToyGroup& group, const AdrpoConfig& cfg) {
  check_toy_shapes(policy, reference, group, cfg);
  const auto adv = group_advantages(group, cfg);
  const std::size_t V = policy.vocab();
  const double inv_n = 1.0 / static_cast<double>(group.rollouts.size());
  std::vector<double> grad(policy.length() * V, 0.0);

  for (std::size_t pos = 0; pos < policy.length(); ++pos) {
    const auto p = policy.probs(pos);
    const auto c = group.component_at(pos);
    const double seg_scale = inv_n / static_cast<double>(group.segment_lengths[index_of(c)]);
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
      const auto& r = group.rollouts[i];
      const auto a = static_cast<std::size_t>(r.tokens[pos]);
      const double ratio = std::exp(policy.log_prob(pos, a) - base_logp(reference, r, pos, cfg));
      const double w = r.weights.of(c);
      double coef = 0.0;  // d(surrogate)/d(ratio)
      if (unclipped_binds(ratio, adv[i], w, cfg.clip_eps)) {
        coef = w * adv[i];
      } else if (ratio > 1.0 - cfg.clip_eps && ratio < 1.0 + cfg.clip_eps) {
        coef = adv[i];
      }
      if (coef == 0.0) continue;
      // d ratio / d logit_v = ratio * (1[v == a] - p_v)
      for (std::size_t v = 0; v < V; ++v) {
        grad[pos * V + v] += seg_scale * coef * ratio * ((v == a ? 1.0 : 0.0) - p[v]);
      }
    }
    if (cfg.kl_beta != 0.0) {
      double kl_pos = 0.0;
      std::vector<double> log_ratio(V);
      for (std::size_t v = 0; v < V; ++v) {
        log_ratio[v] = policy.log_prob(pos, v) - reference.log_prob(pos, v);
        kl_pos += p[v] * log_ratio[v];
      }
      for (std::size_t v = 0; v < V; ++v) {
        grad[pos * V + v] -= cfg.kl_beta * p[v] * (log_ratio[v] - kl_pos);
      }
    }
  }
  return grad;
}

}  // namespace memcraft
