#include "memcraft/toy_trainer.hpp"

#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

namespace memcraft {

std::size_t ToyEnvironment::length() const {
  return std::accumulate(segment_lengths.begin(), segment_lengths.end(), std::size_t{0});
}

Component ToyEnvironment::component_at(std::size_t pos) const {
  for (auto c : kComponents) {
    if (pos < segment_lengths[index_of(c)]) return c;
    pos -= segment_lengths[index_of(c)];
  }
  throw std::out_of_range("position beyond the last segment");
}

ToyOutcome ToyEnvironment::score(std::span<const int> tokens) const {
  if (tokens.size() != length()) throw ShapeMismatch("toy sequence has the wrong length");
  ToyOutcome o;
  o.valid = true;
  PerComponent<std::size_t> verbose{};
  std::size_t matched = 0;
  std::size_t n_relevant = 0;
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const auto c = component_at(pos);
    if (tokens[pos] == invalid_token) o.valid = false;
    if (tokens[pos] == verbose_token) {
      ++verbose[index_of(c)];
      o.length += 3.0;
    } else {
      o.length += 1.0;
    }
    if (!relevant[pos]) continue;
    ++n_relevant;
    if (tokens[pos] == target[pos]) ++matched;
    // Any well-formed write at a relevant position gets retrieved.
    if (tokens[pos] != invalid_token) {
      if (auto t = mem_type_of(c)) ++o.counts[index_of(*t)];
    }
  }
  o.r_task = n_relevant ? static_cast<double>(matched) / static_cast<double>(n_relevant) : 0.0;
  for (auto c : kComponents) {
    const auto n = segment_lengths[index_of(c)];
    if (n) o.ell += static_cast<double>(verbose[index_of(c)]) / static_cast<double>(n);
  }
  o.ell /= 4.0;
  return o;
}

double ToyEnvironment::reward(const ToyOutcome& o) const {
  return (o.valid ? 1.0 : 0.0) * o.r_task * (1.0 - lambda * o.ell);
}

double ToyEnvironment::format_reward(const ToyOutcome& o) const {
  return (o.valid ? 1.0 : 0.0) * (1.0 - lambda * o.ell);
}

ToyEnvironment ToyEnvironment::bandit() {
  ToyEnvironment env;
  env.target.assign(env.length(), 0);
  env.relevant.assign(env.length(), true);
  return env;
}

ToyEnvironment ToyEnvironment::attribution_sensitive() {
  ToyEnvironment env;
  env.segment_lengths = {1, 3, 1, 1};
  env.target.assign(env.length(), 0);
  env.relevant.assign(env.length(), false);
  for (std::size_t pos = 0; pos < env.length(); ++pos) {
    env.relevant[pos] = env.component_at(pos) == Component::episodic;
  }
  return env;
}

CurvePoint expected_metrics(const ToyPolicy& policy, const ToyEnvironment& env) {
  const std::size_t L = env.length();
  const std::size_t V = env.vocab;
  std::vector<std::vector<double>> p(L);
  for (std::size_t pos = 0; pos < L; ++pos) p[pos] = policy.probs(pos);

  CurvePoint out;
  std::vector<int> tokens(L, 0);
  while (true) {
    double prob = 1.0;
    for (std::size_t pos = 0; pos < L; ++pos) prob *= p[pos][static_cast<std::size_t>(tokens[pos])];
    const auto o = env.score(tokens);
    out.mean_reward += prob * env.reward(o);
    out.task_reward += prob * o.r_task;
    out.mean_length += prob * o.length;
    // Odometer increment over V^L sequences.
    std::size_t pos = 0;
    while (pos < L && static_cast<std::size_t>(++tokens[pos]) == V) tokens[pos++] = 0;
    if (pos == L) break;
  }
  return out;
}

std::vector<CurvePoint> train_toy(const ToyEnvironment& env, const ToyTrainConfig& cfg) {
  cfg.adrpo.validate();
  if (!(cfg.reward_density > 0.0 && cfg.reward_density <= 1.0)) {
    throw std::invalid_argument("reward_density must lie in (0, 1]");
  }
  if (cfg.group_size < 2) throw GroupTooSmall("toy training needs group_size >= 2");

  ToyPolicy policy(env.length(), env.vocab);
  if (!cfg.initial_token_logits.empty()) {
    if (cfg.initial_token_logits.size() != env.vocab) {
      throw ShapeMismatch("initial_token_logits needs one value per vocabulary token");
    }
    for (std::size_t pos = 0; pos < env.length(); ++pos) {
      for (std::size_t v = 0; v < env.vocab; ++v) policy.logit(pos, v) = cfg.initial_token_logits[v];
    }
  }
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution dense(cfg.reward_density);

  std::vector<CurvePoint> curve;
  curve.push_back(expected_metrics(policy, env));

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const ToyPolicy reference = policy;
    std::vector<ToyGroup> groups;
    for (std::size_t s = 0; s < cfg.sessions_per_epoch; ++s) {
      const bool has_task = dense(rng);
      ToyGroup g;
      g.segment_lengths = env.segment_lengths;
      for (std::size_t i = 0; i < cfg.group_size; ++i) {
        ToyRollout r;
        r.tokens = policy.sample(rng);
        for (std::size_t pos = 0; pos < r.tokens.size(); ++pos) {
          r.behaviour_logp.push_back(policy.log_prob(pos, static_cast<std::size_t>(r.tokens[pos])));
        }
        const auto o = env.score(r.tokens);
        if (has_task) {
          r.reward = env.reward(o);
          r.weights = assign_weights(dominant_type(o.counts), cfg.adrpo.alpha, cfg.weighting);
        } else {
          // No QA ran, so there are no retrieval counts to attribute.
          r.reward = env.format_reward(o);
          r.weights = assign_weights(std::nullopt, cfg.adrpo.alpha, cfg.weighting);
        }
        g.rollouts.push_back(std::move(r));
      }
      groups.push_back(std::move(g));
    }

    for (std::size_t u = 0; u < cfg.updates_per_batch; ++u) {
      std::vector<double> step(policy.logits().size(), 0.0);
      for (const auto& g : groups) {
        const auto grad = objective_gradient(policy, reference, g, cfg.adrpo);
        for (std::size_t j = 0; j < step.size(); ++j) step[j] += grad[j];
      }
      const double scale = cfg.learning_rate / static_cast<double>(groups.size());
      auto logits = policy.logits();
      for (std::size_t j = 0; j < step.size(); ++j) logits[j] += scale * step[j];
    }

    auto point = expected_metrics(policy, env);
    point.epoch = epoch;
    curve.push_back(point);
  }
  spdlog::debug("toy run: density {} alpha {} final reward {:.4f}", cfg.reward_density,
                cfg.adrpo.alpha, curve.back().mean_reward);
  return curve;
}

std::optional<std::size_t> epochs_to_reach(const std::vector<CurvePoint>& curve, double threshold) {
  for (const auto& p : curve) {
    if (p.mean_reward >= threshold) return p.epoch;
  }
  return std::nullopt;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "epoch,mean_reward,task_reward,mean_length\n";
  out.precision(10);
  for (const auto& p : curve) {
    out << p.epoch << ',' << p.mean_reward << ',' << p.task_reward << ',' << p.mean_length << '\n';
  }
}

}  // namespace memcraft
