#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "memcraft/adrpo.hpp"
#include "oracles/oracles.hpp"
#include "support/toy_instances.hpp"

using namespace memcraft;

TEST(Advantages, EqualRewardsGiveZero) {
  const std::vector<double> r(8, 0.37);
  for (double a : advantages(r)) EXPECT_EQ(a, 0.0);
}

TEST(Advantages, TwoPoint) {
  const std::vector<double> r{0.0, 1.0};
  const auto a = advantages(r, 1e-8);
  EXPECT_NEAR(a[0], -1.0, 1e-7);
  EXPECT_NEAR(a[1], 1.0, 1e-7);
}

TEST(Advantages, GroupTooSmall) {
  EXPECT_THROW(advantages(std::vector<double>{1.0}), GroupTooSmall);
  EXPECT_THROW(advantages(std::vector<double>{}), GroupTooSmall);
}

TEST(Advantages, RandomGroupsMatchHighPrecision) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u;
  for (int g = 0; g < 200; ++g) {
    std::vector<double> r(8);
    for (auto& x : r) x = u(rng);
    const auto a = advantages(r);
    const auto ref = oracle::advantages(r);
    long double mean = 0, var = 0, sum_r = 0, var_r = 0;
    for (double x : r) sum_r += x;
    for (double x : r) var_r += (x - sum_r / 8) * (x - sum_r / 8);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_NEAR(a[i], static_cast<double>(ref[i]), 1e-12);
      mean += a[i];
    }
    mean /= 8;
    for (double x : a) var += (x - mean) * (x - mean);
    EXPECT_LT(std::abs(static_cast<double>(mean)), 1e-9);
    const long double sigma = std::sqrt(var_r / 8);
    EXPECT_NEAR(static_cast<double>(std::sqrt(var / 8)), static_cast<double>(sigma / (sigma + 1e-8L)), 1e-9);
  }
}

TEST(ClippedSurrogate, MinSemantics) {
  // A > 0 and rho = 1: the clipped branch A binds over 4A.
  EXPECT_EQ(clipped_surrogate(1.0, 0.5, 4.0, 0.2), 0.5);
  // A < 0: the weighted branch is the smaller one.
  EXPECT_EQ(clipped_surrogate(1.0, -0.5, 4.0, 0.2), -2.0);
  // rho far below the clip range with A > 0: unclipped w * rho * A binds.
  EXPECT_NEAR(clipped_surrogate(0.1, 1.0, 4.0, 0.2), 0.4, 1e-15);
  EXPECT_NEAR(clipped_surrogate(2.0, 1.0, 1.0, 0.2), 1.2, 1e-15);
}

TEST(ClippedSurrogate, NeverExceedsClipTerm) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ratio(0.0, 3.0), adv(-3.0, 3.0), w(1.0, 6.0);
  for (int i = 0; i < 20000; ++i) {
    const double r = ratio(rng), a = adv(rng), ww = w(rng);
    const double v = clipped_surrogate(r, a, ww, 0.2);
    EXPECT_LE(v, std::clamp(r, 0.8, 1.2) * a + 1e-15);
    EXPECT_LE(v, ww * r * a + 1e-15);
  }
}

namespace {

RolloutSample sample_with(double reward, std::mt19937_64& rng, const WeightAssignment& w) {
  std::normal_distribution<double> lp(-1.5, 0.6), d(0.0, 0.2);
  std::uniform_int_distribution<int> len(0, 4);
  RolloutSample s;
  s.reward = reward;
  s.weights = w;
  for (auto& seg : s.segments) {
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      const double base = lp(rng);
      seg.base_logp.push_back(base);
      seg.logp.push_back(base + d(rng));
    }
  }
  return s;
}

oracle::GrpoRollout to_oracle(const RolloutSample& s) {
  oracle::GrpoRollout o{s.reward, {}, {}};
  for (const auto& seg : s.segments) {
    o.logp.push_back(seg.logp);
    o.logp0.push_back(seg.base_logp);
  }
  return o;
}

}  // namespace

TEST(Objective, IdentityPolicyEqualRewardsIsZero) {
  std::mt19937_64 rng(1);
  RolloutGroup g;
  for (int i = 0; i < 4; ++i) {
    auto s = sample_with(0.6, rng, assign_weights(MemType::episodic));
    for (auto& seg : s.segments) seg.logp = seg.base_logp;
    g.rollouts.push_back(s);
  }
  EXPECT_EQ(objective(g, {}), 0.0);
}

TEST(Objective, UnitWeightsMatchPlainGrpo) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 500; ++trial) {
    RolloutGroup g;
    g.kl = u(rng) * 0.3;
    std::vector<oracle::GrpoRollout> ref;
    const int n = 2 + static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) {
      g.rollouts.push_back(sample_with(u(rng), rng, assign_weights(std::nullopt)));
      ref.push_back(to_oracle(g.rollouts.back()));
    }
    AdrpoConfig cfg;
    cfg.kl_beta = 0.04;
    EXPECT_NEAR(objective(g, cfg), oracle::grpo_objective(ref, 0.2, 0.04, g.kl), 1e-12);
  }
}

TEST(Objective, AmplificationOnlyWhenWeightedTermIsSmaller) {
  RolloutGroup g;
  for (double reward : {1.0, 0.0}) {
    RolloutSample s;
    s.reward = reward;
    s.weights = assign_weights(MemType::episodic, 4.0);
    s.segments[index_of(Component::episodic)] = {{-1.0, -2.0}, {-1.0, -2.0}};
    g.rollouts.push_back(s);
  }
  // rho = 1 everywhere, A = +-1: rollout 0 gives A (clip binds), rollout 1 gives 4 * -1.
  const double a = 0.5 / (0.5 + 1e-8);
  EXPECT_NEAR(objective(g, {}), (a + 4.0 * -a) / 2.0, 1e-12);
}

TEST(Objective, ShapeMismatch) {
  RolloutGroup g;
  RolloutSample s;
  s.segments[0] = {{-1.0}, {}};
  g.rollouts = {s, s};
  EXPECT_THROW(objective(g, {}), ShapeMismatch);
}

TEST(ToyPolicyTest, ProbsAndSampling) {
  ToyPolicy p(3, 4);
  for (std::size_t pos = 0; pos < 3; ++pos) {
    for (double x : p.probs(pos)) EXPECT_DOUBLE_EQ(x, 0.25);
  }
  p.logit(1, 2) = 50.0;
  std::mt19937_64 rng(0);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(p.sample(rng)[1], 2);
  const std::vector<int> toks{0, 2, 3};
  EXPECT_NEAR(p.sequence_log_prob(toks), p.log_prob(0, 0) + p.log_prob(1, 2) + p.log_prob(2, 3), 1e-15);
  EXPECT_THROW(ToyPolicy(0, 4), std::invalid_argument);
}

TEST(KlDivergence, IdentityAndGibbs) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    ToyPolicy p(2, 3), q(2, 3);
    for (auto& x : p.logits()) x = z(rng);
    for (auto& x : q.logits()) x = z(rng);
    EXPECT_GE(kl_divergence(p, q), 0.0);
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-15);
    double ref = 0;
    for (std::size_t pos = 0; pos < 2; ++pos) ref += oracle::kl(p.probs(pos), q.probs(pos));
    EXPECT_NEAR(kl_divergence(p, q), ref, 1e-12);
  }
}

TEST(KlDivergence, TwoSymbolClosedForm) {
  ToyPolicy p(1, 2), q(1, 2);
  p.logit(0, 0) = std::log(3.0);  // (0.75, 0.25)
  const double expected = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  EXPECT_NEAR(kl_divergence(p, q), expected, 1e-12);
  EXPECT_NEAR(kl_divergence(p, q), 0.13081, 1e-5);
}

TEST(KlDivergence, SupportMismatch) {
  EXPECT_THROW(kl_divergence(ToyPolicy(2, 3), ToyPolicy(2, 4)), SupportMismatch);
  EXPECT_THROW(kl_divergence(ToyPolicy(3, 3), ToyPolicy(2, 3)), SupportMismatch);
}

TEST(ToyObjective, ZeroAdvantagesZeroGradient) {
  std::mt19937_64 rng(4);
  auto t = testsupport::random_toy_instance(rng);
  for (auto& r : t.group.rollouts) r.reward = 0.5;
  t.cfg.kl_beta = 0.0;
  for (double g : objective_gradient(t.policy, t.reference, t.group, t.cfg)) EXPECT_EQ(g, 0.0);
}

TEST(ToyObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(20240);
  for (int i = 0; i < 100; ++i) {
    const auto t = testsupport::random_toy_instance(rng);
    EXPECT_LT(testsupport::gradient_check(t), 1e-4) << "instance " << i;
  }
}

namespace {

// Plain GRPO on the toy policy, written against probabilities directly.
std::vector<double> plain_grpo_gradient(const testsupport::ToyInstance& t) {
  const auto& g = t.group;
  std::vector<double> rewards;
  for (const auto& r : g.rollouts) rewards.push_back(r.reward);
  const auto adv = oracle::advantages(rewards);
  const std::size_t V = t.policy.vocab();
  std::vector<double> grad(t.policy.length() * V, 0.0);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t k = 0; k < g.segment_lengths[c]; ++k, ++pos) {
      const auto p = oracle::softmax({t.policy.logits().begin() + static_cast<long>(pos * V),
                                      t.policy.logits().begin() + static_cast<long>((pos + 1) * V)});
      for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
        const auto& r = g.rollouts[i];
        const auto tok = static_cast<std::size_t>(r.tokens[pos]);
        const double base = t.cfg.ratio_baseline == RatioBaseline::old_policy
                                ? r.behaviour_logp[pos]
                                : t.reference.log_prob(pos, tok);
        const double rho = p[tok] / std::exp(base);
        const double a = static_cast<double>(adv[i]);
        const bool live = (a > 0 && rho < 1.2) || (a < 0 && rho > 0.8);
        if (!live) continue;
        for (std::size_t v = 0; v < V; ++v) {
          grad[pos * V + v] += a * rho * ((v == tok) - p[v]) /
                               static_cast<double>(g.segment_lengths[c] * g.rollouts.size());
        }
      }
      if (t.cfg.kl_beta > 0) {
        const auto q = t.reference.probs(pos);
        const double kl = oracle::kl(p, q);
        for (std::size_t v = 0; v < V; ++v) {
          grad[pos * V + v] -= t.cfg.kl_beta * p[v] * (std::log(p[v] / q[v]) - kl);
        }
      }
    }
  }
  return grad;
}

}  // namespace

TEST(ToyObjective, UnitWeightsReduceToPlainGrpo) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    const auto t = testsupport::random_toy_instance(rng, true);
    std::vector<oracle::GrpoRollout> ref;
    for (const auto& r : t.group.rollouts) {
      oracle::GrpoRollout o{r.reward, std::vector<std::vector<double>>(4), std::vector<std::vector<double>>(4)};
      for (std::size_t pos = 0; pos < t.policy.length(); ++pos) {
        const auto c = index_of(t.group.component_at(pos));
        const auto tok = static_cast<std::size_t>(r.tokens[pos]);
        o.logp[c].push_back(t.policy.log_prob(pos, tok));
        o.logp0[c].push_back(t.cfg.ratio_baseline == RatioBaseline::old_policy ? r.behaviour_logp[pos]
                                                                              : t.reference.log_prob(pos, tok));
      }
      ref.push_back(std::move(o));
    }
    const double kl = kl_divergence(t.policy, t.reference);
    EXPECT_NEAR(objective(t.policy, t.reference, t.group, t.cfg),
                oracle::grpo_objective(ref, t.cfg.clip_eps, t.cfg.kl_beta, kl), 1e-12);
    const auto grad = objective_gradient(t.policy, t.reference, t.group, t.cfg);
    const auto expected = plain_grpo_gradient(t);
    for (std::size_t k = 0; k < grad.size(); ++k) EXPECT_NEAR(grad[k], expected[k], 1e-12);
  }
}

TEST(ToyObjective, DominantGradientNonDecreasingInAlpha) {
  // Episodic tokens with rho slightly below 1 and A > 0 on the dominant rollout.
  ToyPolicy ref(4, 3);
  ToyPolicy pol = ref;
  pol.logit(1, 0) = -0.05;
  pol.logit(2, 0) = -0.05;
  ToyGroup g;
  g.segment_lengths = {1, 2, 1, 0};
  for (double reward : {1.0, 0.0}) {
    ToyRollout r;
    r.tokens = {1, 0, 0, 2};
    r.reward = reward;
    g.rollouts.push_back(r);
  }
  double prev = -1.0;
  for (double alpha : {1.0, 2.0, 4.0}) {
    g.rollouts[0].weights = assign_weights(MemType::episodic, alpha,
                                           alpha > 1.0 ? WeightingMode::contribution : WeightingMode::unweighted);
    g.rollouts[1].weights = g.rollouts[0].weights;
    const auto grad = objective_gradient(pol, ref, g, {});
    double norm = 0.0;
    for (std::size_t k = 3; k < 9; ++k) norm += grad[k] * grad[k];
    EXPECT_GE(std::sqrt(norm), prev - 1e-15) << alpha;
    prev = std::sqrt(norm);
  }
}

TEST(ToyObjective, ShapeChecks) {
  std::mt19937_64 rng(8);
  auto t = testsupport::random_toy_instance(rng);
  auto bad = t;
  bad.group.rollouts[0].tokens.pop_back();
  EXPECT_THROW(objective(bad.policy, bad.reference, bad.group, bad.cfg), ShapeMismatch);
  bad = t;
  bad.group.segment_lengths[0] += 1;
  EXPECT_THROW(objective_gradient(bad.policy, bad.reference, bad.group, bad.cfg), ShapeMismatch);
}
