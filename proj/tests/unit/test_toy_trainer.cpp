#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "memcraft/toy_trainer.hpp"

using namespace memcraft;

TEST(ToyEnvironmentTest, ScoreRules) {
  const auto env = ToyEnvironment::bandit();
  ASSERT_EQ(env.length(), 6u);
  const std::vector<int> perfect(6, 0);
  auto o = env.score(perfect);
  EXPECT_TRUE(o.valid);
  EXPECT_EQ(o.r_task, 1.0);
  EXPECT_EQ(o.ell, 0.0);
  EXPECT_EQ(env.reward(o), 1.0);
  EXPECT_EQ(o.counts, (PerEntryType<std::size_t>{2, 2, 1}));

  o = env.score(std::vector<int>{0, 0, 0, 0, 0, 3});
  EXPECT_FALSE(o.valid);
  EXPECT_EQ(env.reward(o), 0.0);
  EXPECT_EQ(env.format_reward(o), 0.0);

  // Verbose core token: ell = (1/1) / 4.
  o = env.score(std::vector<int>{2, 0, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(o.ell, 0.25);
  EXPECT_DOUBLE_EQ(env.reward(o), (5.0 / 6.0) * (1 - 0.8 * 0.25));
  EXPECT_DOUBLE_EQ(env.format_reward(o), 1 - 0.8 * 0.25);
  EXPECT_THROW(env.score(std::vector<int>{0}), ShapeMismatch);
}

TEST(ToyEnvironmentTest, AttributionEnvOnlyEpisodicMatters) {
  const auto env = ToyEnvironment::attribution_sensitive();
  std::vector<int> t(env.length(), 1);
  for (std::size_t pos = 0; pos < env.length(); ++pos) {
    if (env.component_at(pos) == Component::episodic) t[pos] = 0;
  }
  const auto o = env.score(t);
  EXPECT_EQ(o.r_task, 1.0);
  EXPECT_EQ(dominant_type(o.counts), MemType::episodic);
  EXPECT_EQ(o.counts[index_of(MemType::semantic)], 0u);
}

TEST(ExpectedMetrics, MatchesRecursiveEnumeration) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  const auto env = ToyEnvironment::attribution_sensitive();
  ToyPolicy p(env.length(), env.vocab);
  for (auto& x : p.logits()) x = z(rng);

  double reward = 0.0;
  std::vector<int> tokens(env.length());
  std::function<void(std::size_t, double)> walk = [&](std::size_t pos, double prob) {
    if (pos == env.length()) {
      reward += prob * env.reward(env.score(tokens));
      return;
    }
    for (std::size_t v = 0; v < env.vocab; ++v) {
      tokens[pos] = static_cast<int>(v);
      walk(pos + 1, prob * std::exp(p.log_prob(pos, v)));
    }
  };
  walk(0, 1.0);
  EXPECT_NEAR(expected_metrics(p, env).mean_reward, reward, 1e-12);
}

TEST(TrainToy, DenseBanditImproves) {
  ToyTrainConfig cfg;
  cfg.seed = 3;
  const auto curve = train_toy(ToyEnvironment::bandit(), cfg);
  ASSERT_EQ(curve.size(), 51u);
  EXPECT_EQ(curve.front().epoch, 0u);
  EXPECT_EQ(curve.back().epoch, 50u);
  for (std::size_t e = 1; e < curve.size(); ++e) {
    EXPECT_GT(curve[e].mean_reward, curve[e - 1].mean_reward) << "epoch " << e;
  }
  EXPECT_GT(curve.back().mean_reward, 0.9);
}

TEST(TrainToy, DeterministicUnderSeed) {
  ToyTrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 42;
  const auto a = train_toy(ToyEnvironment::bandit(), cfg);
  const auto b = train_toy(ToyEnvironment::bandit(), cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].mean_reward, b[i].mean_reward);
}

TEST(TrainToy, SparserRewardDoesNotHelp) {
  ToyTrainConfig cfg;
  cfg.epochs = 30;
  std::vector<double> finals;
  for (double d : {1.0, 0.5, 0.25, 0.125}) {
    cfg.reward_density = d;
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      cfg.seed = seed;
      sum += train_toy(ToyEnvironment::bandit(), cfg).back().mean_reward;
    }
    finals.push_back(sum / 5.0);
  }
  for (std::size_t i = 1; i < finals.size(); ++i) EXPECT_LE(finals[i], finals[i - 1]) << i;
}

TEST(TrainToy, AttributionWeightsSpeedUpConvergence) {
  const auto env = ToyEnvironment::attribution_sensitive();
  ToyTrainConfig weighted;
  weighted.seed = 1;
  weighted.adrpo.alpha = 4.0;
  ToyTrainConfig plain = weighted;
  plain.weighting = WeightingMode::unweighted;
  const auto fast = epochs_to_reach(train_toy(env, weighted), 0.5);
  const auto slow = epochs_to_reach(train_toy(env, plain), 0.5);
  ASSERT_TRUE(fast);
  ASSERT_TRUE(slow);
  EXPECT_LT(*fast, *slow);
}

TEST(TrainToy, ConfigValidation) {
  ToyTrainConfig cfg;
  cfg.reward_density = 0.0;
  EXPECT_THROW(train_toy(ToyEnvironment::bandit(), cfg), std::invalid_argument);
  cfg = {};
  cfg.group_size = 1;
  EXPECT_THROW(train_toy(ToyEnvironment::bandit(), cfg), GroupTooSmall);
  cfg = {};
  cfg.initial_token_logits = {0.0, 1.0};
  EXPECT_THROW(train_toy(ToyEnvironment::bandit(), cfg), ShapeMismatch);
}

TEST(EpochsToReach, FirstCrossing) {
  std::vector<CurvePoint> c{{0, 0.1, 0, 0}, {1, 0.4, 0, 0}, {2, 0.6, 0, 0}, {3, 0.5, 0, 0}};
  EXPECT_EQ(epochs_to_reach(c, 0.5), 2u);
  EXPECT_FALSE(epochs_to_reach(c, 0.9));
}

TEST(CurveCsv, Header) {
  const auto file = std::filesystem::temp_directory_path() / "memcraft_curve_test.csv";
  write_curve_csv({{0, 0.25, 0.5, 6.0}}, file);
  std::ifstream in(file);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "epoch,mean_reward,task_reward,mean_length");
  EXPECT_EQ(row, "0,0.25,0.5,6");
  std::filesystem::remove(file);
}
