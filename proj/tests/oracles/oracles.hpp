#pragma once
// Reference implementations written independently of the library code. They
// favour obviousness over speed and share no helpers with core/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

// Linear interpolation through sorted breakpoints, clamped at both ends.
inline double interp(double x, const std::vector<std::pair<double, double>>& pts) {
  if (x <= pts.front().first) return pts.front().second;
  if (x >= pts.back().first) return pts.back().second;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto [x0, y0] = pts[i - 1];
    const auto [x1, y1] = pts[i];
    if (x <= x1) return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
  }
  return pts.back().second;
}

struct Thresholds {
  double theta_min = 150, theta_max = 400, delta = 200;
  double g_l = 0.5, g_u = 1.3, g_min = 0.1, g_max = 3.0;
};

inline double core_penalty(long delta, const Thresholds& t = {}) {
  return interp(static_cast<double>(delta), {{t.theta_min, 0.0}, {t.theta_max, 1.0}});
}

inline double entry_penalty(long fresh, long expert, const Thresholds& t = {}) {
  if (expert <= 0) return 0.0;
  const double rho = static_cast<double>(fresh) / static_cast<double>(expert);
  if (std::labs(fresh - expert) < t.delta) return 0.0;
  if (rho >= t.g_l && rho <= t.g_u) return 0.0;
  if (rho > t.g_u) return interp(rho, {{t.g_u, 0.0}, {t.g_max, 1.0}});
  return interp(rho, {{t.g_min, 1.0}, {t.g_l, 0.0}});
}

inline double gated_reward(bool valid, double r_task, double ell, double lambda = 0.8) {
  if (!valid) return 0.0;
  return r_task * (1.0 - lambda * ell);
}

// Group normalization in extended precision.
inline std::vector<long double> advantages(const std::vector<double>& r, long double eps = 1e-8L) {
  long double mean = 0;
  for (double x : r) mean += x;
  mean /= static_cast<long double>(r.size());
  long double var = 0;
  for (double x : r) var += (x - mean) * (x - mean);
  var /= static_cast<long double>(r.size());
  std::vector<long double> out;
  for (double x : r) out.push_back((x - mean) / (std::sqrt(var) + eps));
  return out;
}

struct Scored {
  std::uint64_t id;
  double score;
};

// Exhaustive cosine ranking over raw (unnormalized) vectors.
inline std::vector<std::uint64_t> brute_force_top_k(const std::vector<std::pair<std::uint64_t, std::vector<double>>>& items,
                                                    const std::vector<double>& query, std::size_t k) {
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  std::vector<Scored> all;
  for (const auto& [id, v] : items) {
    double d = 0;
    for (std::size_t i = 0; i < v.size(); ++i) d += v[i] * query[i];
    all.push_back({id, d / (norm(v) * norm(query))});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(all[i].id);
  return ids;
}

// Categorical KL(p || q) from probability vectors.
inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> e;
  double s = 0;
  for (double x : z) {
    e.push_back(std::exp(x - m));
    s += e.back();
  }
  for (double& x : e) x /= s;
  return e;
}

// Plain GRPO surrogate (no attribution weights) over per-component token
// log-probabilities: mean over rollouts of the sum over components of the
// token-averaged min(rho*A, clip(rho)*A).
struct GrpoRollout {
  double reward;
  std::vector<std::vector<double>> logp;   // [component][token]
  std::vector<std::vector<double>> logp0;  // ratio denominators
};

inline double grpo_objective(const std::vector<GrpoRollout>& group, double clip_eps, double beta,
                             double kl_value, double adv_eps = 1e-8) {
  std::vector<double> rewards;
  for (const auto& r : group) rewards.push_back(r.reward);
  const auto adv = advantages(rewards, adv_eps);
  double total = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a = static_cast<double>(adv[i]);
    for (std::size_t c = 0; c < group[i].logp.size(); ++c) {
      const auto& lp = group[i].logp[c];
      if (lp.empty()) continue;
      double seg = 0;
      for (std::size_t k = 0; k < lp.size(); ++k) {
        const double rho = std::exp(lp[k] - group[i].logp0[c][k]);
        const double clipped = std::clamp(rho, 1.0 - clip_eps, 1.0 + clip_eps);
        seg += std::min(rho * a, clipped * a);
      }
      total += seg / static_cast<double>(lp.size());
    }
  }
  return total / static_cast<double>(group.size()) - beta * kl_value;
}

}  // namespace oracle
