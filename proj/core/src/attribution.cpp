#include "memcraft/attribution.hpp"

#include <string>

namespace memcraft {

std::optional<MemType> dominant_type(const PerEntryType<std::size_t>& counts) {
  std::optional<MemType> best;
  std::size_t best_count = 0;
  // kEntryTypes is already in tie-break priority order, so only a strictly
  // larger count displaces the current best.
  for (auto t : kEntryTypes) {
    if (counts[index_of(t)] > best_count) {
      best_count = counts[index_of(t)];
      best = t;
    }
  }
  return best;
}

WeightAssignment assign_weights(std::optional<MemType> dominant, double alpha,
                                WeightingMode mode) {
  WeightAssignment w;
  if (mode == WeightingMode::unweighted) return w;
  if (!(alpha > 1.0)) {
    throw AlphaOutOfRange("alpha must exceed 1 (got " + std::to_string(alpha) +
                          "); use the unweighted mode for plain GRPO");
  }
  w.dominant = dominant;
  if (dominant) w.weights[index_of(component_of(*dominant))] = alpha;
  return w;
}

nlohmann::ordered_json WeightAssignment::to_json() const {
  nlohmann::ordered_json j;
  for (auto c : kComponents) j[std::string(short_name(c))] = weights[index_of(c)];
  j["dominant"] = dominant ? nlohmann::ordered_json(std::string(short_name(*dominant)))
                           : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace memcraft
