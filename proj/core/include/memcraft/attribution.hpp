#pragma once

#include <optional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "memcraft/types.hpp"

namespace memcraft {

class AlphaOutOfRange : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WeightAssignment {
  PerComponent<double> weights{1.0, 1.0, 1.0, 1.0};
  std::optional<MemType> dominant;

  double of(Component c) const { return weights[index_of(c)]; }
  nlohmann::ordered_json to_json() const;
};

// Argmax of the retrieval counts; ties go to episodic, then semantic, then
// procedural. All-zero counts give no dominant type.
std::optional<MemType> dominant_type(const PerEntryType<std::size_t>& counts);

enum class WeightingMode : std::uint8_t { contribution, unweighted };

// The dominant type gets alpha, everything else (Core included) gets 1.
// In contribution mode alpha must exceed 1; unweighted mode returns all ones.
WeightAssignment assign_weights(std::optional<MemType> dominant, double alpha = 4.0,
                                WeightingMode mode = WeightingMode::contribution);

}  // namespace memcraft
