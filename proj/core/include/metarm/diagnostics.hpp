#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "metarm/model.hpp"
#include "metarm/synthetic_env.hpp"

namespace metarm {

// Absolute reward gaps |r(x, y) - r(x, y')| over same-prompt response pairs,
// with summary statistics and a fixed 50-bin histogram. Shrinking spread
// across rounds is the collapse signal the meta objective works against.
struct DiffDistribution {
  std::vector<double> raw;
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double max = 0.0;
  std::vector<double> bin_edges;  // kHistogramBins + 1 ascending edges
  std::vector<int> counts;
  bool normalized = false;

  static constexpr int kHistogramBins = 50;
};

// Summarizes raw gap values into a DiffDistribution. Bins cover [0, max],
// or [0, 1] when every value is zero.
DiffDistribution make_diff_distribution(std::vector<double> raw, bool normalized = false);

// Samples query prompts, draws response pairs from the policy, and collects
// |score gap| under the reward model.
DiffDistribution reward_diff_distribution(const RewardModel& model, const ParamVector& params,
                                          const GaussianPolicy& policy, const EnvConfig& env,
                                          int query_count = 1000, int pairs_per_query = 1,
                                          std::uint64_t stream = 0);

// Min-max rescale of the raw gaps to [0, 1], for scale-free comparison
// between models. All-equal input maps to all-zero.
DiffDistribution normalize_distribution(const DiffDistribution& dist);

// (round, variance) per entry, in order.
std::vector<std::pair<int, double>> variance_trajectory(std::span<const DiffDistribution> dists);

}  // namespace metarm
