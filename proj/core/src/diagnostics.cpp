#include "metarm/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "metarm/errors.hpp"
#include "metarm/rng.hpp"

namespace metarm {

namespace {

constexpr std::uint64_t kDiffStream = 0x4469666644697374ULL;

}  // namespace

DiffDistribution make_diff_distribution(std::vector<double> raw, bool normalized) {
  if (raw.empty()) throw DataError("make_diff_distribution: no values");
  DiffDistribution dist;
  dist.raw = std::move(raw);
  dist.normalized = normalized;

  double sum = 0.0;
  dist.max = dist.raw.front();
  for (double v : dist.raw) {
    sum += v;
    dist.max = std::max(dist.max, v);
  }
  const double n = double(dist.raw.size());
  dist.mean = sum / n;
  double sq = 0.0;
  for (double v : dist.raw) {
    const double d = v - dist.mean;
    sq += d * d;
  }
  dist.variance = sq / n;

  const int bins = DiffDistribution::kHistogramBins;
  const double hi = dist.max > 0.0 ? dist.max : 1.0;
  dist.bin_edges.resize(std::size_t(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    dist.bin_edges[std::size_t(i)] = hi * double(i) / double(bins);
  }
  dist.counts.assign(std::size_t(bins), 0);
  for (double v : dist.raw) {
    int idx = int(std::floor(v / hi * bins));
    idx = std::clamp(idx, 0, bins - 1);  // the max lands in the last bin
    ++dist.counts[std::size_t(idx)];
  }
  return dist;
}

DiffDistribution reward_diff_distribution(const RewardModel& model, const ParamVector& params,
                                          const GaussianPolicy& policy, const EnvConfig& env,
                                          int query_count, int pairs_per_query,
                                          std::uint64_t stream) {
  env.validate();
  if (query_count < 1) throw DataError("reward_diff_distribution: query_count must be positive");
  if (pairs_per_query < 1) {
    throw DataError("reward_diff_distribution: pairs_per_query must be positive");
  }
  Rng rng(derive_seed(env.seed, kDiffStream, stream));
  std::vector<double> raw;
  raw.reserve(std::size_t(query_count) * std::size_t(pairs_per_query));
  for (int q = 0; q < query_count; ++q) {
    const std::vector<double> prompt = env.sample_prompt(rng);
    for (int p = 0; p < pairs_per_query; ++p) {
      const std::vector<double> y1 = policy.sample_response(prompt, rng);
      const std::vector<double> y2 = policy.sample_response(prompt, rng);
      const double s1 = model.score(params, prompt, y1);
      const double s2 = model.score(params, prompt, y2);
      raw.push_back(std::abs(s1 - s2));
    }
  }
  return make_diff_distribution(std::move(raw));
}

DiffDistribution normalize_distribution(const DiffDistribution& dist) {
  if (dist.raw.empty()) throw DataError("normalize_distribution: no values");
  const auto [lo_it, hi_it] = std::minmax_element(dist.raw.begin(), dist.raw.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> scaled(dist.raw.size(), 0.0);
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      scaled[i] = (dist.raw[i] - lo) * inv;
    }
  }
  return make_diff_distribution(std::move(scaled), true);
}

std::vector<std::pair<int, double>> variance_trajectory(
    std::span<const DiffDistribution> dists) {
  std::vector<std::pair<int, double>> out;
  out.reserve(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) {
    out.emplace_back(int(i), dists[i].variance);
  }
  return out;
}

}  // namespace metarm
