#pragma once

#include <span>
#include <vector>

#include "metarm/model.hpp"

namespace metarm {

// One labeled comparison: winner preferred over loser for the same prompt.
struct PreferencePair {
  std::vector<double> prompt;
  std::vector<double> winner;
  std::vector<double> loser;
};

// One prompt with k >= 2 unlabeled responses drawn from the current policy.
struct MetaSample {
  std::vector<double> prompt;
  std::vector<std::vector<double>> responses;
};

// Logistic sigmoid, stable for large |x|.
double sigmoid(double x);

// -log sigmoid(delta), computed via log1p(exp(-|delta|)). Strictly
// decreasing in delta and finite for any finite input.
double pairwise_loss(double delta);

struct DiffLossOptions {
  // The difference objective scales the pair sum by 2/k^2 by default.
  // exact_pair_mean switches to 2/(k(k-1)), the true mean over pairs.
  bool exact_pair_mean = false;
};

// Score-level difference objective for one sample: the scaled sum of
// sigmoid(|s_i - s_j|) over response pairs i < j.
double difference_value_from_scores(std::span<const double> scores,
                                    const DiffLossOptions& opts = {});

struct LossResult {
  double loss = 0.0;
  ParamVector grad;
};

// Mean preference loss over the batch together with its exact gradient.
LossResult vanilla_loss(const RewardModel& model, const ParamVector& params,
                        std::span<const PreferencePair> batch);

// Mean difference objective over the batch with its exact gradient.
// |.| contributes subgradient 0 at ties.
LossResult difference_loss(const RewardModel& model, const ParamVector& params,
                           std::span<const MetaSample> batch, const DiffLossOptions& opts = {});

// Value-only variant of difference_loss.
double difference_value(const RewardModel& model, const ParamVector& params,
                        std::span<const MetaSample> batch, const DiffLossOptions& opts = {});

// Fraction of pairs scored strictly winner > loser. Ties count as incorrect.
double rm_accuracy(const RewardModel& model, const ParamVector& params,
                   std::span<const PreferencePair> batch);

}  // namespace metarm
