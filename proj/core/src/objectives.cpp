#include "metarm/objectives.hpp"

#include <cmath>
#include <string>

#include "metarm/errors.hpp"

namespace metarm {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double pairwise_loss(double delta) {
  if (delta >= 0.0) return std::log1p(std::exp(-delta));
  return -delta + std::log1p(std::exp(delta));
}

namespace {

double pair_scale(std::size_t k, const DiffLossOptions& opts) {
  const double kk = static_cast<double>(k);
  return opts.exact_pair_mean ? 2.0 / (kk * (kk - 1.0)) : 2.0 / (kk * kk);
}

void check_sample(const MetaSample& sample) {
  if (sample.responses.size() < 2) {
    throw DataError("difference loss: sample needs k >= 2 responses, got " +
                    std::to_string(sample.responses.size()));
  }
}

double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double difference_value_from_scores(std::span<const double> scores, const DiffLossOptions& opts) {
  const std::size_t k = scores.size();
  if (k < 2) throw DataError("difference loss: need k >= 2 scores");
  double pair_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      pair_sum += sigmoid(std::fabs(scores[i] - scores[j]));
    }
  }
  return pair_scale(k, opts) * pair_sum;
}

LossResult vanilla_loss(const RewardModel& model, const ParamVector& params,
                        std::span<const PreferencePair> batch) {
  if (batch.empty()) throw DataError("vanilla loss: empty batch");
  LossResult result;
  result.grad = model.zero_params();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const PreferencePair& pair : batch) {
    const double rw = model.score(params, pair.prompt, pair.winner);
    const double rl = model.score(params, pair.prompt, pair.loser);
    const double delta = rw - rl;
    result.loss += pairwise_loss(delta) * inv_n;
    const double weight = (sigmoid(delta) - 1.0) * inv_n;
    model.accumulate_score_grad(params, pair.prompt, pair.winner, weight, result.grad.values);
    model.accumulate_score_grad(params, pair.prompt, pair.loser, -weight, result.grad.values);
  }
  return result;
}

LossResult difference_loss(const RewardModel& model, const ParamVector& params,
                           std::span<const MetaSample> batch, const DiffLossOptions& opts) {
  if (batch.empty()) throw DataError("difference loss: empty batch");
  LossResult result;
  result.grad = model.zero_params();
  const double inv_m = 1.0 / static_cast<double>(batch.size());

  std::vector<double> scores;
  std::vector<double> weights;
  for (const MetaSample& sample : batch) {
    check_sample(sample);
    const std::size_t k = sample.responses.size();
    scores.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      scores[i] = model.score(params, sample.prompt, sample.responses[i]);
    }
    const double scale = pair_scale(k, opts) * inv_m;
    double pair_sum = 0.0;
    weights.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double d = scores[i] - scores[j];
        const double s = sigmoid(std::fabs(d));
        pair_sum += s;
        const double w = s * (1.0 - s) * sign_or_zero(d);
        weights[i] += w;
        weights[j] -= w;
      }
    }
    result.loss += scale * pair_sum;
    for (std::size_t i = 0; i < k; ++i) {
      if (weights[i] == 0.0) continue;
      model.accumulate_score_grad(params, sample.prompt, sample.responses[i],
                                  scale * weights[i], result.grad.values);
    }
  }
  return result;
}

double difference_value(const RewardModel& model, const ParamVector& params,
                        std::span<const MetaSample> batch, const DiffLossOptions& opts) {
  if (batch.empty()) throw DataError("difference loss: empty batch");
  double total = 0.0;
  std::vector<double> scores;
  for (const MetaSample& sample : batch) {
    check_sample(sample);
    scores.assign(sample.responses.size(), 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = model.score(params, sample.prompt, sample.responses[i]);
    }
    total += difference_value_from_scores(scores, opts);
  }
  return total / static_cast<double>(batch.size());
}

double rm_accuracy(const RewardModel& model, const ParamVector& params,
                   std::span<const PreferencePair> batch) {
  if (batch.empty()) throw DataError("accuracy: empty batch");
  std::size_t correct = 0;
  for (const PreferencePair& pair : batch) {
    const double rw = model.score(params, pair.prompt, pair.winner);
    const double rl = model.score(params, pair.prompt, pair.loser);
    if (rw > rl) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}  // namespace metarm
