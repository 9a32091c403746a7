// Copyright 2026 The privts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "privts/dp.hpp"

#include <cmath>
#include <iostream>
#include <numeric>

#include "privts/errors.hpp"
#include "privts/metrics.hpp"

namespace privts {

namespace {
constexpr std::uint64_t kEpochTag = 0x65706f6368ULL;    // mirrors run_epoch_sgd
constexpr std::uint64_t kNoiseTag = 0x64706e6f697365ULL;  // "dpnoise"

// lgamma cache for the fixed integer order grid; the accountant evaluates
// hundreds of thousands of binomial terms per sweep.
double log_binom(int n, int k) {
  static const std::vector<double> table = [] {
    std::vector<double> t(kRdpOrderMax + 2);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::lgamma(static_cast<double>(i));
    return t;
  }();
  return table[static_cast<std::size_t>(n) + 1] - table[static_cast<std::size_t>(k) + 1] -
         table[static_cast<std::size_t>(n - k) + 1];
}
}  // namespace

void DpConfig::validate() const {
  if (clip_norm <= 0.0) throw InvalidConfig("clip_norm must be > 0");
  if (noise_multiplier < 0.0) throw InvalidConfig("noise_multiplier must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
}

void clip_gradients(NamedTensorList& grads, double clip_norm) {
  if (clip_norm <= 0.0) throw InvalidConfig("clip_norm must be > 0");
  const double norm = l2_norm(grads);
  const double divisor = std::max(1.0, norm / clip_norm);
  if (divisor == 1.0) return;
  const double scale = 1.0 / divisor;
  for (auto& g : grads) {
    for (double& v : g.value.data) v *= scale;
  }
}

void clip_per_example(std::vector<NamedTensorList>& per_example, double clip_norm) {
  for (auto& grads : per_example) clip_gradients(grads, clip_norm);
}

NamedTensorList dp_aggregate(const std::vector<NamedTensorList>& clipped, double clip_norm,
                             double noise_multiplier, int batch_size, Rng& rng) {
  if (clipped.empty()) throw InvalidConfig("dp_aggregate needs at least one gradient set");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  NamedTensorList out = clipped.front();
  for (std::size_t e = 1; e < clipped.size(); ++e) {
    for (std::size_t t = 0; t < out.size(); ++t) {
      const auto& src = clipped[e][t].value.data;
      auto& dst = out[t].value.data;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  const double stddev = noise_multiplier * clip_norm;
  const double inv_b = 1.0 / static_cast<double>(batch_size);
  for (auto& t : out) {
    if (stddev > 0.0) {
      for (double& v : t.value.data) v += rng.normal(0.0, stddev);
    }
    for (double& v : t.value.data) v *= inv_b;
  }
  return out;
}

double rdp_sgm(double sampling_rate, double sigma, int order) {
  if (!(sampling_rate >= 0.0 && sampling_rate <= 1.0))
    throw InvalidConfig("sampling rate must lie in [0, 1]");
  if (sigma <= 0.0) throw InvalidConfig("sigma must be > 0");
  if (order < 2) throw InvalidConfig("order must be an integer >= 2");
  if (sampling_rate == 0.0) return 0.0;

  const double log_q = std::log(sampling_rate);
  const double log_1mq = sampling_rate < 1.0 ? std::log1p(-sampling_rate) : 0.0;
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

  // Log-sum-exp over k of binom(order,k) (1-q)^(order-k) q^k e^{k(k-1)/2s^2}.
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(order) + 1);
  for (int k = 0; k <= order; ++k) {
    if (sampling_rate == 1.0 && k < order) continue;  // (1-q)^(order-k) = 0
    const double t = log_binom(order, k) + static_cast<double>(order - k) * log_1mq +
                     static_cast<double>(k) * log_q +
                     static_cast<double>(k) * static_cast<double>(k - 1) * inv_2s2;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  const double value = (max_term + std::log(acc)) / static_cast<double>(order - 1);
  if (!std::isfinite(value))
    throw NumericalOverflow("rdp accumulation left double range (order " +
                            std::to_string(order) + ")");
  // The mechanism's Renyi divergence is nonnegative; tiny negative results
  // are floating-point dust from the log-sum.
  return std::max(value, 0.0);
}

RdpCurve rdp_curve(double sampling_rate, double sigma, long long steps) {
  RdpCurve curve;
  for (int order = kRdpOrderMin; order <= kRdpOrderMax; ++order) {
    curve.orders.push_back(order);
    curve.rdp_values.push_back(static_cast<double>(steps) * rdp_sgm(sampling_rate, sigma, order));
  }
  return curve;
}

PrivacySpent epsilon_from_steps(double sampling_rate, double sigma, long long steps,
                                double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
  if (steps < 0) throw InvalidConfig("steps must be >= 0");
  const double log_inv_delta = -std::log(delta);
  double best_eps = std::numeric_limits<double>::infinity();
  int best_order = kRdpOrderMin;
  for (int order = kRdpOrderMin; order <= kRdpOrderMax; ++order) {
    const double eps = static_cast<double>(steps) * rdp_sgm(sampling_rate, sigma, order) +
                       log_inv_delta / static_cast<double>(order - 1);
    if (eps < best_eps) {
      best_eps = eps;
      best_order = order;
    }
  }
  return {best_eps, delta, static_cast<double>(best_order)};
}

PrivacySpent compute_epsilon(std::int64_t dataset_size, int batch_size, int epochs,
                             double noise_multiplier, double delta) {
  if (dataset_size < 1 || batch_size < 1 || batch_size > dataset_size)
    throw InvalidConfig("need dataset_size >= batch_size >= 1");
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (noise_multiplier <= 0.0) throw InvalidConfig("noise_multiplier must be > 0");
  const double q = static_cast<double>(batch_size) / static_cast<double>(dataset_size);
  const long long steps_per_epoch = (dataset_size + batch_size - 1) / batch_size;
  return epsilon_from_steps(q, noise_multiplier, static_cast<long long>(epochs) * steps_per_epoch,
                            delta);
}

DpTrainResult dp_train(const Model& initial, const TimeSeriesDataset& train_set,
                       const TimeSeriesDataset& val_set, const TrainConfig& config,
                       const DpConfig& dp) {
  config.validate();
  dp.validate();
  if (train_set.count() == 0) throw EmptyDataset("empty train set");
  if (val_set.count() == 0) throw EmptyDataset("empty validation set");
  if (dp.delta >= 1.0 / static_cast<double>(train_set.count())) {
    std::cerr << "warning: delta " << dp.delta << " is not below 1/n for n="
              << train_set.count() << "\n";
  }

  const std::int64_t n = train_set.count();
  const std::int64_t ex_size = train_set.channels() * train_set.length();
  const double q = std::min(1.0, static_cast<double>(config.batch_size) / static_cast<double>(n));

  Model model = initial.clone();
  auto params = model.parameters();
  std::vector<Tensor> acc;
  for (Parameter* p : params) acc.emplace_back(p->value.shape);

  PlateauScheduler scheduler(config);
  TrainHistory history;
  long long step_counter = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(mix64(config.seed, kEpochTag, static_cast<std::uint64_t>(epoch)));
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    double total_loss = 0.0;
    std::vector<int> preds(static_cast<std::size_t>(n)), truths(static_cast<std::size_t>(n));
    std::int64_t done = 0;
    while (done < n) {
      const std::int64_t m = std::min<std::int64_t>(config.batch_size, n - done);
      for (auto& a : acc) a.fill(0.0);
      for (std::int64_t k = 0; k < m; ++k) {
        const std::int64_t i = order[static_cast<std::size_t>(done + k)];
        model.zero_grads();
        int pred = 0;
        total_loss += model.train_example(train_set.samples.data.data() + i * ex_size,
                                          train_set.labels[static_cast<std::size_t>(i)],
                                          /*training=*/true, &rng, &pred);
        preds[static_cast<std::size_t>(done + k)] = pred;
        truths[static_cast<std::size_t>(done + k)] =
            train_set.labels[static_cast<std::size_t>(i)];

        // Per-example clip: scale by 1 / max(1, |g| / C), then accumulate.
        double sq = 0.0;
        for (Parameter* p : params) {
          for (double v : p->grad.data) sq += v * v;
        }
        const double scale = 1.0 / std::max(1.0, std::sqrt(sq) / dp.clip_norm);
        for (std::size_t t = 0; t < params.size(); ++t) {
          const auto& g = params[t]->grad.data;
          auto& a = acc[t].data;
          for (std::size_t j = 0; j < a.size(); ++j) a[j] += scale * g[j];
        }
      }

      // Gaussian noise once per parameter tensor, mean over the configured
      // batch size (not the possibly smaller final batch).
      const double stddev = dp.noise_multiplier * dp.clip_norm;
      if (stddev > 0.0) {
        Rng noise_rng(mix64(config.seed, kNoiseTag, static_cast<std::uint64_t>(step_counter)));
        for (auto& a : acc) {
          for (double& v : a.data) v += noise_rng.normal(0.0, stddev);
        }
      }
      const double lr_scale = scheduler.learning_rate() / static_cast<double>(config.batch_size);
      for (std::size_t t = 0; t < params.size(); ++t) {
        auto& v = params[t]->value.data;
        const auto& a = acc[t].data;
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= lr_scale * a[j];
      }
      ++step_counter;
      done += m;
    }

    const auto [val_loss, val_f1] = evaluate(model, val_set);
    history.push_back({epoch, total_loss / static_cast<double>(n),
                       weighted_f1(truths, preds, train_set.num_classes()), val_loss, val_f1,
                       scheduler.learning_rate()});
    if (!scheduler.observe(val_loss, model)) break;
  }

  DpTrainResult result{scheduler.best_model().clone(), PrivacySpent{}, std::move(history),
                       step_counter};
  if (dp.noise_multiplier > 0.0) {
    result.privacy = epsilon_from_steps(q, dp.noise_multiplier, step_counter, dp.delta);
  } else {
    result.privacy = {std::numeric_limits<double>::infinity(), dp.delta, 0.0};
  }
  return result;
}

}  // namespace privts
