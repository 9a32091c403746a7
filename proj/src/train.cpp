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

#include "privts/train.hpp"

#include <numeric>

#include "privts/errors.hpp"
#include "privts/metrics.hpp"

namespace privts {

namespace {
constexpr std::uint64_t kEpochTag = 0x65706f6368ULL;  // "epoch"
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (learning_rate < 0.0) throw InvalidConfig("learning_rate must be >= 0");
  if (min_lr <= 0.0) throw InvalidConfig("min_lr must be > 0");
  if (lr_halving_patience < 1 || early_stop_patience < 1)
    throw InvalidConfig("patience values must be >= 1");
}

EpochResult run_epoch_sgd(Model& model, const TimeSeriesDataset& data, int batch_size,
                          double learning_rate, std::uint64_t seed, std::int64_t epoch_index) {
  const std::int64_t n = data.count();
  if (n == 0) throw EmptyDataset("empty training partition");
  const std::int64_t ex_size = data.channels() * data.length();

  Rng rng(mix64(seed, kEpochTag, static_cast<std::uint64_t>(epoch_index)));
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  EpochResult result;
  double total_loss = 0.0;
  std::vector<int> preds(static_cast<std::size_t>(n));
  std::vector<int> truths(static_cast<std::size_t>(n));

  // Per-example gradients are accumulated into external buffers, in example
  // order, matching the DP-SGD path exactly so that its degenerate
  // configuration (no clipping, no noise) is bit-identical to plain SGD.
  auto params = model.parameters();
  std::vector<Tensor> acc;
  acc.reserve(params.size());
  for (Parameter* p : params) acc.emplace_back(p->value.shape);

  std::int64_t done = 0;
  while (done < n) {
    const std::int64_t m = std::min<std::int64_t>(batch_size, n - done);
    for (auto& a : acc) a.fill(0.0);
    for (std::int64_t k = 0; k < m; ++k) {
      const std::int64_t i = order[static_cast<std::size_t>(done + k)];
      model.zero_grads();
      int pred = 0;
      total_loss += model.train_example(data.samples.data.data() + i * ex_size,
                                        data.labels[static_cast<std::size_t>(i)],
                                        /*training=*/true, &rng, &pred);
      preds[static_cast<std::size_t>(done + k)] = pred;
      truths[static_cast<std::size_t>(done + k)] = data.labels[static_cast<std::size_t>(i)];
      for (std::size_t t = 0; t < params.size(); ++t) {
        const auto& g = params[t]->grad.data;
        auto& a = acc[t].data;
        for (std::size_t j = 0; j < a.size(); ++j) a[j] += g[j];
      }
    }
    const double lr_scale = learning_rate / static_cast<double>(m);
    for (std::size_t t = 0; t < params.size(); ++t) {
      auto& v = params[t]->value.data;
      const auto& a = acc[t].data;
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= lr_scale * a[j];
    }
    done += m;
    ++result.steps;
  }
  result.loss = total_loss / static_cast<double>(n);
  result.f1 = weighted_f1(truths, preds, data.num_classes());
  return result;
}

std::vector<int> predict(Model& model, const TimeSeriesDataset& data) {
  Tensor logits = forward(model, data.samples);
  const std::int64_t classes = logits.shape[1];
  std::vector<int> preds(static_cast<std::size_t>(data.count()));
  for (std::int64_t i = 0; i < data.count(); ++i) {
    int best = 0;
    for (std::int64_t c = 1; c < classes; ++c) {
      if (logits.at(i, c) > logits.at(i, best)) best = static_cast<int>(c);
    }
    preds[static_cast<std::size_t>(i)] = best;
  }
  return preds;
}

std::pair<double, double> evaluate(Model& model, const TimeSeriesDataset& data) {
  if (data.count() == 0) throw EmptyDataset("empty evaluation partition");
  Tensor logits = forward(model, data.samples);
  const std::int64_t classes = logits.shape[1];
  double loss = 0.0;
  std::vector<int> preds(static_cast<std::size_t>(data.count()));
  std::vector<double> row(static_cast<std::size_t>(classes));
  for (std::int64_t i = 0; i < data.count(); ++i) {
    for (std::int64_t c = 0; c < classes; ++c) row[static_cast<std::size_t>(c)] = logits.at(i, c);
    loss += cross_entropy(row, data.labels[static_cast<std::size_t>(i)]);
    preds[static_cast<std::size_t>(i)] = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }
  loss /= static_cast<double>(data.count());
  return {loss, weighted_f1(data.labels, preds, data.num_classes())};
}

std::pair<Model, TrainHistory> train(const Model& initial, const TimeSeriesDataset& train_set,
                                     const TimeSeriesDataset& val_set,
                                     const TrainConfig& config) {
  config.validate();
  if (train_set.count() == 0) throw EmptyDataset("empty train set");
  if (val_set.count() == 0) throw EmptyDataset("empty validation set");

  Model model = initial.clone();
  PlateauScheduler scheduler(config);
  TrainHistory history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const EpochResult er = run_epoch_sgd(model, train_set, config.batch_size,
                                         scheduler.learning_rate(), config.seed, epoch);
    const auto [val_loss, val_f1] = evaluate(model, val_set);
    history.push_back({epoch, er.loss, er.f1, val_loss, val_f1, scheduler.learning_rate()});
    if (!scheduler.observe(val_loss, model)) break;
  }
  return {scheduler.best_model().clone(), std::move(history)};
}

}  // namespace privts
