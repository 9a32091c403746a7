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

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "privts/data.hpp"
#include "privts/nn.hpp"

namespace privts {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-2;
  int lr_halving_patience = 5;
  int early_stop_patience = 10;
  double min_lr = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_f1 = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
  double learning_rate = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

// Validation-loss plateau logic shared by the centralized and federated
// drivers: halves the learning rate after lr_halving_patience epochs without
// improvement (never below min_lr), stops after early_stop_patience, and
// snapshots the best model.  Improvement means strictly lower loss.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(const TrainConfig& config)
      : config_(config), learning_rate_(config.learning_rate) {}

  // Returns false once training should stop.
  bool observe(double val_loss, const Model& model) {
    if (val_loss < best_loss_) {
      best_loss_ = val_loss;
      best_model_ = model.clone();
      since_improve_ = 0;
      since_halve_ = 0;
      return true;
    }
    ++since_improve_;
    ++since_halve_;
    if (since_halve_ >= config_.lr_halving_patience && learning_rate_ > config_.min_lr) {
      learning_rate_ = std::max(learning_rate_ / 2.0, config_.min_lr);
      since_halve_ = 0;
    }
    return since_improve_ < config_.early_stop_patience;
  }

  double learning_rate() const { return learning_rate_; }
  double best_loss() const { return best_loss_; }
  bool has_best() const { return best_loss_ < std::numeric_limits<double>::infinity(); }
  const Model& best_model() const { return best_model_; }

 private:
  TrainConfig config_;
  double learning_rate_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  int since_improve_ = 0;
  int since_halve_ = 0;
  Model best_model_;
};

struct EpochResult {
  double loss = 0.0;
  double f1 = 0.0;
  std::int64_t steps = 0;
};

// One shuffled pass of plain SGD.  The shuffle and dropout stream is a pure
// function of (seed, epoch_index), so a federated round replaying epoch k
// consumes exactly the centralized epoch-k stream.
EpochResult run_epoch_sgd(Model& model, const TimeSeriesDataset& data, int batch_size,
                          double learning_rate, std::uint64_t seed, std::int64_t epoch_index);

// Inference-mode mean cross-entropy and weighted F1.
std::pair<double, double> evaluate(Model& model, const TimeSeriesDataset& data);

std::vector<int> predict(Model& model, const TimeSeriesDataset& data);

// Plain SGD training with LR halving on validation-loss plateau and early
// stopping; returns the snapshot with the best validation loss.
std::pair<Model, TrainHistory> train(const Model& initial, const TimeSeriesDataset& train_set,
                                     const TimeSeriesDataset& val_set, const TrainConfig& config);

}  // namespace privts
