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

#include <cstdint>
#include <vector>

#include "privts/nn.hpp"
#include "privts/train.hpp"

namespace privts {

// Integer Renyi order grid used for accounting.
inline constexpr int kRdpOrderMin = 2;
inline constexpr int kRdpOrderMax = 512;

struct DpConfig {
  double clip_norm = 1.0;        // L2 clipping threshold C
  double noise_multiplier = 0.0;  // n_E; 0 leaves gradients unaltered
  double delta = 1e-5;
  int batch_size = 32;
  int epochs = 100;

  void validate() const;
};

struct PrivacySpent {
  double epsilon = 0.0;
  double delta = 0.0;
  double optimal_order = 0.0;
};

// Cumulative Renyi DP over the order grid after a number of steps.
struct RdpCurve {
  std::vector<int> orders;
  std::vector<double> rdp_values;
};

// Scales one example's gradient set to g / max(1, |g|_2 / clip_norm); the
// norm spans all tensors of the example.
void clip_gradients(NamedTensorList& grads, double clip_norm);
void clip_per_example(std::vector<NamedTensorList>& per_example, double clip_norm);

// (sum of clipped gradients + N(0, (noise_multiplier * clip_norm)^2 I)) /
// batch_size.  Noise is drawn once per parameter tensor; nothing is drawn
// when noise_multiplier is 0 so that case is exactly the clipped mean.
NamedTensorList dp_aggregate(const std::vector<NamedTensorList>& clipped, double clip_norm,
                             double noise_multiplier, int batch_size, Rng& rng);

// Per-step Renyi DP of the subsampled Gaussian mechanism at integer order
// alpha >= 2, computed in log space:
//   (1/(alpha-1)) * ln( sum_k binom(alpha,k) (1-q)^(alpha-k) q^k
//                       exp(k(k-1)/(2 sigma^2)) ).
// Throws NumericalOverflow if the accumulation leaves double range.
double rdp_sgm(double sampling_rate, double sigma, int order);

RdpCurve rdp_curve(double sampling_rate, double sigma, long long steps);

// epsilon = min over the order grid of steps * rdp(alpha) + ln(1/delta) /
// (alpha - 1); reports the minimizing order.
PrivacySpent epsilon_from_steps(double sampling_rate, double sigma, long long steps,
                                double delta);

// Pre-training estimator: q = batch/n, steps = epochs * ceil(n / batch).
PrivacySpent compute_epsilon(std::int64_t dataset_size, int batch_size, int epochs,
                             double noise_multiplier, double delta);

struct DpTrainResult {
  Model model;
  PrivacySpent privacy;
  TrainHistory history;
  long long executed_steps = 0;
};

// DP-SGD: the plain training loop with each batch gradient replaced by the
// clipped, noised mean.  The reported privacy reflects the steps actually
// executed (early stopping lowers epsilon).
DpTrainResult dp_train(const Model& initial, const TimeSeriesDataset& train_set,
                       const TimeSeriesDataset& val_set, const TrainConfig& config,
                       const DpConfig& dp);

}  // namespace privts
