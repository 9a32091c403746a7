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

#include <vector>

#include "privts/errors.hpp"

namespace privts {

// Support-weighted mean of per-class F1 scores.  Classes with zero support
// are excluded from the weighted sum; a class with prec + rec = 0 scores 0.
inline double weighted_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          int num_classes) {
  if (y_true.size() != y_pred.size())
    throw LengthMismatch("weighted_f1: label vectors differ in length");
  if (y_true.empty()) throw LengthMismatch("weighted_f1: empty input");
  std::vector<double> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  std::vector<double> support(num_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw LabelOutOfRange("weighted_f1: label outside [0, num_classes)");
    support[t] += 1;
    if (t == p) {
      tp[t] += 1;
    } else {
      fp[p] += 1;
      fn[t] += 1;
    }
  }
  double total = static_cast<double>(y_true.size());
  double acc = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    if (support[c] == 0) continue;
    const double prec_den = tp[c] + fp[c];
    const double rec_den = tp[c] + fn[c];
    const double prec = prec_den > 0 ? tp[c] / prec_den : 0.0;
    const double rec = rec_den > 0 ? tp[c] / rec_den : 0.0;
    const double f1 = (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    acc += (support[c] / total) * f1;
  }
  return acc;
}

// Per-class frequency of the labels; used as class priors.
inline std::vector<double> class_frequencies(const std::vector<int>& labels, int num_classes) {
  std::vector<double> freq(num_classes, 0.0);
  for (int l : labels) freq[static_cast<std::size_t>(l)] += 1.0;
  for (double& f : freq) f /= static_cast<double>(labels.size());
  return freq;
}

}  // namespace privts
