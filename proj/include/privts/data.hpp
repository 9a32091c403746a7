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
#include <string>
#include <utility>
#include <vector>

#include "privts/tensor.hpp"

namespace privts {

// Equal-length labelled time series: samples (count x channels x length)
// with labels mapped to contiguous ints in label_names order.
struct TimeSeriesDataset {
  Tensor samples;
  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::string name;
  std::string split_tag = "train";

  std::int64_t count() const { return samples.shape.empty() ? 0 : samples.shape[0]; }
  std::int64_t channels() const { return samples.shape.size() == 3 ? samples.shape[1] : 0; }
  std::int64_t length() const { return samples.shape.size() == 3 ? samples.shape[2] : 0; }
  int num_classes() const { return static_cast<int>(label_names.size()); }

  // Rows at the given positions, in the given order.
  TimeSeriesDataset subset(const std::vector<std::int64_t>& indices) const;
};

// One dataset slice per client.  Silos are disjoint and their union is the
// source training set.
struct SiloPartition {
  std::vector<TimeSeriesDataset> silos;
  bool stratified = false;
  std::uint64_t seed = 0;
};

// Parses the `.ts` text layout: optional '#' comment lines, '@'-prefixed
// header lines (@problemName, @univariate, @classLabel true <labels...>;
// unknown headers are ignored), '@data', then one record per line with
// ':'-separated channels of ','-separated values and the class label as the
// final ':' field.  Missing-value '?' tokens are rejected.
// Throws MalformedHeader, RaggedRecord, UnknownLabel.
TimeSeriesDataset parse_ts(const std::string& text);
TimeSeriesDataset parse_ts_file(const std::string& path);

// Canonical serialization; parse(serialize(d)) is the identity on
// (samples, labels, label_names).
std::string serialize_ts(const TimeSeriesDataset& dataset);

// Univariate CSV fallback, one record per line: label,v1,v2,...
// Labels are mapped in order of first appearance.
TimeSeriesDataset parse_csv(const std::string& text, const std::string& name);

// Loads <dir>/<name>/<name>_TRAIN.ts and <name>_TEST.ts.
std::pair<TimeSeriesDataset, TimeSeriesDataset> load_ts_pair(const std::string& dir,
                                                             const std::string& name);

// Per-channel population statistics.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

ChannelStats compute_channel_stats(const TimeSeriesDataset& train);

// (x - mean) / max(stddev, 1e-8) per channel.
void apply_znorm(const ChannelStats& stats, TimeSeriesDataset& dataset);

// Fits statistics on train only and applies the same affine transform to
// every dataset in others.
void znormalize(TimeSeriesDataset& train, const std::vector<TimeSeriesDataset*>& others);

// Stratified validation split.  Per-class counts follow largest-remainder
// apportionment of round(count * fraction); original row order is kept
// within each part.  Throws ClassTooSmall if any class has < 2 samples,
// InvalidConfig unless 0 < fraction < 0.5.
std::pair<TimeSeriesDataset, TimeSeriesDataset> split_train_val(const TimeSeriesDataset& train,
                                                                double fraction,
                                                                std::uint64_t seed);

// Partitions into near-equal silos (size difference <= 1), optionally
// stratified so per-silo class counts deviate by at most one sample from an
// even split.  Throws TooManyClients if n exceeds the sample count.
SiloPartition partition_silos(const TimeSeriesDataset& train, int num_silos, bool stratified,
                              std::uint64_t seed);

}  // namespace privts
