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
#include <memory>
#include <optional>
#include <vector>

#include "privts/data.hpp"
#include "privts/dp.hpp"
#include "privts/nn.hpp"
#include "privts/train.hpp"

namespace privts {

struct FederatedConfig {
  int num_clients = 2;        // N
  int clients_per_round = 2;  // M, sampled without replacement each round
  int rounds = 100;
  int local_epochs = 1;
  bool stratified = true;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class EnsembleVariant { kWeightedSoftmaxAveraging, kMajorityVote, kNaiveBayesCombination };

struct EnsembleScheme {
  EnsembleVariant variant = EnsembleVariant::kWeightedSoftmaxAveraging;
  // Weighted softmax only; empty means uniform.  Nonnegative, summing to 1.
  std::vector<double> weights;
  // Naive Bayes only: pooled training class frequencies.
  std::vector<double> priors;
};

EnsembleVariant ensemble_variant_from_string(const std::string& name);
std::string ensemble_variant_to_string(EnsembleVariant variant);

// A client's private state.  Raw samples are reachable only through data();
// the server-side code uses sample_count() metadata for weighting.  Tests
// subclass this to log accesses.
class ClientState {
 public:
  ClientState(int client_id, TimeSeriesDataset silo)
      : client_id_(client_id), silo_(std::move(silo)) {}
  virtual ~ClientState() = default;

  int client_id() const { return client_id_; }
  std::int64_t sample_count() const { return silo_.count(); }
  virtual const TimeSeriesDataset& data() const { return silo_; }

 private:
  int client_id_;
  TimeSeriesDataset silo_;
};

std::vector<std::unique_ptr<ClientState>> make_clients(const SiloPartition& silos);

// Element-wise weighted mean of parameter sets with weights count_i / total.
NamedTensorList aggregate_weights(const std::vector<NamedTensorList>& params,
                                  const std::vector<std::int64_t>& counts);

struct FedAvgResult {
  Model model;
  TrainHistory history;
};

// FedAVG: each round samples clients_per_round clients, trains local_epochs
// locally from the current global model, and redistributes the
// sample-count-weighted average.  Early stopping and LR halving run on the
// server's validation set with the same plateau logic as centralized
// training, so N = M = 1 with local_epochs = 1 reproduces it bit for bit.
FedAvgResult run_fedavg(std::vector<std::unique_ptr<ClientState>>& clients,
                        const ModelSpec& spec, const TimeSeriesDataset& val_set,
                        const TrainConfig& config, const FederatedConfig& fed);
FedAvgResult run_fedavg(const ModelSpec& spec, const SiloPartition& silos,
                        const TimeSeriesDataset& val_set, const TrainConfig& config,
                        const FederatedConfig& fed);

// Independent per-client training (DP-SGD when dp is set); no parameter
// exchange.  Client i trains with seed config.seed + i and a local 10%
// stratified validation split, so a single client without DP equals the
// centralized baseline exactly.
std::vector<Model> train_ensemble(std::vector<std::unique_ptr<ClientState>>& clients,
                                  const ModelSpec& spec, const TrainConfig& config,
                                  const std::optional<DpConfig>& dp);
std::vector<Model> train_ensemble(const ModelSpec& spec, const SiloPartition& silos,
                                  const TrainConfig& config, const std::optional<DpConfig>& dp);

// Combines member predictions on a batch.  Ties in majority voting resolve
// to the lowest class index; Naive Bayes clamps probabilities to
// [1e-12, 1] and divides out the shared prior (K-1) times.
std::vector<int> ensemble_predict(std::vector<Model>& models, const EnsembleScheme& scheme,
                                  const Tensor& batch);

}  // namespace privts
