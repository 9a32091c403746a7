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

#include "privts/federated.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "privts/errors.hpp"
#include "privts/metrics.hpp"

namespace privts {

namespace {
constexpr std::uint64_t kSampleTag = 0x666564736d70ULL;  // "fedsmp"
constexpr double kValFraction = 0.1;
}  // namespace

void FederatedConfig::validate() const {
  if (num_clients < 1) throw InvalidConfig("num_clients must be >= 1");
  if (clients_per_round < 1 || clients_per_round > num_clients)
    throw InvalidConfig("need 1 <= clients_per_round <= num_clients");
  if (rounds < 1) throw InvalidConfig("rounds must be >= 1");
  if (local_epochs < 1) throw InvalidConfig("local_epochs must be >= 1");
}

EnsembleVariant ensemble_variant_from_string(const std::string& name) {
  if (name == "WeightedSoftmaxAveraging") return EnsembleVariant::kWeightedSoftmaxAveraging;
  if (name == "MajorityVote") return EnsembleVariant::kMajorityVote;
  if (name == "NaiveBayesCombination") return EnsembleVariant::kNaiveBayesCombination;
  throw InvalidConfig("unknown ensemble variant: " + name);
}

std::string ensemble_variant_to_string(EnsembleVariant variant) {
  switch (variant) {
    case EnsembleVariant::kWeightedSoftmaxAveraging: return "WeightedSoftmaxAveraging";
    case EnsembleVariant::kMajorityVote: return "MajorityVote";
    case EnsembleVariant::kNaiveBayesCombination: return "NaiveBayesCombination";
  }
  throw InvalidConfig("bad ensemble variant enum");
}

std::vector<std::unique_ptr<ClientState>> make_clients(const SiloPartition& silos) {
  std::vector<std::unique_ptr<ClientState>> clients;
  clients.reserve(silos.silos.size());
  for (std::size_t i = 0; i < silos.silos.size(); ++i)
    clients.push_back(std::make_unique<ClientState>(static_cast<int>(i), silos.silos[i]));
  return clients;
}

NamedTensorList aggregate_weights(const std::vector<NamedTensorList>& params,
                                  const std::vector<std::int64_t>& counts) {
  if (params.empty() || params.size() != counts.size())
    throw InvalidConfig("aggregate_weights needs one count per parameter set");
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c <= 0) throw InvalidConfig("sample counts must be positive");
    total += c;
  }
  NamedTensorList out = params.front();
  const double w0 = static_cast<double>(counts.front()) / static_cast<double>(total);
  for (auto& t : out) {
    for (double& v : t.value.data) v *= w0;
  }
  for (std::size_t p = 1; p < params.size(); ++p) {
    if (params[p].size() != out.size())
      throw ShapeMismatch("parameter set " + std::to_string(p) + " has a different layout");
    const double w = static_cast<double>(counts[p]) / static_cast<double>(total);
    for (std::size_t t = 0; t < out.size(); ++t) {
      if (!params[p][t].value.same_shape(out[t].value))
        throw ShapeMismatch("parameter tensor shape mismatch at " + out[t].name);
      const auto& src = params[p][t].value.data;
      auto& dst = out[t].value.data;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
    }
  }
  return out;
}

FedAvgResult run_fedavg(std::vector<std::unique_ptr<ClientState>>& clients,
                        const ModelSpec& spec, const TimeSeriesDataset& val_set,
                        const TrainConfig& config, const FederatedConfig& fed) {
  config.validate();
  fed.validate();
  if (clients.empty()) throw EmptyDataset("no clients");
  if (static_cast<int>(clients.size()) != fed.num_clients)
    throw InvalidConfig("client list size does not match num_clients");

  Model global = build_model(spec, config.seed);
  PlateauScheduler scheduler(config);
  TrainHistory history;

  for (int round = 0; round < fed.rounds; ++round) {
    // Sample contributing clients without replacement.
    std::vector<int> ids(static_cast<std::size_t>(fed.num_clients));
    std::iota(ids.begin(), ids.end(), 0);
    Rng sampler(mix64(fed.seed, kSampleTag, static_cast<std::uint64_t>(round)));
    sampler.shuffle(ids);
    ids.resize(static_cast<std::size_t>(fed.clients_per_round));
    std::sort(ids.begin(), ids.end());

    std::vector<NamedTensorList> contributions;
    std::vector<std::int64_t> counts;
    for (int id : ids) {
      ClientState& client = *clients[static_cast<std::size_t>(id)];
      if (client.sample_count() == 0) {
        std::cerr << "warning: skipping client " << id << " with empty silo\n";
        continue;
      }
      Model local = global.clone();
      for (int j = 0; j < fed.local_epochs; ++j) {
        const std::int64_t epoch_index =
            static_cast<std::int64_t>(round) * fed.local_epochs + j;
        run_epoch_sgd(local, client.data(), config.batch_size, scheduler.learning_rate(),
                      config.seed, epoch_index);
      }
      contributions.push_back(local.export_parameters());
      counts.push_back(client.sample_count());
    }
    if (contributions.empty()) throw EmptyDataset("all sampled clients had empty silos");

    global.import_parameters(aggregate_weights(contributions, counts));
    const auto [val_loss, val_f1] = evaluate(global, val_set);
    history.push_back({round, 0.0, 0.0, val_loss, val_f1, scheduler.learning_rate()});
    if (!scheduler.observe(val_loss, global)) break;
  }
  return {scheduler.best_model().clone(), std::move(history)};
}

FedAvgResult run_fedavg(const ModelSpec& spec, const SiloPartition& silos,
                        const TimeSeriesDataset& val_set, const TrainConfig& config,
                        const FederatedConfig& fed) {
  auto clients = make_clients(silos);
  return run_fedavg(clients, spec, val_set, config, fed);
}

std::vector<Model> train_ensemble(std::vector<std::unique_ptr<ClientState>>& clients,
                                  const ModelSpec& spec, const TrainConfig& config,
                                  const std::optional<DpConfig>& dp) {
  config.validate();
  if (clients.empty()) throw EmptyDataset("no clients");
  std::vector<Model> models;
  models.reserve(clients.size());
  for (auto& client : clients) {
    if (client->sample_count() == 0) {
      std::cerr << "warning: skipping client " << client->client_id() << " with empty silo\n";
      continue;
    }
    TrainConfig local_config = config;
    local_config.seed = config.seed + static_cast<std::uint64_t>(client->client_id());
    const auto [tr, val] = split_train_val(client->data(), kValFraction, local_config.seed);
    Model initial = build_model(spec, local_config.seed);
    if (dp.has_value()) {
      models.push_back(dp_train(initial, tr, val, local_config, *dp).model);
    } else {
      models.push_back(train(initial, tr, val, local_config).first);
    }
  }
  if (models.empty()) throw EmptyDataset("all clients had empty silos");
  return models;
}

std::vector<Model> train_ensemble(const ModelSpec& spec, const SiloPartition& silos,
                                  const TrainConfig& config, const std::optional<DpConfig>& dp) {
  auto clients = make_clients(silos);
  return train_ensemble(clients, spec, config, dp);
}

std::vector<int> ensemble_predict(std::vector<Model>& models, const EnsembleScheme& scheme,
                                  const Tensor& batch) {
  if (models.empty()) throw InvalidConfig("ensemble_predict needs at least one model");
  const std::int64_t classes = models.front().spec().num_classes;
  for (const Model& m : models) {
    if (m.spec().num_classes != classes)
      throw ClassCountMismatch("ensemble members disagree on num_classes");
  }
  const std::size_t k = models.size();

  std::vector<double> weights = scheme.weights;
  if (scheme.variant == EnsembleVariant::kWeightedSoftmaxAveraging) {
    if (weights.empty()) weights.assign(k, 1.0 / static_cast<double>(k));
    if (weights.size() != k) throw InvalidConfig("one weight per ensemble member required");
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw InvalidConfig("ensemble weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("ensemble weights must sum to 1");
  }
  if (scheme.variant == EnsembleVariant::kNaiveBayesCombination &&
      static_cast<std::int64_t>(scheme.priors.size()) != classes)
    throw InvalidConfig("Naive Bayes combination needs one prior per class");

  const std::int64_t n = batch.shape[0];
  // Member probabilities, kept per model for the voting rules.
  std::vector<Tensor> probs;
  probs.reserve(k);
  for (Model& m : models) {
    Tensor logits = forward(m, batch);
    std::vector<double> row(static_cast<std::size_t>(classes));
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t c = 0; c < classes; ++c) row[static_cast<std::size_t>(c)] = logits.at(i, c);
      const std::vector<double> p = softmax(row);
      for (std::int64_t c = 0; c < classes; ++c) logits.at(i, c) = p[static_cast<std::size_t>(c)];
    }
    probs.push_back(std::move(logits));
  }

  std::vector<int> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<double> score(static_cast<std::size_t>(classes), 0.0);
    switch (scheme.variant) {
      case EnsembleVariant::kWeightedSoftmaxAveraging:
        for (std::size_t m = 0; m < k; ++m)
          for (std::int64_t c = 0; c < classes; ++c)
            score[static_cast<std::size_t>(c)] += weights[m] * probs[m].at(i, c);
        break;
      case EnsembleVariant::kMajorityVote:
        for (std::size_t m = 0; m < k; ++m) {
          std::int64_t best = 0;
          for (std::int64_t c = 1; c < classes; ++c)
            if (probs[m].at(i, c) > probs[m].at(i, best)) best = c;
          score[static_cast<std::size_t>(best)] += 1.0;
        }
        break;
      case EnsembleVariant::kNaiveBayesCombination:
        for (std::int64_t c = 0; c < classes; ++c) {
          double log_score = 0.0;
          for (std::size_t m = 0; m < k; ++m) {
            const double p = std::clamp(probs[m].at(i, c), 1e-12, 1.0);
            log_score += std::log(p);
          }
          const double prior = std::clamp(scheme.priors[static_cast<std::size_t>(c)], 1e-12, 1.0);
          log_score -= static_cast<double>(k - 1) * std::log(prior);
          score[static_cast<std::size_t>(c)] = log_score;
        }
        break;
    }
    // Ties resolve to the lowest class index.
    std::int64_t best = 0;
    for (std::int64_t c = 1; c < classes; ++c)
      if (score[static_cast<std::size_t>(c)] > score[static_cast<std::size_t>(best)]) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace privts
