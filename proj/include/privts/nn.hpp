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
#include <string>
#include <utility>
#include <vector>

#include "privts/rng.hpp"
#include "privts/tensor.hpp"

namespace privts {

enum class Architecture { kAlexNet1D, kLeNet1D, kFcn, kFdn, kLstm };

Architecture architecture_from_string(const std::string& name);
std::string architecture_to_string(Architecture arch);

// Declarative model description.  The realized layer stack is a pure
// function of this spec (plus the init seed).
struct ModelSpec {
  Architecture architecture = Architecture::kAlexNet1D;
  std::int64_t input_channels = 1;
  std::int64_t input_length = 1;
  std::int64_t num_classes = 2;
};

// A single-example layer.  Activations flow as (channels x length) blocks in
// row-major order; dense layers treat the block as a flat vector.  Layers own
// their forward caches, so a model instance must not be shared across threads.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual std::string name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  // rng is consulted only by stochastic layers in training mode.
  virtual void forward(const double* in, double* out, bool training, Rng* rng) = 0;
  // Uses the cache left by the immediately preceding forward call.
  // Accumulates into parameter gradients; writes the input gradient to din.
  virtual void backward(const double* in, const double* dout, double* din) = 0;

  virtual std::vector<Parameter>* params() { return nullptr; }

  std::int64_t in_channels = 0;
  std::int64_t in_len = 0;
  std::int64_t out_channels = 0;
  std::int64_t out_len = 0;
  std::int64_t in_size() const { return in_channels * in_len; }
  std::int64_t out_size() const { return out_channels * out_len; }

 protected:
  std::string name_;
};

// Realized model: layer stack plus parameters.  Value semantics via clone().
class Model {
 public:
  Model() = default;
  Model(const Model& other) { *this = other.clone(); }
  Model& operator=(const Model& other) {
    if (this != &other) *this = other.clone();
    return *this;
  }
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

  // Runs one example through the stack; input is (channels x length)
  // row-major, output buffer receives num_classes logits.
  void forward_one(const double* in, double* logits, bool training, Rng* rng);
  // Backward for the example of the immediately preceding forward_one call.
  // dlogits is the gradient at the logits; parameter gradients accumulate.
  void backward_one(const double* dlogits);

  // Forward + softmax cross-entropy backward for one example; parameter
  // gradients accumulate.  Returns the example loss; *pred receives the
  // argmax class when non-null.
  double train_example(const double* in, int label, bool training, Rng* rng, int* pred = nullptr);

  void zero_grads();
  // value -= lr * grad for every parameter entry.
  void apply_sgd(double learning_rate);

  // Deterministic (name, tensor) views over all parameters.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  NamedTensorList export_parameters() const;
  NamedTensorList export_gradients() const;
  void import_parameters(const NamedTensorList& params);

  Model clone() const;

  std::int64_t num_parameters() const;

 private:
  friend Model build_model(const ModelSpec& spec, std::uint64_t seed);

  ModelSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
  // Activation and gradient buffers, one per layer boundary.
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> grads_;
};

// Builds a model with deterministic fan-in-scaled uniform initialization.
// Convolution or pooling layers whose output length would drop below one
// positions are skipped, so every input length down to 1 yields a legal
// stack.  Throws UnsupportedShape for invalid specs.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

// Inference-mode batch forward: batch (B x channels x length) -> logits
// (B x num_classes).  Throws ShapeMismatch on a wrong batch shape.
Tensor forward(Model& model, const Tensor& batch);

// Softmax cross-entropy over a batch, evaluated in inference mode (dropout
// off) so the result is a pure function of (model, batch, labels).
// Returns the mean loss and gradients shaped like the parameters.
std::pair<double, NamedTensorList> loss_and_grads(Model& model, const Tensor& batch,
                                                  const std::vector<int>& labels);

// One gradient set per example; element i equals loss_and_grads on the
// singleton batch {example i}.
std::vector<NamedTensorList> per_example_grads(Model& model, const Tensor& batch,
                                               const std::vector<int>& labels);

// Numerically stable softmax of one logit row.
std::vector<double> softmax(const std::vector<double>& logits);

// -log softmax(logits)[label] via logsumexp.
double cross_entropy(const std::vector<double>& logits, int label);

}  // namespace privts
