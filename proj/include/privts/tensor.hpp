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

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "privts/errors.hpp"

namespace privts {

// Dense row-major tensor of 64-bit floats.  Carrier for all model math;
// shape is a list of positive dimensions and data length always equals the
// shape product.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(numel()), 0.0);
  }

  Tensor(std::vector<std::int64_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != numel()) {
      throw ShapeMismatch("tensor data length does not match shape product");
    }
  }

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
      if (d <= 0) throw ShapeMismatch("tensor dimensions must be positive");
      n *= d;
    }
    return n;
  }

  std::int64_t dim(std::size_t i) const { return shape.at(i); }

  double& at(std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  // 2-d and 3-d accessors for readability in tests.
  double& at(std::int64_t i, std::int64_t j) {
    return data[static_cast<std::size_t>(i * shape[1] + j)];
  }
  double at(std::int64_t i, std::int64_t j) const {
    return data[static_cast<std::size_t>(i * shape[1] + j)];
  }
  double& at(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  void fill(double v) { data.assign(data.size(), v); }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void require_finite(const std::string& where) const {
    if (!all_finite()) throw Error("non-finite value in " + where);
  }
};

inline std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

// Named parameter tensor with a gradient accumulator of the same shape.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v) : name(std::move(n)), value(v), grad(v.shape) {}

  void zero_grad() { grad.fill(0.0); }
};

// Named tensor list used for gradient snapshots and parameter exchange.
struct NamedTensor {
  std::string name;
  Tensor value;
};

using NamedTensorList = std::vector<NamedTensor>;

inline double l2_norm(const NamedTensorList& tensors) {
  double sq = 0.0;
  for (const auto& t : tensors) {
    for (double v : t.value.data) sq += v * v;
  }
  return std::sqrt(sq);
}

}  // namespace privts
