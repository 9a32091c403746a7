#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "privts/errors.hpp"
#include "privts/nn.hpp"
#include "support/test_util.hpp"

using namespace privts;
using namespace privts::testing;

namespace {

Tensor random_batch(std::int64_t n, std::int64_t c, std::int64_t l, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, c, l});
  for (double& v : t.data) v = rng.normal();
  return t;
}

std::vector<int> random_labels(std::int64_t n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(classes)));
  return labels;
}

// Checks sampled parameter entries of every layer in the model against the
// central finite-difference oracle at h = 1e-5.
void check_model_gradients(const ModelSpec& spec, std::uint64_t seed,
                           std::int64_t entries_per_tensor = 5) {
  Model model = build_model(spec, seed);
  const Tensor batch = random_batch(2, spec.input_channels, spec.input_length, seed + 1);
  const std::vector<int> labels = random_labels(2, static_cast<int>(spec.num_classes), seed + 2);

  const auto [loss0, grads] = loss_and_grads(model, batch, labels);
  (void)loss0;
  auto loss_fn = [&]() { return loss_and_grads(model, batch, labels).first; };

  auto params = model.parameters();
  REQUIRE(params.size() == grads.size());
  Rng pick(seed + 3);
  for (std::size_t t = 0; t < params.size(); ++t) {
    const std::int64_t n = params[t]->value.numel();
    std::set<std::int64_t> idxs = {0, n - 1};
    while (static_cast<std::int64_t>(idxs.size()) < std::min<std::int64_t>(entries_per_tensor, n))
      idxs.insert(static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(n))));
    for (std::int64_t idx : idxs) {
      const double analytic = grads[t].value.at(idx);
      const double fd = finite_difference(*params[t], idx, loss_fn, 1e-5);
      if (std::fabs(fd) < 1e-7 && std::fabs(analytic) < 1e-7) continue;
      INFO("tensor ", grads[t].name, " entry ", idx, " analytic ", analytic, " fd ", fd);
      CHECK(rel_err(analytic, fd) < 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("build_model shape contracts") {
  // ECG5000-like dims.
  Model alex = build_model({Architecture::kAlexNet1D, 1, 140, 5}, 7);
  Tensor logits = forward(alex, random_batch(3, 1, 140, 1));
  CHECK(logits.shape == std::vector<std::int64_t>{3, 5});

  // Dense-only model: first dense layer consumes the raw 46 inputs.
  Model fdn = build_model({Architecture::kFdn, 1, 46, 24}, 1);
  bool found_first_dense = false;
  for (const auto& layer : fdn.layers()) {
    if (layer->kind() == "dense") {
      CHECK(layer->in_size() == 46);
      found_first_dense = true;
      break;
    }
    CHECK(layer->kind() == "flatten");
  }
  CHECK(found_first_dense);
  CHECK(forward(fdn, random_batch(2, 1, 46, 2)).shape == std::vector<std::int64_t>{2, 24});

  // Two recurrent layers then the classifier head.
  Model lstm = build_model({Architecture::kLstm, 3, 182, 20}, 0);
  int recurrent = 0;
  for (const auto& layer : lstm.layers())
    if (layer->kind() == "bilstm") ++recurrent;
  CHECK(recurrent == 2);
  CHECK(forward(lstm, random_batch(2, 3, 182, 3)).shape == std::vector<std::int64_t>{2, 20});
}

TEST_CASE("short series skip conv and pool layers deterministically") {
  // Length 24 survives the AlexNet strides only via the skip rule.
  Model alex = build_model({Architecture::kAlexNet1D, 1, 24, 10}, 3);
  CHECK(forward(alex, random_batch(1, 1, 24, 4)).shape == std::vector<std::int64_t>{1, 10});
  // Length 3 forces everything but the dense tail out.
  Model tiny = build_model({Architecture::kAlexNet1D, 1, 3, 2}, 3);
  CHECK(forward(tiny, random_batch(1, 1, 3, 5)).shape == std::vector<std::int64_t>{1, 2});
  CHECK_THROWS_AS(build_model({Architecture::kAlexNet1D, 1, 140, 1}, 0), UnsupportedShape);
  CHECK_THROWS_AS(build_model({Architecture::kAlexNet1D, 0, 140, 5}, 0), UnsupportedShape);
}

TEST_CASE("two models from equal spec and seed are bit-identical") {
  const ModelSpec spec{Architecture::kAlexNet1D, 1, 64, 4};
  Model a = build_model(spec, 42);
  Model b = build_model(spec, 42);
  const auto pa = a.export_parameters();
  const auto pb = b.export_parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value.data == pb[i].value.data);
  Model c = build_model(spec, 43);
  CHECK(c.export_parameters()[0].value.data != pa[0].value.data);
}

TEST_CASE("zero classifier head yields all-zero logits") {
  Model model = build_model({Architecture::kFdn, 2, 10, 3}, 5);
  auto params = model.parameters();
  // Final dense pair is the classifier head.
  params[params.size() - 2]->value.fill(0.0);
  params[params.size() - 1]->value.fill(0.0);
  Tensor logits = forward(model, random_batch(4, 2, 10, 9));
  for (double v : logits.data) CHECK(v == 0.0);
}

TEST_CASE("identical rows give identical logits and batches are permutation-equivariant") {
  Model model = build_model({Architecture::kLeNet1D, 1, 32, 3}, 11);
  Tensor one = random_batch(1, 1, 32, 13);
  Tensor rep({4, 1, 32});
  for (int i = 0; i < 4; ++i)
    std::copy(one.data.begin(), one.data.end(), rep.data.begin() + i * 32);
  Tensor logits = forward(model, rep);
  for (int i = 1; i < 4; ++i)
    for (int c = 0; c < 3; ++c) CHECK(logits.at(i, c) == logits.at(0, c));

  Tensor batch = random_batch(5, 1, 32, 17);
  Tensor logits_a = forward(model, batch);
  // Reverse the batch; logits must follow the permutation exactly.
  Tensor reversed({5, 1, 32});
  for (int i = 0; i < 5; ++i)
    std::copy(batch.data.begin() + i * 32, batch.data.begin() + (i + 1) * 32,
              reversed.data.begin() + (4 - i) * 32);
  Tensor logits_b = forward(model, reversed);
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < 3; ++c) CHECK(logits_a.at(i, c) == logits_b.at(4 - i, c));
}

TEST_CASE("dense stack matches the naive matrix-multiply oracle") {
  const ModelSpec spec{Architecture::kFdn, 1, 20, 4};
  Model model = build_model(spec, 21);
  Tensor batch = random_batch(3, 1, 20, 22);
  Tensor logits = forward(model, batch);

  const auto params = model.export_parameters();
  REQUIRE(params.size() == 6);  // three dense layers
  for (int i = 0; i < 3; ++i) {
    std::vector<double> x(batch.data.begin() + i * 20, batch.data.begin() + (i + 1) * 20);
    std::vector<double> h1 = naive_dense(params[0].value, params[1].value, x);
    for (double& v : h1) v = std::max(v, 0.0);
    std::vector<double> h2 = naive_dense(params[2].value, params[3].value, h1);
    for (double& v : h2) v = std::max(v, 0.0);
    std::vector<double> out = naive_dense(params[4].value, params[5].value, h2);
    for (int c = 0; c < 4; ++c) CHECK(std::fabs(out[static_cast<std::size_t>(c)] -
                                                logits.at(i, c)) < 1e-12);
  }
}

TEST_CASE("softmax cross-entropy basics") {
  // Uniform logits: loss = ln(C).
  std::vector<double> uniform(5, 0.7);
  CHECK(cross_entropy(uniform, 2) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(cross_entropy(uniform, 2) == doctest::Approx(1.6094).epsilon(1e-4));

  // A huge margin drives the loss to zero.
  std::vector<double> peaked = {40.0, 0.0, 0.0};
  CHECK(cross_entropy(peaked, 0) < 1e-12);
  CHECK(cross_entropy(peaked, 0) >= 0.0);

  // Softmax rows sum to one.
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> logits(7);
    for (double& v : logits) v = rng.normal(0, 5);
    const auto p = softmax(logits);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::fabs(sum - 1.0) < 1e-12);
    for (int l = 0; l < 7; ++l) CHECK(cross_entropy(logits, l) >= 0.0);
  }
}

TEST_CASE("gradients match central finite differences for every layer type") {
  // AlexNet1D: conv, relu, maxpool, flatten, dense, dropout (inference mode).
  check_model_gradients({Architecture::kAlexNet1D, 1, 48, 3}, 101);
  // LeNet1D: stride-1 convs and width-2 pools.
  check_model_gradients({Architecture::kLeNet1D, 2, 24, 3}, 102);
  // FCN: global average pooling.
  check_model_gradients({Architecture::kFcn, 1, 48, 4}, 103);
  // FDN: dense-only.
  check_model_gradients({Architecture::kFdn, 1, 16, 3}, 104);
  // LSTM: both recurrent layers.
  check_model_gradients({Architecture::kLstm, 2, 6, 2}, 105, 4);
}

TEST_CASE("training-mode dropout gradient matches finite differences under a fixed mask") {
  const ModelSpec spec{Architecture::kAlexNet1D, 1, 48, 3};
  Model model = build_model(spec, 55);
  const Tensor batch = random_batch(1, 1, 48, 56);

  // Fixed rng seed fixes the dropout mask, making the training-mode loss a
  // deterministic function of the parameters.
  auto loss_fn = [&]() {
    Rng rng(999);
    model.zero_grads();
    return model.train_example(batch.data.data(), 1, /*training=*/true, &rng);
  };
  const double base = loss_fn();
  (void)base;
  auto grads = model.export_gradients();

  auto params = model.parameters();
  Rng pick(77);
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (int rep = 0; rep < 3; ++rep) {
      const std::int64_t idx =
          static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(params[t]->value.numel())));
      const double analytic = grads[t].value.at(idx);
      const double fd = finite_difference(*params[t], idx, loss_fn, 1e-5);
      if (std::fabs(fd) < 1e-7 && std::fabs(analytic) < 1e-7) continue;
      CHECK(rel_err(analytic, fd) < 1e-4);
    }
  }
}

TEST_CASE("per-example gradients decompose the batch gradient") {
  const ModelSpec spec{Architecture::kLeNet1D, 1, 28, 3};
  Model model = build_model(spec, 31);
  Tensor batch = random_batch(4, 1, 28, 32);
  std::vector<int> labels = {0, 2, 1, 1};

  auto per_example = per_example_grads(model, batch, labels);
  REQUIRE(per_example.size() == 4);

  // Element i equals loss_and_grads on the singleton batch {example i}.
  for (int i = 0; i < 4; ++i) {
    Tensor single({1, 1, 28});
    std::copy(batch.data.begin() + i * 28, batch.data.begin() + (i + 1) * 28,
              single.data.begin());
    const auto [loss, grads] = loss_and_grads(model, single, {labels[static_cast<std::size_t>(i)]});
    (void)loss;
    REQUIRE(grads.size() == per_example[static_cast<std::size_t>(i)].size());
    for (std::size_t t = 0; t < grads.size(); ++t)
      CHECK(grads[t].value.data == per_example[static_cast<std::size_t>(i)][t].value.data);
  }

  // Mean over examples equals the batch gradient within 1e-10.
  const auto [bloss, bgrads] = loss_and_grads(model, batch, labels);
  (void)bloss;
  for (std::size_t t = 0; t < bgrads.size(); ++t) {
    for (std::int64_t j = 0; j < bgrads[t].value.numel(); ++j) {
      double mean = 0.0;
      for (int i = 0; i < 4; ++i) mean += per_example[static_cast<std::size_t>(i)][t].value.at(j);
      mean /= 4.0;
      CHECK(std::fabs(mean - bgrads[t].value.at(j)) < 1e-10);
    }
  }

  // Batch of two identical examples yields two identical gradient sets.
  Tensor twin({2, 1, 28});
  std::copy(batch.data.begin(), batch.data.begin() + 28, twin.data.begin());
  std::copy(batch.data.begin(), batch.data.begin() + 28, twin.data.begin() + 28);
  auto twins = per_example_grads(model, twin, {1, 1});
  for (std::size_t t = 0; t < twins[0].size(); ++t)
    CHECK(twins[0][t].value.data == twins[1][t].value.data);
}

TEST_CASE("invalid labels and shapes are rejected") {
  Model model = build_model({Architecture::kFdn, 1, 8, 3}, 1);
  Tensor batch = random_batch(2, 1, 8, 2);
  CHECK_THROWS_AS(loss_and_grads(model, batch, {0, 3}), LabelOutOfRange);
  CHECK_THROWS_AS(loss_and_grads(model, batch, {0, -1}), LabelOutOfRange);
  Tensor bad = random_batch(2, 1, 9, 2);
  CHECK_THROWS_AS(forward(model, bad), ShapeMismatch);
  Tensor nan_batch = random_batch(1, 1, 8, 3);
  nan_batch.data[2] = std::nan("");
  CHECK_THROWS(forward(model, nan_batch));
}
