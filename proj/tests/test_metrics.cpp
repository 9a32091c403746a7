#include <vector>

#include "doctest.h"
#include "privts/metrics.hpp"
#include "privts/rng.hpp"

using namespace privts;

TEST_CASE("weighted F1 hand-computed cases") {
  // Perfect predictions.
  CHECK(weighted_f1({0, 1, 2, 1}, {0, 1, 2, 1}, 3) == doctest::Approx(1.0));

  // y_true=[0,0,1], y_pred=[0,1,1]: class F1s (2/3, 2/3), supports (2,1).
  CHECK(weighted_f1({0, 0, 1}, {0, 1, 1}, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(weighted_f1({0, 0, 1}, {0, 1, 1}, 2) == doctest::Approx(0.6667).epsilon(1e-3));

  // All predictions one class on a balanced 2-class truth:
  // class-0 F1 = 2/3 weighted 1/2, class-1 F1 = 0.
  CHECK(weighted_f1({0, 0, 1, 1}, {0, 0, 0, 0}, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("weighted F1 equals plain F1 for balanced binary data") {
  const std::vector<int> y_true = {0, 0, 1, 1, 0, 1, 0, 1};
  const std::vector<int> y_pred = {0, 1, 1, 1, 0, 0, 0, 1};
  // tp0=3 fp0=1 fn0=1; tp1=3 fp1=1 fn1=1: both classes F1 = 0.75.
  CHECK(weighted_f1(y_true, y_pred, 2) == doctest::Approx(0.75));
}

TEST_CASE("weighted F1 range and relabeling invariance") {
  Rng rng(4242);
  for (int rep = 0; rep < 200; ++rep) {
    const int classes = 2 + static_cast<int>(rng.uniform_int(5));
    const int n = 1 + static_cast<int>(rng.uniform_int(40));
    std::vector<int> y_true(static_cast<std::size_t>(n)), y_pred(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      y_true[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(classes));
      y_pred[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(classes));
    }
    const double f1 = weighted_f1(y_true, y_pred, classes);
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);

    // Apply the same class permutation to both vectors.
    std::vector<int> perm(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) perm[static_cast<std::size_t>(c)] = c;
    rng.shuffle(perm);
    std::vector<int> pt(y_true), pp(y_pred);
    for (auto& v : pt) v = perm[static_cast<std::size_t>(v)];
    for (auto& v : pp) v = perm[static_cast<std::size_t>(v)];
    CHECK(weighted_f1(pt, pp, classes) == doctest::Approx(f1).epsilon(1e-12));
  }
}

TEST_CASE("weighted F1 zero-support classes are excluded") {
  // Class 2 never occurs in y_true; predicting it only costs precision of
  // the classes that do occur.
  CHECK(weighted_f1({0, 0, 1, 1}, {0, 0, 1, 1}, 3) == doctest::Approx(1.0));
}

TEST_CASE("weighted F1 rejects malformed input") {
  CHECK_THROWS_AS(weighted_f1({0, 1}, {0}, 2), LengthMismatch);
  CHECK_THROWS_AS(weighted_f1({0, 2}, {0, 1}, 2), LabelOutOfRange);
}
