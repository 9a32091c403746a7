#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "privts/data.hpp"
#include "privts/errors.hpp"
#include "support/test_util.hpp"

using namespace privts;
using namespace privts::testing;

TEST_CASE("parse_ts univariate basics") {
  const std::string text =
      "@problemName toy\n@univariate true\n@classLabel true 0 1\n@data\n1.0,2.0,3.0:0\n";
  TimeSeriesDataset ds = parse_ts(text);
  CHECK(ds.count() == 1);
  CHECK(ds.channels() == 1);
  CHECK(ds.length() == 3);
  CHECK(ds.labels == std::vector<int>{0});
  CHECK(ds.name == "toy");
  CHECK(ds.samples.at(0, 0, 0) == 1.0);
  CHECK(ds.samples.at(0, 0, 2) == 3.0);
}

TEST_CASE("parse_ts multivariate record") {
  const std::string text =
      "@problemName toy2\n@univariate false\n@classLabel true A B\n@data\n1,2:3,4:A\n";
  TimeSeriesDataset ds = parse_ts(text);
  CHECK(ds.count() == 1);
  CHECK(ds.channels() == 2);
  CHECK(ds.length() == 2);
  CHECK(ds.labels == std::vector<int>{0});
  CHECK(ds.samples.at(0, 0, 0) == 1.0);
  CHECK(ds.samples.at(0, 0, 1) == 2.0);
  CHECK(ds.samples.at(0, 1, 0) == 3.0);
  CHECK(ds.samples.at(0, 1, 1) == 4.0);
}

TEST_CASE("parse_ts error classes") {
  // Ragged length.
  CHECK_THROWS_AS(parse_ts("@classLabel true 0\n@data\n1,2:0\n1,2,3:0\n"), RaggedRecord);
  // Ragged channel count.
  CHECK_THROWS_AS(parse_ts("@classLabel true 0\n@data\n1,2:3,4:0\n1,2:0\n"), RaggedRecord);
  // Unknown label.
  CHECK_THROWS_AS(parse_ts("@classLabel true A B\n@data\n1,2:C\n"), UnknownLabel);
  // Record before @data.
  CHECK_THROWS_AS(parse_ts("1,2:0\n"), MalformedHeader);
  // Missing @classLabel.
  CHECK_THROWS_AS(parse_ts("@problemName x\n@data\n1,2:0\n"), MalformedHeader);
  // @classLabel false unsupported.
  CHECK_THROWS_AS(parse_ts("@classLabel false\n@data\n1,2:0\n"), MalformedHeader);
  // Missing values rejected.
  CHECK_THROWS_AS(parse_ts("@classLabel true 0\n@data\n1,?:0\n"), RaggedRecord);
  // No data section at all.
  CHECK_THROWS_AS(parse_ts("@classLabel true 0\n"), MalformedHeader);
  // Univariate flag contradicted by a 2-channel record.
  CHECK_THROWS_AS(parse_ts("@univariate true\n@classLabel true 0\n@data\n1:2:0\n"), RaggedRecord);
  // Bad numeric token.
  CHECK_THROWS_AS(parse_ts("@classLabel true 0\n@data\n1,abc:0\n"), RaggedRecord);
}

TEST_CASE("parse_ts ignores comments and unknown headers") {
  const std::string text =
      "# generated fixture\n@problemName c\n@timeStamps false\n@seriesLength 2\n"
      "@univariate true\n@classLabel true x y\n@data\n# record comment\n1,2:y\n";
  TimeSeriesDataset ds = parse_ts(text);
  CHECK(ds.count() == 1);
  CHECK(ds.labels == std::vector<int>{1});
}

TEST_CASE("serialize/parse round-trip is the identity") {
  Rng rng(99);
  TimeSeriesDataset ds = make_blobs(10, 3, 7, 4, 123);
  // Include awkward values.
  ds.samples.at(0, 0, 0) = -0.0;
  ds.samples.at(0, 0, 1) = 1e-300;
  ds.samples.at(0, 0, 2) = 12345678.87654321;
  TimeSeriesDataset back = parse_ts(serialize_ts(ds));
  CHECK(back.samples.shape == ds.samples.shape);
  CHECK(back.samples.data == ds.samples.data);
  CHECK(back.labels == ds.labels);
  CHECK(back.label_names == ds.label_names);
}

TEST_CASE("csv fallback parses univariate rows") {
  TimeSeriesDataset ds = parse_csv("b,1,2,3\na,4,5,6\nb,7,8,9\n", "csvset");
  CHECK(ds.count() == 3);
  CHECK(ds.channels() == 1);
  CHECK(ds.length() == 3);
  CHECK(ds.label_names == std::vector<std::string>{"b", "a"});
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK_THROWS_AS(parse_csv("a,1,2\nb,1\n", "bad"), RaggedRecord);
}

TEST_CASE("znormalize uses train statistics only") {
  // Train channel values {1,2,3} -> {-1.2247, 0, 1.2247} (population std).
  TimeSeriesDataset train;
  train.label_names = {"a"};
  train.labels = {0, 0, 0};
  train.samples = Tensor({3, 1, 1}, {1.0, 2.0, 3.0});
  TimeSeriesDataset test = train;
  test.samples.data = {10.0, 20.0, 30.0};

  std::vector<TimeSeriesDataset*> others = {&test};
  znormalize(train, others);
  CHECK(train.samples.data[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(train.samples.data[1] == doctest::Approx(0.0));
  CHECK(train.samples.data[2] == doctest::Approx(1.2247).epsilon(1e-4));
  // Test rows get the train transform: (10-2)/0.8165 = 9.798.
  CHECK(test.samples.data[0] == doctest::Approx((10.0 - 2.0) / std::sqrt(2.0 / 3.0)).epsilon(1e-9));

  // Idempotence: normalizing an already-normalized set changes nothing.
  TimeSeriesDataset again = train;
  std::vector<TimeSeriesDataset*> none;
  znormalize(again, none);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::fabs(again.samples.data[i] - train.samples.data[i]) < 1e-12);

  // Constant channel: floored std maps everything to zero.
  TimeSeriesDataset flat;
  flat.label_names = {"a"};
  flat.labels = {0, 0};
  flat.samples = Tensor({2, 1, 2}, {5.0, 5.0, 5.0, 5.0});
  znormalize(flat, none);
  for (double v : flat.samples.data) CHECK(v == 0.0);
}

TEST_CASE("normalization statistics are independent of test data") {
  TimeSeriesDataset train = make_blobs(20, 2, 5, 2, 7);
  TimeSeriesDataset test = make_blobs(10, 2, 5, 2, 8);
  const ChannelStats before = compute_channel_stats(train);
  // Poison the test rows; train statistics must not move.
  for (double& v : test.samples.data) v = 1e9;
  const ChannelStats after = compute_channel_stats(train);
  CHECK(before.mean == after.mean);
  CHECK(before.stddev == after.stddev);
}

TEST_CASE("split_train_val stratification arithmetic") {
  // 10 samples, 5 per class, fraction 0.2 -> one validation row per class.
  TimeSeriesDataset ds = make_blobs(10, 1, 4, 2, 55);
  const auto [tr, val] = split_train_val(ds, 0.2, 3);
  CHECK(tr.count() == 8);
  CHECK(val.count() == 2);
  int val_per_class[2] = {0, 0};
  for (int l : val.labels) ++val_per_class[l];
  CHECK(val_per_class[0] == 1);
  CHECK(val_per_class[1] == 1);

  // Same seed reproduces the split exactly.
  const auto [tr2, val2] = split_train_val(ds, 0.2, 3);
  CHECK(tr2.samples.data == tr.samples.data);
  CHECK(val2.labels == val.labels);

  // 500 rows at fraction 0.1 -> 450/50.
  TimeSeriesDataset big = make_blobs(500, 1, 4, 5, 56);
  const auto [btr, bval] = split_train_val(big, 0.1, 4);
  CHECK(btr.count() == 450);
  CHECK(bval.count() == 50);

  CHECK_THROWS_AS(split_train_val(ds, 0.6, 1), InvalidConfig);
  TimeSeriesDataset tiny = make_blobs(3, 1, 4, 3, 57);  // one sample in a class
  CHECK_THROWS_AS(split_train_val(tiny, 0.2, 1), ClassTooSmall);
}

TEST_CASE("partition_silos is a true partition") {
  TimeSeriesDataset ds = make_blobs(37, 1, 3, 3, 77);

  // N=1 is the identity.
  SiloPartition one = partition_silos(ds, 1, false, 5);
  REQUIRE(one.silos.size() == 1);
  CHECK(one.silos[0].samples.data == ds.samples.data);
  CHECK(one.silos[0].labels == ds.labels);

  for (const bool stratified : {false, true}) {
    for (const int n : {2, 4, 5}) {
      SiloPartition part = partition_silos(ds, n, stratified, 99);
      // Disjointness and union coverage via multiset of rows (row values are
      // unique with probability 1 for the blob generator).
      std::multiset<std::vector<double>> seen;
      std::int64_t total = 0;
      std::int64_t min_size = ds.count(), max_size = 0;
      for (const auto& silo : part.silos) {
        total += silo.count();
        min_size = std::min(min_size, silo.count());
        max_size = std::max(max_size, silo.count());
        for (std::int64_t i = 0; i < silo.count(); ++i) {
          std::vector<double> row(silo.samples.data.begin() + i * 3,
                                  silo.samples.data.begin() + (i + 1) * 3);
          seen.insert(row);
        }
      }
      CHECK(total == ds.count());
      CHECK(max_size - min_size <= 1);
      std::multiset<std::vector<double>> expected;
      for (std::int64_t i = 0; i < ds.count(); ++i)
        expected.insert(std::vector<double>(ds.samples.data.begin() + i * 3,
                                            ds.samples.data.begin() + (i + 1) * 3));
      CHECK(seen == expected);

      if (stratified) {
        // Per-class counts deviate at most one from an even split.
        for (int c = 0; c < 3; ++c) {
          std::int64_t global = 0;
          for (int l : ds.labels) global += (l == c);
          for (const auto& silo : part.silos) {
            std::int64_t local = 0;
            for (int l : silo.labels) local += (l == c);
            const double even = static_cast<double>(global) / n;
            CHECK(std::fabs(static_cast<double>(local) - even) <= 1.0);
          }
        }
      }
    }
  }

  // Determinism under the seed.
  SiloPartition a = partition_silos(ds, 4, true, 1234);
  SiloPartition b = partition_silos(ds, 4, true, 1234);
  for (std::size_t s = 0; s < a.silos.size(); ++s)
    CHECK(a.silos[s].samples.data == b.silos[s].samples.data);

  CHECK_THROWS_AS(partition_silos(ds, 38, false, 0), TooManyClients);
}

TEST_CASE("stratified 8 samples over 2 silos gives 2 per class each") {
  TimeSeriesDataset ds = make_blobs(8, 1, 2, 2, 5);  // 4 per class
  SiloPartition part = partition_silos(ds, 2, true, 11);
  for (const auto& silo : part.silos) {
    CHECK(silo.count() == 4);
    int per_class[2] = {0, 0};
    for (int l : silo.labels) ++per_class[l];
    CHECK(per_class[0] == 2);
    CHECK(per_class[1] == 2);
  }
}
