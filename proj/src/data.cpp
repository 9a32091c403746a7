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

#include "privts/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "privts/errors.hpp"
#include "privts/rng.hpp"

namespace privts {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

double parse_value(const std::string& token, std::int64_t line_no) {
  const std::string t = trim(token);
  if (t == "?")
    throw RaggedRecord("line " + std::to_string(line_no) +
                       ": missing values ('?') are not supported");
  double v = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw RaggedRecord("line " + std::to_string(line_no) + ": bad numeric value '" + t + "'");
  return v;
}

}  // namespace

TimeSeriesDataset TimeSeriesDataset::subset(const std::vector<std::int64_t>& indices) const {
  TimeSeriesDataset out;
  out.label_names = label_names;
  out.name = name;
  out.split_tag = split_tag;
  const std::int64_t ex = channels() * length();
  out.samples = Tensor({static_cast<std::int64_t>(indices.size()), channels(), length()});
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::int64_t src = indices[i];
    std::copy_n(samples.data.begin() + src * ex, ex,
                out.samples.data.begin() + static_cast<std::int64_t>(i) * ex);
    out.labels.push_back(labels[static_cast<std::size_t>(src)]);
  }
  return out;
}

TimeSeriesDataset parse_ts(const std::string& text) {
  TimeSeriesDataset ds;
  bool in_data = false;
  bool saw_class_label = false;
  bool declared_univariate = false;
  std::int64_t channels = -1;
  std::int64_t length = -1;
  std::vector<double> values;
  std::int64_t line_no = 0;

  std::istringstream stream(text);
  std::string raw;
  while (std::getline(stream, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    if (!in_data) {
      if (line[0] != '@')
        throw MalformedHeader("line " + std::to_string(line_no) +
                              ": record before @data section");
      std::istringstream header(line);
      std::string key;
      header >> key;
      if (key == "@data") {
        if (!saw_class_label)
          throw MalformedHeader("@data reached without a @classLabel declaration");
        in_data = true;
      } else if (key == "@problemName") {
        header >> ds.name;
      } else if (key == "@univariate") {
        std::string flag;
        header >> flag;
        declared_univariate = (flag == "true");
      } else if (key == "@classLabel") {
        std::string flag;
        header >> flag;
        if (flag != "true")
          throw MalformedHeader("@classLabel false: class labels are required");
        std::string label;
        while (header >> label) ds.label_names.push_back(label);
        if (ds.label_names.empty())
          throw MalformedHeader("@classLabel true lists no labels");
        saw_class_label = true;
      }
      // Other @ headers (@dimension, @seriesLength, ...) are ignored.
      continue;
    }

    // Record: channel:channel:...:label
    std::vector<std::string> fields = split(line, ':');
    if (fields.size() < 2)
      throw RaggedRecord("line " + std::to_string(line_no) + ": record has no label field");
    const std::string label_token = trim(fields.back());
    fields.pop_back();

    const std::int64_t rec_channels = static_cast<std::int64_t>(fields.size());
    if (channels == -1) {
      channels = rec_channels;
      if (declared_univariate && channels != 1)
        throw RaggedRecord("line " + std::to_string(line_no) +
                           ": @univariate true but record has " + std::to_string(channels) +
                           " channels");
    } else if (rec_channels != channels) {
      throw RaggedRecord("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(channels) + " channels, got " +
                         std::to_string(rec_channels));
    }

    for (const std::string& channel : fields) {
      std::vector<std::string> tokens = split(channel, ',');
      if (length == -1) length = static_cast<std::int64_t>(tokens.size());
      if (static_cast<std::int64_t>(tokens.size()) != length)
        throw RaggedRecord("line " + std::to_string(line_no) + ": expected length " +
                           std::to_string(length) + ", got " + std::to_string(tokens.size()));
      for (const std::string& token : tokens) values.push_back(parse_value(token, line_no));
    }

    const auto it = std::find(ds.label_names.begin(), ds.label_names.end(), label_token);
    if (it == ds.label_names.end())
      throw UnknownLabel("line " + std::to_string(line_no) + ": label '" + label_token +
                         "' not declared in @classLabel");
    ds.labels.push_back(static_cast<int>(it - ds.label_names.begin()));
  }

  if (!in_data) throw MalformedHeader("no @data section");
  const std::int64_t count = static_cast<std::int64_t>(ds.labels.size());
  if (count == 0) throw MalformedHeader("@data section contains no records");
  ds.samples = Tensor({count, channels, length}, std::move(values));
  return ds;
}

TimeSeriesDataset parse_ts_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  TimeSeriesDataset ds = parse_ts(buf.str());
  return ds;
}

std::string serialize_ts(const TimeSeriesDataset& dataset) {
  std::string out;
  out += "@problemName " + (dataset.name.empty() ? std::string("unnamed") : dataset.name) + "\n";
  out += std::string("@univariate ") + (dataset.channels() == 1 ? "true" : "false") + "\n";
  out += "@classLabel true";
  for (const auto& l : dataset.label_names) out += " " + l;
  out += "\n@data\n";
  char buf[64];
  const std::int64_t c = dataset.channels();
  const std::int64_t l = dataset.length();
  for (std::int64_t i = 0; i < dataset.count(); ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      for (std::int64_t t = 0; t < l; ++t) {
        // %.17g preserves doubles exactly across a parse round-trip.
        std::snprintf(buf, sizeof(buf), "%.17g", dataset.samples.at(i, ch, t));
        out += buf;
        if (t + 1 < l) out += ",";
      }
      out += ":";
    }
    out += dataset.label_names[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])];
    out += "\n";
  }
  return out;
}

TimeSeriesDataset parse_csv(const std::string& text, const std::string& name) {
  TimeSeriesDataset ds;
  ds.name = name;
  std::istringstream stream(text);
  std::string raw;
  std::int64_t length = -1;
  std::int64_t line_no = 0;
  std::vector<double> values;
  while (std::getline(stream, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> tokens = split(line, ',');
    if (tokens.size() < 2)
      throw RaggedRecord("line " + std::to_string(line_no) + ": need label and values");
    const std::string label = trim(tokens[0]);
    if (length == -1) length = static_cast<std::int64_t>(tokens.size()) - 1;
    if (static_cast<std::int64_t>(tokens.size()) - 1 != length)
      throw RaggedRecord("line " + std::to_string(line_no) + ": inconsistent record length");
    auto it = std::find(ds.label_names.begin(), ds.label_names.end(), label);
    if (it == ds.label_names.end()) {
      ds.label_names.push_back(label);
      it = ds.label_names.end() - 1;
    }
    ds.labels.push_back(static_cast<int>(it - ds.label_names.begin()));
    for (std::size_t i = 1; i < tokens.size(); ++i)
      values.push_back(parse_value(tokens[i], line_no));
  }
  if (ds.labels.empty()) throw MalformedHeader("empty CSV input");
  ds.samples =
      Tensor({static_cast<std::int64_t>(ds.labels.size()), 1, length}, std::move(values));
  return ds;
}

std::pair<TimeSeriesDataset, TimeSeriesDataset> load_ts_pair(const std::string& dir,
                                                             const std::string& name) {
  TimeSeriesDataset train = parse_ts_file(dir + "/" + name + "/" + name + "_TRAIN.ts");
  TimeSeriesDataset test = parse_ts_file(dir + "/" + name + "/" + name + "_TEST.ts");
  train.name = name;
  test.name = name;
  train.split_tag = "train";
  test.split_tag = "test";
  if (train.label_names != test.label_names)
    throw UnknownLabel(name + ": train/test label sets differ");
  return {std::move(train), std::move(test)};
}

ChannelStats compute_channel_stats(const TimeSeriesDataset& train) {
  const std::int64_t c = train.channels();
  const std::int64_t l = train.length();
  const std::int64_t n = train.count();
  ChannelStats stats;
  stats.mean.assign(static_cast<std::size_t>(c), 0.0);
  stats.stddev.assign(static_cast<std::size_t>(c), 0.0);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t t = 0; t < l; ++t) sum += train.samples.at(i, ch, t);
    const double mean = sum / static_cast<double>(n * l);
    double sq = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t t = 0; t < l; ++t) {
        const double d = train.samples.at(i, ch, t) - mean;
        sq += d * d;
      }
    }
    stats.mean[static_cast<std::size_t>(ch)] = mean;
    stats.stddev[static_cast<std::size_t>(ch)] = std::sqrt(sq / static_cast<double>(n * l));
  }
  return stats;
}

void apply_znorm(const ChannelStats& stats, TimeSeriesDataset& dataset) {
  const std::int64_t c = dataset.channels();
  const std::int64_t l = dataset.length();
  if (static_cast<std::int64_t>(stats.mean.size()) != c)
    throw ShapeMismatch("normalization stats channel count mismatch");
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double mean = stats.mean[static_cast<std::size_t>(ch)];
    const double inv = 1.0 / std::max(stats.stddev[static_cast<std::size_t>(ch)], 1e-8);
    for (std::int64_t i = 0; i < dataset.count(); ++i)
      for (std::int64_t t = 0; t < l; ++t)
        dataset.samples.at(i, ch, t) = (dataset.samples.at(i, ch, t) - mean) * inv;
  }
}

void znormalize(TimeSeriesDataset& train, const std::vector<TimeSeriesDataset*>& others) {
  const ChannelStats stats = compute_channel_stats(train);
  apply_znorm(stats, train);
  for (TimeSeriesDataset* d : others) apply_znorm(stats, *d);
}

std::pair<TimeSeriesDataset, TimeSeriesDataset> split_train_val(const TimeSeriesDataset& train,
                                                                double fraction,
                                                                std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 0.5))
    throw InvalidConfig("validation fraction must lie in (0, 0.5)");
  const std::int64_t n = train.count();
  const int classes = train.num_classes();
  std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(classes));
  for (std::int64_t i = 0; i < n; ++i)
    by_class[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(i)])].push_back(i);
  for (int c = 0; c < classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < 2)
      throw ClassTooSmall("class " + train.label_names[static_cast<std::size_t>(c)] +
                          " has fewer than 2 samples");
  }

  // Largest-remainder apportionment of the validation quota.
  const std::int64_t val_total = std::llround(static_cast<double>(n) * fraction);
  std::vector<std::int64_t> take(static_cast<std::size_t>(classes), 0);
  std::vector<std::pair<double, int>> remainders;
  std::int64_t assigned = 0;
  for (int c = 0; c < classes; ++c) {
    const double quota =
        static_cast<double>(by_class[static_cast<std::size_t>(c)].size()) * fraction;
    take[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(quota);
    assigned += take[static_cast<std::size_t>(c)];
    remainders.push_back({quota - std::floor(quota), c});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < val_total && i < remainders.size(); ++i) {
    const int c = remainders[i].second;
    if (take[static_cast<std::size_t>(c)] <
        static_cast<std::int64_t>(by_class[static_cast<std::size_t>(c)].size()) - 1) {
      ++take[static_cast<std::size_t>(c)];
      ++assigned;
    }
  }

  Rng rng(mix64(seed, 0x73706c6974ULL));  // "split"
  std::vector<std::int64_t> val_idx, train_idx;
  for (int c = 0; c < classes; ++c) {
    auto idx = by_class[static_cast<std::size_t>(c)];
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (static_cast<std::int64_t>(i) < take[static_cast<std::size_t>(c)])
        val_idx.push_back(idx[i]);
      else
        train_idx.push_back(idx[i]);
    }
  }
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  TimeSeriesDataset tr = train.subset(train_idx);
  TimeSeriesDataset val = train.subset(val_idx);
  tr.split_tag = "train";
  val.split_tag = "val";
  return {std::move(tr), std::move(val)};
}

SiloPartition partition_silos(const TimeSeriesDataset& train, int num_silos, bool stratified,
                              std::uint64_t seed) {
  if (num_silos < 1) throw InvalidConfig("need at least one silo");
  if (static_cast<std::int64_t>(num_silos) > train.count())
    throw TooManyClients("more silos than samples");

  Rng rng(mix64(seed, 0x73696c6fULL));  // "silo"
  std::vector<std::vector<std::int64_t>> assignment(static_cast<std::size_t>(num_silos));

  if (stratified) {
    // Round-robin per class with a running cursor keeps both the per-class
    // and the total silo sizes within one sample of even.
    std::vector<std::vector<std::int64_t>> by_class(train.label_names.size());
    for (std::int64_t i = 0; i < train.count(); ++i)
      by_class[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(i)])].push_back(i);
    std::size_t cursor = 0;
    for (auto& idx : by_class) {
      rng.shuffle(idx);
      for (std::int64_t sample : idx) {
        assignment[cursor % static_cast<std::size_t>(num_silos)].push_back(sample);
        ++cursor;
      }
    }
  } else {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(train.count()));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i)
      assignment[i % static_cast<std::size_t>(num_silos)].push_back(idx[i]);
  }

  SiloPartition part;
  part.stratified = stratified;
  part.seed = seed;
  for (int s = 0; s < num_silos; ++s) {
    auto& idx = assignment[static_cast<std::size_t>(s)];
    std::sort(idx.begin(), idx.end());
    TimeSeriesDataset silo = train.subset(idx);
    silo.name = train.name + "#silo" + std::to_string(s);
    part.silos.push_back(std::move(silo));
  }
  return part;
}

}  // namespace privts
