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

#include "privts/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "privts/errors.hpp"

namespace privts {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

class Conv1d final : public Layer {
 public:
  Conv1d(std::int64_t in_c, std::int64_t in_l, std::int64_t out_c, std::int64_t kernel,
         std::int64_t stride, std::int64_t pad)
      : kernel_(kernel), stride_(stride), pad_(pad) {
    in_channels = in_c;
    in_len = in_l;
    out_channels = out_c;
    out_len = (in_l + 2 * pad - kernel) / stride + 1;
    params_.emplace_back("weight", Tensor({out_c, in_c, kernel}));
    params_.emplace_back("bias", Tensor({out_c}));
    cols_.resize(static_cast<std::size_t>(in_c * kernel * out_len));
    dcols_.resize(cols_.size());
  }

  std::string kind() const override { return "conv1d"; }
  std::vector<Parameter>* params() override { return &params_; }

  void forward(const double* in, double* out, bool, Rng*) override {
    im2col(in);
    const std::int64_t ick = in_channels * kernel_;
    ConstMatMap w(params_[0].value.data.data(), out_channels, ick);
    ConstMatMap cols(cols_.data(), ick, out_len);
    MatMap o(out, out_channels, out_len);
    o.noalias() = w * cols;
    ConstVecMap b(params_[1].value.data.data(), out_channels);
    o.colwise() += b;
  }

  void backward(const double* in, const double* dout, double* din) override {
    (void)in;  // cols_ caches the unfolded input
    const std::int64_t ick = in_channels * kernel_;
    ConstMatMap w(params_[0].value.data.data(), out_channels, ick);
    ConstMatMap cols(cols_.data(), ick, out_len);
    ConstMatMap go(dout, out_channels, out_len);
    MatMap gw(params_[0].grad.data.data(), out_channels, ick);
    gw.noalias() += go * cols.transpose();
    VecMap gb(params_[1].grad.data.data(), out_channels);
    gb.noalias() += go.rowwise().sum();
    MatMap gcols(dcols_.data(), ick, out_len);
    gcols.noalias() = w.transpose() * go;
    col2im(din);
  }

 private:
  void im2col(const double* in) {
    for (std::int64_t ic = 0; ic < in_channels; ++ic) {
      const double* src = in + ic * in_len;
      for (std::int64_t k = 0; k < kernel_; ++k) {
        double* dst = cols_.data() + (ic * kernel_ + k) * out_len;
        for (std::int64_t t = 0; t < out_len; ++t) {
          const std::int64_t p = t * stride_ + k - pad_;
          dst[t] = (p >= 0 && p < in_len) ? src[p] : 0.0;
        }
      }
    }
  }

  void col2im(double* din) const {
    std::memset(din, 0, sizeof(double) * static_cast<std::size_t>(in_size()));
    for (std::int64_t ic = 0; ic < in_channels; ++ic) {
      double* dst = din + ic * in_len;
      for (std::int64_t k = 0; k < kernel_; ++k) {
        const double* src = dcols_.data() + (ic * kernel_ + k) * out_len;
        for (std::int64_t t = 0; t < out_len; ++t) {
          const std::int64_t p = t * stride_ + k - pad_;
          if (p >= 0 && p < in_len) dst[p] += src[t];
        }
      }
    }
  }

  std::int64_t kernel_, stride_, pad_;
  std::vector<Parameter> params_;
  std::vector<double> cols_, dcols_;
};

class Relu final : public Layer {
 public:
  Relu(std::int64_t c, std::int64_t l) {
    in_channels = out_channels = c;
    in_len = out_len = l;
  }
  std::string kind() const override { return "relu"; }

  void forward(const double* in, double* out, bool, Rng*) override {
    for (std::int64_t i = 0; i < in_size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  }
  void backward(const double* in, const double* dout, double* din) override {
    for (std::int64_t i = 0; i < in_size(); ++i) din[i] = in[i] > 0.0 ? dout[i] : 0.0;
  }
};

class MaxPool1d final : public Layer {
 public:
  MaxPool1d(std::int64_t c, std::int64_t in_l, std::int64_t window, std::int64_t stride)
      : window_(window), stride_(stride) {
    in_channels = out_channels = c;
    in_len = in_l;
    out_len = (in_l - window) / stride + 1;
    argmax_.resize(static_cast<std::size_t>(out_size()));
  }
  std::string kind() const override { return "maxpool1d"; }

  void forward(const double* in, double* out, bool, Rng*) override {
    for (std::int64_t c = 0; c < in_channels; ++c) {
      const double* src = in + c * in_len;
      for (std::int64_t t = 0; t < out_len; ++t) {
        std::int64_t best = t * stride_;
        double bv = src[best];
        for (std::int64_t k = 1; k < window_; ++k) {
          const std::int64_t p = t * stride_ + k;
          if (src[p] > bv) {
            bv = src[p];
            best = p;
          }
        }
        out[c * out_len + t] = bv;
        argmax_[static_cast<std::size_t>(c * out_len + t)] = best;
      }
    }
  }

  void backward(const double*, const double* dout, double* din) override {
    std::memset(din, 0, sizeof(double) * static_cast<std::size_t>(in_size()));
    for (std::int64_t c = 0; c < in_channels; ++c) {
      for (std::int64_t t = 0; t < out_len; ++t) {
        const std::int64_t idx = c * out_len + t;
        din[c * in_len + argmax_[static_cast<std::size_t>(idx)]] += dout[idx];
      }
    }
  }

 private:
  std::int64_t window_, stride_;
  std::vector<std::int64_t> argmax_;
};

class GlobalAvgPool final : public Layer {
 public:
  GlobalAvgPool(std::int64_t c, std::int64_t in_l) {
    in_channels = out_channels = c;
    in_len = in_l;
    out_len = 1;
  }
  std::string kind() const override { return "global_avg_pool"; }

  void forward(const double* in, double* out, bool, Rng*) override {
    for (std::int64_t c = 0; c < in_channels; ++c) {
      double s = 0.0;
      for (std::int64_t t = 0; t < in_len; ++t) s += in[c * in_len + t];
      out[c] = s / static_cast<double>(in_len);
    }
  }
  void backward(const double*, const double* dout, double* din) override {
    const double inv = 1.0 / static_cast<double>(in_len);
    for (std::int64_t c = 0; c < in_channels; ++c) {
      for (std::int64_t t = 0; t < in_len; ++t) din[c * in_len + t] = dout[c] * inv;
    }
  }
};

class Flatten final : public Layer {
 public:
  Flatten(std::int64_t c, std::int64_t l) {
    in_channels = c;
    in_len = l;
    out_channels = c * l;
    out_len = 1;
  }
  std::string kind() const override { return "flatten"; }
  void forward(const double* in, double* out, bool, Rng*) override {
    std::memcpy(out, in, sizeof(double) * static_cast<std::size_t>(in_size()));
  }
  void backward(const double*, const double* dout, double* din) override {
    std::memcpy(din, dout, sizeof(double) * static_cast<std::size_t>(in_size()));
  }
};

class Dense final : public Layer {
 public:
  Dense(std::int64_t in_dim, std::int64_t out_dim) {
    in_channels = in_dim;
    in_len = 1;
    out_channels = out_dim;
    out_len = 1;
    params_.emplace_back("weight", Tensor({out_dim, in_dim}));
    params_.emplace_back("bias", Tensor({out_dim}));
  }
  std::string kind() const override { return "dense"; }
  std::vector<Parameter>* params() override { return &params_; }

  void forward(const double* in, double* out, bool, Rng*) override {
    ConstMatMap w(params_[0].value.data.data(), out_channels, in_channels);
    ConstVecMap x(in, in_channels);
    VecMap y(out, out_channels);
    y.noalias() = w * x;
    y += ConstVecMap(params_[1].value.data.data(), out_channels);
  }

  void backward(const double* in, const double* dout, double* din) override {
    ConstMatMap w(params_[0].value.data.data(), out_channels, in_channels);
    ConstVecMap x(in, in_channels);
    ConstVecMap gy(dout, out_channels);
    MatMap gw(params_[0].grad.data.data(), out_channels, in_channels);
    gw.noalias() += gy * x.transpose();
    VecMap gb(params_[1].grad.data.data(), out_channels);
    gb += gy;
    VecMap gx(din, in_channels);
    gx.noalias() = w.transpose() * gy;
  }

 private:
  std::vector<Parameter> params_;
};

class Dropout final : public Layer {
 public:
  Dropout(std::int64_t c, std::int64_t l, double rate) : rate_(rate) {
    in_channels = out_channels = c;
    in_len = out_len = l;
    mask_.resize(static_cast<std::size_t>(in_size()), 1.0);
  }
  std::string kind() const override { return "dropout"; }

  void forward(const double* in, double* out, bool training, Rng* rng) override {
    last_training_ = training && rate_ > 0.0;
    if (!last_training_) {
      std::memcpy(out, in, sizeof(double) * static_cast<std::size_t>(in_size()));
      return;
    }
    if (rng == nullptr) throw Error("dropout requires an rng stream in training mode");
    const double scale = 1.0 / (1.0 - rate_);
    for (std::int64_t i = 0; i < in_size(); ++i) {
      mask_[static_cast<std::size_t>(i)] = rng->uniform() < rate_ ? 0.0 : scale;
      out[i] = in[i] * mask_[static_cast<std::size_t>(i)];
    }
  }

  void backward(const double*, const double* dout, double* din) override {
    if (!last_training_) {
      std::memcpy(din, dout, sizeof(double) * static_cast<std::size_t>(in_size()));
      return;
    }
    for (std::int64_t i = 0; i < in_size(); ++i)
      din[i] = dout[i] * mask_[static_cast<std::size_t>(i)];
  }

 private:
  double rate_;
  bool last_training_ = false;
  std::vector<double> mask_;
};

// One direction of an LSTM pass over the sequence.  Gate order in the stacked
// weight matrices is (input, forget, cell, output).
struct LstmDirection {
  std::int64_t input_dim = 0;
  std::int64_t hidden = 0;
  std::int64_t len = 0;
  bool reversed = false;

  // Caches indexed by processing step 0..len-1.
  std::vector<double> gates_i, gates_f, gates_g, gates_o;  // hidden x len
  std::vector<double> cells, tanh_cells, hiddens;          // hidden x len

  void resize(std::int64_t in_dim, std::int64_t h, std::int64_t l, bool rev) {
    input_dim = in_dim;
    hidden = h;
    len = l;
    reversed = rev;
    const std::size_t n = static_cast<std::size_t>(h * l);
    gates_i.resize(n);
    gates_f.resize(n);
    gates_g.resize(n);
    gates_o.resize(n);
    cells.resize(n);
    tanh_cells.resize(n);
    hiddens.resize(n);
  }

  // Sequence position for processing step s.
  std::int64_t pos(std::int64_t s) const { return reversed ? len - 1 - s : s; }
};

class BiLstm final : public Layer {
 public:
  BiLstm(std::int64_t in_dim, std::int64_t in_l, std::int64_t hidden, bool return_sequence)
      : hidden_(hidden), return_sequence_(return_sequence) {
    in_channels = in_dim;
    in_len = in_l;
    out_channels = 2 * hidden;
    out_len = return_sequence ? in_l : 1;
    for (const char* dir : {"fw", "bw"}) {
      params_.emplace_back(std::string(dir) + ".w_ih", Tensor({4 * hidden, in_dim}));
      params_.emplace_back(std::string(dir) + ".w_hh", Tensor({4 * hidden, hidden}));
      params_.emplace_back(std::string(dir) + ".bias", Tensor({4 * hidden}));
    }
    fw_.resize(in_dim, hidden, in_l, false);
    bw_.resize(in_dim, hidden, in_l, true);
    x_buf_.resize(static_cast<std::size_t>(in_dim));
    scratch_.resize(static_cast<std::size_t>(4 * hidden));
  }

  std::string kind() const override { return "bilstm"; }
  std::vector<Parameter>* params() override { return &params_; }

  void forward(const double* in, double* out, bool, Rng*) override {
    run_direction(fw_, in, 0);
    run_direction(bw_, in, 3);
    const std::int64_t h = hidden_;
    if (return_sequence_) {
      // Row block [0,h) carries forward states at their sequence position,
      // block [h,2h) the backward states.
      for (std::int64_t s = 0; s < in_len; ++s) {
        const std::int64_t pf = fw_.pos(s);
        const std::int64_t pb = bw_.pos(s);
        for (std::int64_t j = 0; j < h; ++j) {
          out[j * in_len + pf] = fw_.hiddens[static_cast<std::size_t>(j * in_len + s)];
          out[(h + j) * in_len + pb] = bw_.hiddens[static_cast<std::size_t>(j * in_len + s)];
        }
      }
    } else {
      for (std::int64_t j = 0; j < h; ++j) {
        out[j] = fw_.hiddens[static_cast<std::size_t>(j * in_len + (in_len - 1))];
        out[h + j] = bw_.hiddens[static_cast<std::size_t>(j * in_len + (in_len - 1))];
      }
    }
  }

  void backward(const double* in, const double* dout, double* din) override {
    std::memset(din, 0, sizeof(double) * static_cast<std::size_t>(in_size()));
    backward_direction(fw_, in, dout, din, 0);
    backward_direction(bw_, in, dout, din, 3);
  }

 private:
  // param_base selects fw (0) or bw (3) parameter triple.
  void run_direction(LstmDirection& d, const double* in, int param_base) {
    const std::int64_t h = hidden_;
    ConstMatMap w_ih(params_[param_base].value.data.data(), 4 * h, d.input_dim);
    ConstMatMap w_hh(params_[param_base + 1].value.data.data(), 4 * h, h);
    ConstVecMap bias(params_[param_base + 2].value.data.data(), 4 * h);
    VecMap z(scratch_.data(), 4 * h);
    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
    for (std::int64_t s = 0; s < d.len; ++s) {
      const std::int64_t t = d.pos(s);
      for (std::int64_t ic = 0; ic < d.input_dim; ++ic)
        x_buf_[static_cast<std::size_t>(ic)] = in[ic * in_len + t];
      ConstVecMap x(x_buf_.data(), d.input_dim);
      z.noalias() = w_ih * x;
      z.noalias() += w_hh * h_prev;
      z += bias;
      for (std::int64_t j = 0; j < h; ++j) {
        const std::size_t idx = static_cast<std::size_t>(j * d.len + s);
        const double gi = sigmoid(z[j]);
        const double gf = sigmoid(z[h + j]);
        const double gg = std::tanh(z[2 * h + j]);
        const double go = sigmoid(z[3 * h + j]);
        const double c = gf * c_prev[j] + gi * gg;
        const double tc = std::tanh(c);
        d.gates_i[idx] = gi;
        d.gates_f[idx] = gf;
        d.gates_g[idx] = gg;
        d.gates_o[idx] = go;
        d.cells[idx] = c;
        d.tanh_cells[idx] = tc;
        d.hiddens[idx] = go * tc;
        c_prev[j] = c;
        h_prev[j] = d.hiddens[idx];
      }
    }
  }

  void backward_direction(LstmDirection& d, const double* in, const double* dout, double* din,
                          int param_base) {
    const std::int64_t h = hidden_;
    ConstMatMap w_ih(params_[param_base].value.data.data(), 4 * h, d.input_dim);
    ConstMatMap w_hh(params_[param_base + 1].value.data.data(), 4 * h, h);
    MatMap gw_ih(params_[param_base].grad.data.data(), 4 * h, d.input_dim);
    MatMap gw_hh(params_[param_base + 1].grad.data.data(), 4 * h, h);
    VecMap gbias(params_[param_base + 2].grad.data.data(), 4 * h);

    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dz(4 * h);
    const bool is_backward_dir = param_base != 0;
    for (std::int64_t s = d.len - 1; s >= 0; --s) {
      const std::int64_t t = d.pos(s);
      for (std::int64_t j = 0; j < h; ++j) {
        const std::size_t idx = static_cast<std::size_t>(j * d.len + s);
        double dh = dh_next[j];
        if (return_sequence_) {
          const std::int64_t row = is_backward_dir ? h + j : j;
          dh += dout[row * in_len + t];
        } else if (s == d.len - 1) {
          dh += dout[is_backward_dir ? h + j : j];
        }
        const double go = d.gates_o[idx];
        const double tc = d.tanh_cells[idx];
        const double dgo = dh * tc;
        double dc = dc_next[j] + dh * go * (1.0 - tc * tc);
        const double gi = d.gates_i[idx];
        const double gf = d.gates_f[idx];
        const double gg = d.gates_g[idx];
        const double c_prev =
            s > 0 ? d.cells[static_cast<std::size_t>(j * d.len + (s - 1))] : 0.0;
        const double dgi = dc * gg;
        const double dgg = dc * gi;
        const double dgf = dc * c_prev;
        dc_next[j] = dc * gf;
        dz[j] = dgi * gi * (1.0 - gi);
        dz[h + j] = dgf * gf * (1.0 - gf);
        dz[2 * h + j] = dgg * (1.0 - gg * gg);
        dz[3 * h + j] = dgo * go * (1.0 - go);
      }
      for (std::int64_t ic = 0; ic < d.input_dim; ++ic)
        x_buf_[static_cast<std::size_t>(ic)] = in[ic * in_len + t];
      ConstVecMap x(x_buf_.data(), d.input_dim);
      gw_ih.noalias() += dz * x.transpose();
      if (s > 0) {
        Eigen::VectorXd h_prev(h);
        for (std::int64_t j = 0; j < h; ++j)
          h_prev[j] = d.hiddens[static_cast<std::size_t>(j * d.len + (s - 1))];
        gw_hh.noalias() += dz * h_prev.transpose();
      }
      gbias += dz;
      for (std::int64_t ic = 0; ic < d.input_dim; ++ic) {
        double acc = 0.0;
        for (std::int64_t r = 0; r < 4 * h; ++r) acc += w_ih(r, ic) * dz[r];
        din[ic * in_len + t] += acc;
      }
      dh_next.noalias() = w_hh.transpose() * dz;
    }
  }

  std::int64_t hidden_;
  bool return_sequence_;
  std::vector<Parameter> params_;
  LstmDirection fw_, bw_;
  std::vector<double> x_buf_, scratch_;
};

// ---------------------------------------------------------------------------
// Model building
// ---------------------------------------------------------------------------

struct StackBuilder {
  std::vector<std::unique_ptr<Layer>> layers;
  std::int64_t channels;
  std::int64_t length;
  int conv_count = 0;
  int dense_count = 0;
  int lstm_count = 0;

  StackBuilder(std::int64_t c, std::int64_t l) : channels(c), length(l) {}

  // Convs and pools that would reduce the temporal length below one position
  // are skipped; the decision depends only on the input length.
  bool conv(std::int64_t out_c, std::int64_t kernel, std::int64_t stride, std::int64_t pad,
            bool relu_after) {
    const std::int64_t out_l = (length + 2 * pad - kernel) / stride + 1;
    if (length + 2 * pad < kernel || out_l < 1) return false;
    auto layer = std::make_unique<Conv1d>(channels, length, out_c, kernel, stride, pad);
    layer->set_name("conv" + std::to_string(++conv_count));
    layers.push_back(std::move(layer));
    channels = out_c;
    length = out_l;
    if (relu_after) relu();
    return true;
  }

  void pool(std::int64_t window, std::int64_t stride) {
    if (length < window) return;
    layers.push_back(std::make_unique<MaxPool1d>(channels, length, window, stride));
    length = (length - window) / stride + 1;
  }

  void relu() { layers.push_back(std::make_unique<Relu>(channels, length)); }

  void flatten() {
    layers.push_back(std::make_unique<Flatten>(channels, length));
    channels = channels * length;
    length = 1;
  }

  void global_avg_pool() {
    layers.push_back(std::make_unique<GlobalAvgPool>(channels, length));
    length = 1;
  }

  void dense(std::int64_t out_dim, bool relu_after) {
    auto layer = std::make_unique<Dense>(channels * length, out_dim);
    layer->set_name("fc" + std::to_string(++dense_count));
    layers.push_back(std::move(layer));
    channels = out_dim;
    length = 1;
    if (relu_after) relu();
  }

  void dropout(double rate) {
    layers.push_back(std::make_unique<Dropout>(channels, length, rate));
  }

  void bilstm(std::int64_t hidden, bool return_sequence) {
    auto layer = std::make_unique<BiLstm>(channels, length, hidden, return_sequence);
    layer->set_name("lstm" + std::to_string(++lstm_count));
    layers.push_back(std::move(layer));
    channels = 2 * hidden;
    length = return_sequence ? length : 1;
  }

  void alexnet_conv_stack() {
    conv(96, 11, 4, 0, true);
    pool(3, 2);
    conv(256, 5, 1, 2, true);
    pool(3, 2);
    conv(384, 3, 1, 1, true);
    conv(384, 3, 1, 1, true);
    conv(256, 3, 1, 1, true);
    pool(3, 2);
  }
};

void initialize(Model& model, std::uint64_t seed) {
  Rng rng(mix64(seed, 0x696e6974ULL));  // "init"
  for (Parameter* p : model.parameters()) {
    const bool is_bias = p->name.size() >= 4 && p->name.compare(p->name.size() - 4, 4, "bias") == 0;
    if (is_bias) {
      p->value.fill(0.0);
      // Recurrent forget-gate bias starts at 1.0 ("fw.bias"/"bw.bias" carry
      // the stacked (i, f, g, o) gate blocks).
      if (p->name == "fw.bias" || p->name == "bw.bias") {
        const std::int64_t h = p->value.shape[0] / 4;
        for (std::int64_t j = 0; j < h; ++j) p->value.at(h + j) = 1.0;
      }
      continue;
    }
    const std::int64_t fan_in = p->value.numel() / p->value.shape[0];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : p->value.data) v = rng.uniform(-limit, limit);
  }
}

}  // namespace

Architecture architecture_from_string(const std::string& name) {
  if (name == "AlexNet1D") return Architecture::kAlexNet1D;
  if (name == "LeNet1D") return Architecture::kLeNet1D;
  if (name == "FCN") return Architecture::kFcn;
  if (name == "FDN") return Architecture::kFdn;
  if (name == "LSTM") return Architecture::kLstm;
  throw InvalidConfig("unknown architecture_id: " + name);
}

std::string architecture_to_string(Architecture arch) {
  switch (arch) {
    case Architecture::kAlexNet1D: return "AlexNet1D";
    case Architecture::kLeNet1D: return "LeNet1D";
    case Architecture::kFcn: return "FCN";
    case Architecture::kFdn: return "FDN";
    case Architecture::kLstm: return "LSTM";
  }
  throw InvalidConfig("bad architecture enum");
}

void Model::forward_one(const double* in, double* logits, bool training, Rng* rng) {
  // acts_[i] holds the input of layer i; backward_one replays from them.
  std::memcpy(acts_[0].data(), in, sizeof(double) * acts_[0].size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    double* out = (i + 1 == layers_.size()) ? logits : acts_[i + 1].data();
    layers_[i]->forward(acts_[i].data(), out, training, rng);
  }
}

void Model::backward_one(const double* dlogits) {
  const double* dout = dlogits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const double* in = acts_[i].data();
    double* din = grads_[i].data();
    layers_[i]->backward(in, dout, din);
    dout = din;
  }
}

void Model::zero_grads() {
  for (Parameter* p : parameters()) p->zero_grad();
}

void Model::apply_sgd(double learning_rate) {
  for (Parameter* p : parameters()) {
    double* v = p->value.data.data();
    const double* g = p->grad.data.data();
    const std::size_t n = p->value.data.size();
    for (std::size_t i = 0; i < n; ++i) v[i] -= learning_rate * g[i];
  }
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    if (auto* ps = layer->params()) {
      for (auto& p : *ps) out.push_back(&p);
    }
  }
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (auto& layer : layers_) {
    if (auto* ps = const_cast<Layer&>(*layer).params()) {
      for (auto& p : *ps) out.push_back(&p);
    }
  }
  return out;
}

NamedTensorList Model::export_parameters() const {
  NamedTensorList out;
  for (auto& layer : layers_) {
    if (auto* ps = const_cast<Layer&>(*layer).params()) {
      for (auto& p : *ps) out.push_back({layer->name() + "." + p.name, p.value});
    }
  }
  return out;
}

NamedTensorList Model::export_gradients() const {
  NamedTensorList out;
  for (auto& layer : layers_) {
    if (auto* ps = const_cast<Layer&>(*layer).params()) {
      for (auto& p : *ps) out.push_back({layer->name() + "." + p.name, p.grad});
    }
  }
  return out;
}

void Model::import_parameters(const NamedTensorList& params) {
  auto mine = parameters();
  if (mine.size() != params.size())
    throw ShapeMismatch("parameter count mismatch in import_parameters");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (!mine[i]->value.same_shape(params[i].value))
      throw ShapeMismatch("parameter shape mismatch at " + params[i].name);
    mine[i]->value.data = params[i].value.data;
  }
}

Model Model::clone() const {
  Model copy = build_model(spec_, seed_);
  copy.import_parameters(export_parameters());
  return copy;
}

std::int64_t Model::num_parameters() const {
  std::int64_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.numel();
  return n;
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_channels < 1 || spec.input_length < 1)
    throw UnsupportedShape("input dimensions must be positive");
  if (spec.num_classes < 2) throw UnsupportedShape("num_classes must be at least 2");

  StackBuilder b(spec.input_channels, spec.input_length);
  switch (spec.architecture) {
    case Architecture::kAlexNet1D:
      b.alexnet_conv_stack();
      b.flatten();
      b.dense(512, true);
      b.dropout(0.5);
      b.dense(256, true);
      b.dense(spec.num_classes, false);
      break;
    case Architecture::kLeNet1D:
      b.conv(6, 5, 1, 0, true);
      b.pool(2, 2);
      b.conv(16, 5, 1, 0, true);
      b.pool(2, 2);
      b.flatten();
      b.dense(120, true);
      b.dense(84, true);
      b.dense(spec.num_classes, false);
      break;
    case Architecture::kFcn:
      b.alexnet_conv_stack();
      b.global_avg_pool();
      b.dense(spec.num_classes, false);
      break;
    case Architecture::kFdn:
      b.flatten();
      b.dense(512, true);
      b.dense(256, true);
      b.dense(spec.num_classes, false);
      break;
    case Architecture::kLstm:
      b.bilstm(128, true);
      b.bilstm(128, false);
      b.dense(spec.num_classes, false);
      break;
  }

  Model model;
  model.spec_ = spec;
  model.seed_ = seed;
  model.layers_ = std::move(b.layers);
  model.acts_.resize(model.layers_.size());
  model.grads_.resize(model.layers_.size());
  for (std::size_t i = 0; i < model.layers_.size(); ++i) {
    model.acts_[i].resize(static_cast<std::size_t>(model.layers_[i]->in_size()));
    model.grads_[i].resize(static_cast<std::size_t>(model.layers_[i]->in_size()));
  }
  initialize(model, seed);
  return model;
}

Tensor forward(Model& model, const Tensor& batch) {
  const ModelSpec& spec = model.spec();
  if (batch.shape.size() != 3 || batch.shape[1] != spec.input_channels ||
      batch.shape[2] != spec.input_length) {
    throw ShapeMismatch("batch shape " + shape_string(batch.shape) + " does not match spec");
  }
  batch.require_finite("model input");
  const std::int64_t n = batch.shape[0];
  const std::int64_t ex_size = spec.input_channels * spec.input_length;
  Tensor logits({n, spec.num_classes});
  for (std::int64_t i = 0; i < n; ++i) {
    model.forward_one(batch.data.data() + i * ex_size, logits.data.data() + i * spec.num_classes,
                      /*training=*/false, nullptr);
  }
  logits.require_finite("model logits");
  return logits;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> probs(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

double cross_entropy(const std::vector<double>& logits, int label) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return mx + std::log(sum) - logits[static_cast<std::size_t>(label)];
}

double Model::train_example(const double* in, int label, bool training, Rng* rng, int* pred) {
  const int classes = static_cast<int>(spec_.num_classes);
  std::vector<double> logits(static_cast<std::size_t>(classes));
  forward_one(in, logits.data(), training, rng);
  const double loss = cross_entropy(logits, label);
  std::vector<double> dlogits = softmax(logits);
  if (pred != nullptr) {
    *pred = static_cast<int>(
        std::max_element(dlogits.begin(), dlogits.end()) - dlogits.begin());
  }
  dlogits[static_cast<std::size_t>(label)] -= 1.0;
  backward_one(dlogits.data());
  return loss;
}

namespace {

double accumulate_example(Model& model, const double* in, int label, bool training, Rng* rng) {
  return model.train_example(in, label, training, rng);
}

void check_labels(const std::vector<int>& labels, std::int64_t classes, std::int64_t batch) {
  if (static_cast<std::int64_t>(labels.size()) != batch)
    throw LengthMismatch("labels length does not match batch size");
  for (int l : labels) {
    if (l < 0 || l >= classes) throw LabelOutOfRange("label " + std::to_string(l));
  }
}

}  // namespace

std::pair<double, NamedTensorList> loss_and_grads(Model& model, const Tensor& batch,
                                                  const std::vector<int>& labels) {
  const ModelSpec& spec = model.spec();
  if (batch.shape.size() != 3 || batch.shape[1] != spec.input_channels ||
      batch.shape[2] != spec.input_length)
    throw ShapeMismatch("batch shape " + shape_string(batch.shape) + " does not match spec");
  const std::int64_t n = batch.shape[0];
  check_labels(labels, spec.num_classes, n);
  const std::int64_t ex_size = spec.input_channels * spec.input_length;

  model.zero_grads();
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    total += accumulate_example(model, batch.data.data() + i * ex_size,
                                labels[static_cast<std::size_t>(i)], /*training=*/false, nullptr);
  }
  NamedTensorList grads = model.export_gradients();
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& g : grads) {
    for (double& v : g.value.data) v *= inv;
  }
  return {total * inv, grads};
}

std::vector<NamedTensorList> per_example_grads(Model& model, const Tensor& batch,
                                               const std::vector<int>& labels) {
  const ModelSpec& spec = model.spec();
  if (batch.shape.size() != 3 || batch.shape[1] != spec.input_channels ||
      batch.shape[2] != spec.input_length)
    throw ShapeMismatch("batch shape " + shape_string(batch.shape) + " does not match spec");
  const std::int64_t n = batch.shape[0];
  check_labels(labels, spec.num_classes, n);
  const std::int64_t ex_size = spec.input_channels * spec.input_length;

  std::vector<NamedTensorList> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    model.zero_grads();
    accumulate_example(model, batch.data.data() + i * ex_size,
                       labels[static_cast<std::size_t>(i)], /*training=*/false, nullptr);
    out.push_back(model.export_gradients());
  }
  return out;
}

}  // namespace privts
