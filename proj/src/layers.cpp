// src/layers.cpp
//
// Copyright 2026  The mladv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mladv/layers.hpp"

#include <cmath>
#include <string>

#include "mladv/kernels.hpp"

namespace mladv {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor uniform_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(-kParamInitScale, kParamInitScale);
  }
  return t;
}

void check_cell_shapes(const LstmCellParams& p) {
  const std::size_t h4 = p.biases.size();
  if (h4 == 0 || h4 % 4 != 0 || p.input_weights.rank() != 2 ||
      p.recurrent_weights.rank() != 2 || p.input_weights.rows() != h4 ||
      p.recurrent_weights.rows() != h4 ||
      p.recurrent_weights.cols() != h4 / 4) {
    throw DimensionError("inconsistent LSTM cell parameter shapes: W " +
                         p.input_weights.shape_str() + ", R " +
                         p.recurrent_weights.shape_str() + ", b " +
                         p.biases.shape_str());
  }
}

// gates layout within a 4H row: [i | f | g | o]
void apply_gates(const double* pre, std::size_t h_size, double* gate_row,
                 const double* c_prev, double* c_row, double* tanh_row,
                 double* h_row) {
  for (std::size_t h = 0; h < h_size; ++h) {
    const double gi = sigmoid(pre[h]);
    const double gf = sigmoid(pre[h_size + h]);
    const double gg = std::tanh(pre[2 * h_size + h]);
    const double go = sigmoid(pre[3 * h_size + h]);
    const double c = gf * c_prev[h] + gi * gg;
    const double tc = std::tanh(c);
    gate_row[h] = gi;
    gate_row[h_size + h] = gf;
    gate_row[2 * h_size + h] = gg;
    gate_row[3 * h_size + h] = go;
    c_row[h] = c;
    tanh_row[h] = tc;
    h_row[h] = go * tc;
  }
}

// Fills one 4H row of pre-activation gate gradients and the cell-state
// gradient to pass further back in time.
void gate_backward(const double* d_hidden_row, const double* dh_next,
                   const double* dc_next, const double* gate_row,
                   const double* tanh_row, const double* c_prev,
                   std::size_t h_size, double* dpre_row, double* dc_out) {
  for (std::size_t h = 0; h < h_size; ++h) {
    const double gi = gate_row[h];
    const double gf = gate_row[h_size + h];
    const double gg = gate_row[2 * h_size + h];
    const double go = gate_row[3 * h_size + h];
    const double tc = tanh_row[h];
    const double dh = d_hidden_row[h] + dh_next[h];
    const double d_o = dh * tc;
    const double d_c = dc_next[h] + dh * go * (1.0 - tc * tc);
    dpre_row[h] = (d_c * gg) * gi * (1.0 - gi);
    dpre_row[h_size + h] = (d_c * c_prev[h]) * gf * (1.0 - gf);
    dpre_row[2 * h_size + h] = (d_c * gi) * (1.0 - gg * gg);
    dpre_row[3 * h_size + h] = d_o * go * (1.0 - go);
    dc_out[h] = d_c * gf;
  }
}

}  // namespace

LstmCellParams make_lstm_cell(std::size_t hidden, std::size_t input,
                              Rng& rng) {
  LstmCellParams p;
  p.input_weights = uniform_tensor({4 * hidden, input}, rng);
  p.recurrent_weights = uniform_tensor({4 * hidden, hidden}, rng);
  p.biases = Tensor({4 * hidden});
  for (std::size_t h = 0; h < hidden; ++h) {
    p.biases[hidden + h] = 1.0;  // forget gate block
  }
  return p;
}

LstmGrads zero_grads(const LstmCellParams& p) {
  return {Tensor(p.input_weights.shape()), Tensor(p.recurrent_weights.shape()),
          Tensor(p.biases.shape())};
}

void accumulate(LstmGrads& dst, const LstmGrads& src) {
  accumulate(dst.d_input_weights, src.d_input_weights);
  accumulate(dst.d_recurrent_weights, src.d_recurrent_weights);
  accumulate(dst.d_biases, src.d_biases);
}

LstmStepResult lstm_cell_step(const Tensor& x, const Tensor& h_prev,
                              const Tensor& c_prev, const LstmCellParams& p) {
  check_cell_shapes(p);
  const std::size_t h_size = p.hidden_size();
  const std::size_t d = p.input_size();
  if (x.size() != d || h_prev.size() != h_size || c_prev.size() != h_size) {
    throw DimensionError("lstm_cell_step: input shapes " + x.shape_str() +
                         ", " + h_prev.shape_str() + ", " + c_prev.shape_str() +
                         " do not match cell with H=" + std::to_string(h_size) +
                         " D=" + std::to_string(d));
  }
  const Tensor wt = transpose(p.input_weights);
  const Tensor rt = transpose(p.recurrent_weights);
  std::vector<double> pre(4 * h_size), rproj(4 * h_size);
  kernels::matmul(x.data(), wt.data(), pre.data(), 1, d, 4 * h_size);
  kernels::matmul(h_prev.data(), rt.data(), rproj.data(), 1, h_size,
                  4 * h_size);
  for (std::size_t r = 0; r < 4 * h_size; ++r) {
    pre[r] = (pre[r] + rproj[r]) + p.biases[r];
  }
  LstmStepResult res;
  res.h = Tensor({h_size});
  res.c = Tensor({h_size});
  res.cache.gates = Tensor({4 * h_size});
  res.cache.tanh_c = Tensor({h_size});
  apply_gates(pre.data(), h_size, res.cache.gates.data(), c_prev.data(),
              res.c.data(), res.cache.tanh_c.data(), res.h.data());
  res.cache.x = x;
  res.cache.h_prev = h_prev;
  res.cache.c_prev = c_prev;
  res.cache.c = res.c;
  return res;
}

LstmStepBackwardResult lstm_cell_backward(const Tensor& d_h, const Tensor& d_c,
                                          const LstmStepCache& cache,
                                          const LstmCellParams& p) {
  check_cell_shapes(p);
  const std::size_t h_size = p.hidden_size();
  const std::size_t d = p.input_size();
  if (cache.gates.size() != 4 * h_size || cache.x.size() != d) {
    throw StateError("lstm_cell_backward: cache does not match parameters");
  }
  if (d_h.size() != h_size || d_c.size() != h_size) {
    throw DimensionError("lstm_cell_backward: upstream gradient shapes " +
                         d_h.shape_str() + ", " + d_c.shape_str());
  }
  Tensor dpre({4 * h_size});
  Tensor dc_prev({h_size});
  std::vector<double> zero_h(h_size, 0.0);
  gate_backward(d_h.data(), zero_h.data(), d_c.data(), cache.gates.data(),
                cache.tanh_c.data(), cache.c_prev.data(), h_size, dpre.data(),
                dc_prev.data());

  LstmStepBackwardResult out;
  out.d_x = Tensor({d});
  out.d_h_prev = Tensor({h_size});
  out.d_c_prev = dc_prev;
  kernels::matmul(dpre.data(), p.input_weights.data(), out.d_x.data(), 1,
                  4 * h_size, d);
  kernels::matmul(dpre.data(), p.recurrent_weights.data(), out.d_h_prev.data(),
                  1, 4 * h_size, h_size);
  out.grads.d_input_weights = Tensor({4 * h_size, d});
  out.grads.d_recurrent_weights = Tensor({4 * h_size, h_size});
  kernels::matmul(dpre.data(), cache.x.data(),
                  out.grads.d_input_weights.data(), 4 * h_size, 1, d);
  kernels::matmul(dpre.data(), cache.h_prev.data(),
                  out.grads.d_recurrent_weights.data(), 4 * h_size, 1, h_size);
  out.grads.d_biases = dpre;
  return out;
}

LstmForwardResult lstm_forward(const Tensor& seq, const LstmCellParams& p,
                               bool reversed) {
  check_cell_shapes(p);
  if (seq.rank() != 2) {
    throw DimensionError("lstm_forward: sequence must be rank 2, got " +
                         seq.shape_str());
  }
  const std::size_t t_len = seq.rows();
  if (t_len == 0) throw DimensionError("lstm_forward: empty sequence");
  const std::size_t h_size = p.hidden_size();
  const std::size_t d = p.input_size();
  if (seq.cols() != d) {
    throw DimensionError("lstm_forward: sequence width " + seq.shape_str() +
                         " does not match cell input size " +
                         std::to_string(d));
  }

  const Tensor wt = transpose(p.input_weights);
  const Tensor rt = transpose(p.recurrent_weights);
  Tensor xproj = matmul(seq, wt);  // [T x 4H]

  LstmForwardResult res;
  res.cache.seq = seq;
  res.cache.reversed = reversed;
  res.cache.gates = Tensor({t_len, 4 * h_size});
  res.cache.cells = Tensor({t_len, h_size});
  res.cache.tanh_cells = Tensor({t_len, h_size});
  res.cache.hidden = Tensor({t_len, h_size});

  std::vector<double> h_prev(h_size, 0.0), c_prev(h_size, 0.0);
  std::vector<double> pre(4 * h_size), rproj(4 * h_size);
  for (std::size_t s = 0; s < t_len; ++s) {
    const std::size_t t = reversed ? t_len - 1 - s : s;
    kernels::matmul(h_prev.data(), rt.data(), rproj.data(), 1, h_size,
                    4 * h_size);
    const double* xrow = xproj.data() + t * 4 * h_size;
    for (std::size_t r = 0; r < 4 * h_size; ++r) {
      pre[r] = (xrow[r] + rproj[r]) + p.biases[r];
    }
    double* gate_row = res.cache.gates.data() + t * 4 * h_size;
    double* c_row = res.cache.cells.data() + t * h_size;
    double* tanh_row = res.cache.tanh_cells.data() + t * h_size;
    double* h_row = res.cache.hidden.data() + t * h_size;
    apply_gates(pre.data(), h_size, gate_row, c_prev.data(), c_row, tanh_row,
                h_row);
    std::copy(h_row, h_row + h_size, h_prev.begin());
    std::copy(c_row, c_row + h_size, c_prev.begin());
  }
  res.hidden = res.cache.hidden;
  return res;
}

LstmBackwardResult lstm_backward(const Tensor& d_hidden,
                                 const LstmSeqCache& cache,
                                 const LstmCellParams& p) {
  check_cell_shapes(p);
  const std::size_t h_size = p.hidden_size();
  const std::size_t d = p.input_size();
  if (cache.gates.rank() != 2 || cache.gates.cols() != 4 * h_size ||
      cache.seq.cols() != d) {
    throw StateError("lstm_backward: cache does not match parameters");
  }
  if (!d_hidden.same_shape(cache.hidden)) {
    throw DimensionError("lstm_backward: upstream gradient " +
                         d_hidden.shape_str() + " does not match hidden " +
                         cache.hidden.shape_str());
  }
  const std::size_t t_len = cache.seq.rows();
  const bool reversed = cache.reversed;

  Tensor dpre({t_len, 4 * h_size});
  std::vector<double> dh_next(h_size, 0.0), dc_next(h_size, 0.0);
  std::vector<double> dc_buf(h_size), zero_h(h_size, 0.0);
  for (std::size_t s = t_len; s-- > 0;) {
    const std::size_t t = reversed ? t_len - 1 - s : s;
    const double* c_prev =
        s > 0 ? cache.cells.data() + (reversed ? t + 1 : t - 1) * h_size
              : zero_h.data();
    double* dpre_row = dpre.data() + t * 4 * h_size;
    gate_backward(d_hidden.data() + t * h_size, dh_next.data(), dc_next.data(),
                  cache.gates.data() + t * 4 * h_size,
                  cache.tanh_cells.data() + t * h_size, c_prev, h_size,
                  dpre_row, dc_buf.data());
    dc_next.assign(dc_buf.begin(), dc_buf.end());
    kernels::matmul(dpre_row, p.recurrent_weights.data(), dh_next.data(), 1,
                    4 * h_size, h_size);
  }

  LstmBackwardResult out;
  out.d_seq = matmul(dpre, p.input_weights);  // [T x D]
  const Tensor dpre_t = transpose(dpre);
  out.grads.d_input_weights = matmul(dpre_t, cache.seq);

  // Previous hidden state per frame along the visiting order.
  Tensor h_prev_mat({t_len, h_size});
  for (std::size_t t = 0; t < t_len; ++t) {
    const bool has_prev = reversed ? (t + 1 < t_len) : (t > 0);
    if (has_prev) {
      const std::size_t pt = reversed ? t + 1 : t - 1;
      std::copy(cache.hidden.data() + pt * h_size,
                cache.hidden.data() + (pt + 1) * h_size,
                h_prev_mat.data() + t * h_size);
    }
  }
  out.grads.d_recurrent_weights = matmul(dpre_t, h_prev_mat);

  out.grads.d_biases = Tensor({4 * h_size});
  for (std::size_t t = 0; t < t_len; ++t) {
    kernels::axpy(1.0, dpre.data() + t * 4 * h_size,
                  out.grads.d_biases.data(), 4 * h_size);
  }
  return out;
}

BlstmLayerParams make_blstm(std::size_t hidden, std::size_t input, Rng& rng) {
  BlstmLayerParams p;
  p.forward = make_lstm_cell(hidden, input, rng);
  p.backward = make_lstm_cell(hidden, input, rng);
  return p;
}

BlstmGrads zero_grads(const BlstmLayerParams& p) {
  return {zero_grads(p.forward), zero_grads(p.backward)};
}

void accumulate(BlstmGrads& dst, const BlstmGrads& src) {
  accumulate(dst.fwd, src.fwd);
  accumulate(dst.bwd, src.bwd);
}

BlstmForwardResult blstm_forward(const Tensor& seq,
                                 const BlstmLayerParams& p) {
  if (p.forward.hidden_size() != p.backward.hidden_size() ||
      p.forward.input_size() != p.backward.input_size()) {
    throw ConfigError("blstm_forward: direction parameter sizes disagree");
  }
  LstmForwardResult f = lstm_forward(seq, p.forward, false);
  LstmForwardResult b = lstm_forward(seq, p.backward, true);
  const std::size_t t_len = seq.rows();
  const std::size_t h_size = p.hidden_size();
  BlstmForwardResult res;
  res.hidden = Tensor({t_len, 2 * h_size});
  for (std::size_t t = 0; t < t_len; ++t) {
    std::copy(f.hidden.data() + t * h_size, f.hidden.data() + (t + 1) * h_size,
              res.hidden.data() + t * 2 * h_size);
    std::copy(b.hidden.data() + t * h_size, b.hidden.data() + (t + 1) * h_size,
              res.hidden.data() + t * 2 * h_size + h_size);
  }
  res.cache.fwd = std::move(f.cache);
  res.cache.bwd = std::move(b.cache);
  return res;
}

BlstmBackwardResult blstm_backward(const Tensor& d_hidden,
                                   const BlstmCache& cache,
                                   const BlstmLayerParams& p) {
  const std::size_t h_size = p.hidden_size();
  if (cache.fwd.gates.rank() != 2 ||
      cache.fwd.gates.cols() != 4 * h_size ||
      cache.bwd.gates.cols() != 4 * h_size) {
    throw StateError("blstm_backward: cache does not match parameters");
  }
  const std::size_t t_len = cache.fwd.seq.rows();
  if (d_hidden.rank() != 2 || d_hidden.rows() != t_len ||
      d_hidden.cols() != 2 * h_size) {
    throw DimensionError("blstm_backward: upstream gradient " +
                         d_hidden.shape_str() + " does not match output [" +
                         std::to_string(t_len) + "x" +
                         std::to_string(2 * h_size) + "]");
  }
  Tensor d_fwd({t_len, h_size}), d_bwd({t_len, h_size});
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* row = d_hidden.data() + t * 2 * h_size;
    std::copy(row, row + h_size, d_fwd.data() + t * h_size);
    std::copy(row + h_size, row + 2 * h_size, d_bwd.data() + t * h_size);
  }
  LstmBackwardResult rf = lstm_backward(d_fwd, cache.fwd, p.forward);
  LstmBackwardResult rb = lstm_backward(d_bwd, cache.bwd, p.backward);
  BlstmBackwardResult out;
  out.d_seq = add(rf.d_seq, rb.d_seq);  // forward direction first
  out.grads.fwd = std::move(rf.grads);
  out.grads.bwd = std::move(rb.grads);
  return out;
}

Tensor grl_forward(const Tensor& x) { return x; }

Tensor grl_backward(const Tensor& upstream, const GrlConfig& cfg) {
  if (cfg.lambda < 0.0) {
    throw ConfigError("grl_backward: lambda must be nonnegative, got " +
                      std::to_string(cfg.lambda));
  }
  return scale(-cfg.lambda, upstream);
}

HeadParams make_head(std::size_t classes, std::size_t input, Rng& rng) {
  HeadParams p;
  p.weight = uniform_tensor({classes, input}, rng);
  p.bias = Tensor({classes});
  return p;
}

HeadGrads zero_grads(const HeadParams& p) {
  return {Tensor(p.weight.shape()), Tensor(p.bias.shape())};
}

void accumulate(HeadGrads& dst, const HeadGrads& src) {
  accumulate(dst.d_weight, src.d_weight);
  accumulate(dst.d_bias, src.d_bias);
}

HeadForwardResult head_forward(const Tensor& hidden, const HeadParams& p,
                               std::span<const std::uint32_t> labels,
                               std::span<const std::uint8_t> mask) {
  if (hidden.rank() != 2 || hidden.cols() != p.input_size()) {
    throw DimensionError("head_forward: hidden " + hidden.shape_str() +
                         " does not match head input size " +
                         std::to_string(p.input_size()));
  }
  const std::size_t t_len = hidden.rows();
  const std::size_t k = p.num_classes();
  if (labels.size() != t_len || mask.size() != t_len) {
    throw DimensionError("head_forward: labels/mask length does not match " +
                         std::to_string(t_len) + " frames");
  }
  for (std::size_t t = 0; t < t_len; ++t) {
    if (labels[t] >= k) {
      throw LabelError("head_forward: label " + std::to_string(labels[t]) +
                       " out of range for " + std::to_string(k) + " classes");
    }
  }

  Tensor logits = matmul(hidden, transpose(p.weight));  // [T x K]
  for (std::size_t t = 0; t < t_len; ++t) {
    kernels::add(logits.data() + t * k, p.bias.data(), logits.data() + t * k,
                 k);
  }

  HeadForwardResult res;
  res.cache.hidden = hidden;
  res.cache.posteriors = Tensor({t_len, k});
  res.cache.labels.assign(labels.begin(), labels.end());
  res.cache.mask.assign(mask.begin(), mask.end());
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* lrow = logits.data() + t * k;
    double* prow = res.cache.posteriors.data() + t * k;
    double mx = lrow[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, lrow[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      prow[i] = std::exp(lrow[i] - mx);
      sum += prow[i];
    }
    for (std::size_t i = 0; i < k; ++i) prow[i] /= sum;
    if (mask[t]) {
      res.sum_loss += std::log(sum) + mx - lrow[labels[t]];
      ++res.cache.masked_count;
    }
  }
  if (res.cache.masked_count > 0) {
    res.mean_loss = res.sum_loss / static_cast<double>(res.cache.masked_count);
  }
  return res;
}

HeadBackwardResult head_backward(const HeadCache& cache, const HeadParams& p,
                                 double upstream_scale) {
  const std::size_t t_len = cache.mask.size();
  const std::size_t k = p.num_classes();
  if (cache.hidden.rank() != 2 || cache.hidden.cols() != p.input_size() ||
      cache.posteriors.cols() != k || cache.posteriors.rows() != t_len) {
    throw StateError("head_backward: cache does not match parameters");
  }
  HeadBackwardResult out;
  if (cache.masked_count == 0) {
    out.d_hidden = Tensor({t_len, p.input_size()});
    out.grads = zero_grads(p);
    return out;
  }
  const double factor =
      upstream_scale / static_cast<double>(cache.masked_count);
  Tensor d_logits({t_len, k});
  for (std::size_t t = 0; t < t_len; ++t) {
    if (!cache.mask[t]) continue;  // rows stay exactly zero
    const double* prow = cache.posteriors.data() + t * k;
    double* drow = d_logits.data() + t * k;
    for (std::size_t i = 0; i < k; ++i) drow[i] = prow[i] * factor;
    drow[cache.labels[t]] -= factor;
  }
  out.d_hidden = matmul(d_logits, p.weight);
  out.grads.d_weight = matmul(transpose(d_logits), cache.hidden);
  out.grads.d_bias = Tensor({k});
  for (std::size_t t = 0; t < t_len; ++t) {
    if (!cache.mask[t]) continue;
    kernels::axpy(1.0, d_logits.data() + t * k, out.grads.d_bias.data(), k);
  }
  return out;
}

}  // namespace mladv
