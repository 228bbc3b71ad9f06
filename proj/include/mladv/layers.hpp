// include/mladv/layers.hpp
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

#ifndef MLADV_LAYERS_HPP_
#define MLADV_LAYERS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mladv/rng.hpp"
#include "mladv/tensor.hpp"

namespace mladv {

// Recurrent building blocks with explicit forward and backward passes.
// Vanilla LSTM: no peepholes, no projection. Gate blocks are laid out in the
// fixed order input, forget, cell, output; the forget-gate bias block is
// initialized to 1. Initial hidden and cell states are zero per utterance.

inline constexpr double kParamInitScale = 0.05;

struct LstmCellParams {
  Tensor input_weights;      // [4H x D]
  Tensor recurrent_weights;  // [4H x H]
  Tensor biases;             // [4H]

  std::size_t hidden_size() const { return biases.size() / 4; }
  std::size_t input_size() const { return input_weights.cols(); }
};

/// Weights uniform in [-kParamInitScale, kParamInitScale] from the given
/// stream; biases zero except the forget block at 1.
LstmCellParams make_lstm_cell(std::size_t hidden, std::size_t input, Rng& rng);

struct LstmGrads {
  Tensor d_input_weights;
  Tensor d_recurrent_weights;
  Tensor d_biases;
};

LstmGrads zero_grads(const LstmCellParams& p);
void accumulate(LstmGrads& dst, const LstmGrads& src);

// ---- single step ----------------------------------------------------------

struct LstmStepCache {
  Tensor x, h_prev, c_prev;
  Tensor gates;   // [4H], post-activation, gate order i,f,g,o
  Tensor c, tanh_c;
};

struct LstmStepResult {
  Tensor h, c;
  LstmStepCache cache;
};

LstmStepResult lstm_cell_step(const Tensor& x, const Tensor& h_prev,
                              const Tensor& c_prev, const LstmCellParams& p);

struct LstmStepBackwardResult {
  Tensor d_x, d_h_prev, d_c_prev;
  LstmGrads grads;
};

/// Backward for one step given upstream gradients for h and c.
LstmStepBackwardResult lstm_cell_backward(const Tensor& d_h, const Tensor& d_c,
                                          const LstmStepCache& cache,
                                          const LstmCellParams& p);

// ---- directional sequence pass --------------------------------------------

struct LstmSeqCache {
  Tensor seq;         // [T x D]
  Tensor gates;       // [T x 4H]
  Tensor cells;       // [T x H]
  Tensor tanh_cells;  // [T x H]
  Tensor hidden;      // [T x H]
  bool reversed = false;
};

struct LstmForwardResult {
  Tensor hidden;  // [T x H], indexed by original frame position
  LstmSeqCache cache;
};

/// Runs the cell over the sequence from zero initial state, left to right or
/// right to left. hidden[t] is the state emitted at frame t in original time
/// order regardless of direction.
LstmForwardResult lstm_forward(const Tensor& seq, const LstmCellParams& p,
                               bool reversed);

struct LstmBackwardResult {
  Tensor d_seq;  // [T x D]
  LstmGrads grads;
};

LstmBackwardResult lstm_backward(const Tensor& d_hidden,
                                 const LstmSeqCache& cache,
                                 const LstmCellParams& p);

// ---- bidirectional layer ---------------------------------------------------

struct BlstmLayerParams {
  LstmCellParams forward;
  LstmCellParams backward;

  std::size_t hidden_size() const { return forward.hidden_size(); }
  std::size_t input_size() const { return forward.input_size(); }
  std::size_t output_size() const { return 2 * hidden_size(); }
};

BlstmLayerParams make_blstm(std::size_t hidden, std::size_t input, Rng& rng);

struct BlstmGrads {
  LstmGrads fwd, bwd;
};

BlstmGrads zero_grads(const BlstmLayerParams& p);
void accumulate(BlstmGrads& dst, const BlstmGrads& src);

struct BlstmCache {
  LstmSeqCache fwd, bwd;
};

struct BlstmForwardResult {
  Tensor hidden;  // [T x 2H]: forward half then backward half per frame
  BlstmCache cache;
};

BlstmForwardResult blstm_forward(const Tensor& seq, const BlstmLayerParams& p);

struct BlstmBackwardResult {
  Tensor d_seq;
  BlstmGrads grads;
};

/// Exact BPTT through both directions; the forward-direction contribution is
/// accumulated into d_seq first.
BlstmBackwardResult blstm_backward(const Tensor& d_hidden,
                                   const BlstmCache& cache,
                                   const BlstmLayerParams& p);

// ---- gradient reversal ------------------------------------------------------

struct GrlConfig {
  double lambda = 1.0;
};

/// Identity in the forward path (bit-exact copy).
Tensor grl_forward(const Tensor& x);

/// Multiplies the upstream gradient by -lambda elementwise.
Tensor grl_backward(const Tensor& upstream, const GrlConfig& cfg);

// ---- affine-softmax classification head ------------------------------------

struct HeadParams {
  Tensor weight;  // [K x Din]
  Tensor bias;    // [K]

  std::size_t num_classes() const { return bias.size(); }
  std::size_t input_size() const { return weight.cols(); }
};

HeadParams make_head(std::size_t classes, std::size_t input, Rng& rng);

struct HeadGrads {
  Tensor d_weight;
  Tensor d_bias;
};

HeadGrads zero_grads(const HeadParams& p);
void accumulate(HeadGrads& dst, const HeadGrads& src);

struct HeadCache {
  Tensor hidden;      // [T x Din]
  Tensor posteriors;  // [T x K]
  std::vector<std::uint32_t> labels;
  std::vector<std::uint8_t> mask;
  std::size_t masked_count = 0;
};

struct HeadForwardResult {
  /// Mean of per-frame cross-entropy over masked-in frames; absent when the
  /// mask selects nothing (the caller decides what that means).
  std::optional<double> mean_loss;
  double sum_loss = 0.0;
  HeadCache cache;

  const Tensor& posteriors() const { return cache.posteriors; }
  std::size_t masked_count() const { return cache.masked_count; }
};

HeadForwardResult head_forward(const Tensor& hidden, const HeadParams& p,
                               std::span<const std::uint32_t> labels,
                               std::span<const std::uint8_t> mask);

struct HeadBackwardResult {
  Tensor d_hidden;  // [T x Din]; exact zero rows for masked-out frames
  HeadGrads grads;
};

/// Gradients of (upstream_scale * mean_loss). Zero everywhere when the mask
/// selected no frames.
HeadBackwardResult head_backward(const HeadCache& cache, const HeadParams& p,
                                 double upstream_scale = 1.0);

}  // namespace mladv

#endif  // MLADV_LAYERS_HPP_
