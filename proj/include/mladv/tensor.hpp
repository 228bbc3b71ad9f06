// include/mladv/tensor.hpp
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

#ifndef MLADV_TENSOR_HPP_
#define MLADV_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "mladv/errors.hpp"

namespace mladv {

/// Dense row-major tensor of 64-bit floats. Plain value type: copyable,
/// movable, no views, no sharing. Everything in this project (parameters,
/// activations, gradients) is one of these.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor. An empty shape means a scalar (one element).
  explicit Tensor(std::vector<std::size_t> shape);

  /// Tensor with explicit contents; data length must equal the product of
  /// the shape entries.
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  /// 1-D convenience constructor.
  static Tensor vec(std::initializer_list<double> values);
  /// 2-D convenience constructor; all rows must have equal length.
  static Tensor mat(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }

  /// Rank-2 accessors; throw DimensionError on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  std::string shape_str() const;  // e.g. "[5x7]"

  /// Value equality (shape plus IEEE == on every element).
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Bitwise equality, distinguishing -0.0 from 0.0 and comparing NaN payloads.
bool bit_equal(const Tensor& a, const Tensor& b);

// ---- arithmetic ----------------------------------------------------------

/// Matrix product of rank-2 tensors. Deterministic: each output element is a
/// left-to-right sum over the inner dimension.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(double alpha, const Tensor& a);

/// dst += src (elementwise, in place).
void accumulate(Tensor& dst, const Tensor& src);
/// y += alpha * x (elementwise, in place).
void axpy(double alpha, const Tensor& x, Tensor& y);

// ---- classification primitives -------------------------------------------

/// Stable softmax of a rank-1 tensor (max subtraction before exponentiation).
Tensor softmax(const Tensor& logits);

struct SoftmaxCeResult {
  double loss;         // -log softmax(logits)[label]
  Tensor grad_logits;  // softmax(logits) - onehot(label)
};

SoftmaxCeResult softmax_ce(const Tensor& logits, std::size_t label);

// ---- numeric gradient oracle ---------------------------------------------

/// Central-difference gradient of a scalar function, one coordinate at a
/// time: (f(x + eps e_i) - f(x - eps e_i)) / (2 eps). Used as the independent
/// oracle by every gradient test; keep it free of any backward-pass code.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double eps = 1e-5);

/// max over coordinates of |a-n| / max(1e-8, |a|+|n|); the gradient-check
/// metric used throughout the tests.
double max_relative_error(const Tensor& analytic, const Tensor& numeric);

}  // namespace mladv

#endif  // MLADV_TENSOR_HPP_
