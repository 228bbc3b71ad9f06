// src/tensor.cpp
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

#include "mladv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "mladv/kernels.hpp"

namespace mladv {
namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void check_positive_dims(const std::vector<std::size_t>& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor shape has a zero dimension");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_positive_dims(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_positive_dims(shape_);
  if (data_.size() != shape_product(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
  }
}

Tensor Tensor::vec(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::mat(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r > 0 ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix initializer");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on tensor " + shape_str());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on tensor " + shape_str());
  return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ && a.data_ == b.data_;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul requires rank-2 tensors, got " +
                         a.shape_str() + " and " + b.shape_str());
  }
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " + a.shape_str() +
                         " vs " + b.shape_str());
  }
  Tensor c({a.rows(), b.cols()});
  kernels::matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError("transpose requires a rank-2 tensor, got " +
                         a.shape_str());
  }
  Tensor t({a.cols(), a.rows()});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      t.at(c, r) = a.at(r, c);
    }
  }
  return t;
}

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch: " +
                         a.shape_str() + " vs " + b.shape_str());
  }
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  kernels::add(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  kernels::sub(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "hadamard");
  Tensor out(a.shape());
  kernels::hadamard(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor scale(double alpha, const Tensor& a) {
  Tensor out(a.shape());
  kernels::scale(alpha, a.data(), out.data(), a.size());
  return out;
}

void accumulate(Tensor& dst, const Tensor& src) {
  check_same_shape(dst, src, "accumulate");
  kernels::axpy(1.0, src.data(), dst.data(), dst.size());
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  check_same_shape(y, x, "axpy");
  kernels::axpy(alpha, x.data(), y.data(), y.size());
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1 || logits.size() == 0) {
    throw DimensionError("softmax requires a non-empty rank-1 tensor, got " +
                         logits.shape_str());
  }
  const std::size_t k = logits.size();
  double mx = logits[0];
  for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
  Tensor out({k});
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < k; ++i) out[i] /= sum;
  return out;
}

SoftmaxCeResult softmax_ce(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1 || logits.size() == 0) {
    throw DimensionError("softmax_ce requires a non-empty rank-1 tensor, got " +
                         logits.shape_str());
  }
  if (label >= logits.size()) {
    throw LabelError("softmax_ce: label " + std::to_string(label) +
                     " out of range for " + std::to_string(logits.size()) +
                     " classes");
  }
  const std::size_t k = logits.size();
  double mx = logits[0];
  for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  Tensor probs({k});
  for (std::size_t i = 0; i < k; ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  const double log_sum = std::log(sum);
  SoftmaxCeResult r;
  r.loss = log_sum + mx - logits[label];
  r.grad_logits = Tensor({k});
  for (std::size_t i = 0; i < k; ++i) {
    r.grad_logits[i] = probs[i] / sum;
  }
  r.grad_logits[label] -= 1.0;
  return r;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double eps) {
  if (!(eps > 0.0)) {
    throw ConfigError("finite_diff_grad: eps must be positive");
  }
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(probe);
    probe[i] = orig - eps;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value at "
                         "coordinate " + std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric) {
  if (!analytic.same_shape(numeric)) {
    throw DimensionError("max_relative_error: shape mismatch: " +
                         analytic.shape_str() + " vs " + numeric.shape_str());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double denom = std::max(1e-8, std::abs(a) + std::abs(n));
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace mladv
