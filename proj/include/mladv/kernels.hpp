// include/mladv/kernels.hpp
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

#ifndef MLADV_KERNELS_HPP_
#define MLADV_KERNELS_HPP_

#include <cstddef>
#include <string_view>

namespace mladv::kernels {

// Double-precision inner-loop kernels behind the tensor operations. Every
// kernel comes in a scalar reference form plus optional SIMD variants
// (AVX2 on x86-64, NEON on aarch64) selected once at runtime.
//
// Bit-exactness contract: a SIMD variant vectorizes only across independent
// output elements. Each output element sees the exact same sequence of IEEE
// multiplies and adds as the scalar reference (no FMA, no reassociation), so
// all backends produce bit-identical results. The equivalence tests assert
// this with bitwise comparison.

enum class Backend {
  kScalar,
  kAvx2,
  kNeon,
};

struct KernelTable {
  // c[m*n] = a[m*k] * b[k*n], all row-major. c is overwritten. Each c[i,j]
  // is a left-to-right sum over k.
  void (*matmul)(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n);
  void (*add)(const double* x, const double* y, double* out, std::size_t n);
  void (*sub)(const double* x, const double* y, double* out, std::size_t n);
  void (*hadamard)(const double* x, const double* y, double* out,
                   std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
};

/// Table for a specific backend; throws ConfigError if it was not compiled in
/// or the CPU lacks the feature.
const KernelTable& table(Backend backend);

bool supported(Backend backend);
std::string_view name(Backend backend);

/// Backend in use. Defaults to the best supported one; the environment
/// variable MLADV_KERNELS=scalar|avx2|neon overrides the default.
Backend active_backend();
void set_backend(Backend backend);

// Dispatching entry points used by the tensor layer.
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);
void add(const double* x, const double* y, double* out, std::size_t n);
void sub(const double* x, const double* y, double* out, std::size_t n);
void hadamard(const double* x, const double* y, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, const double* x, double* out, std::size_t n);

}  // namespace mladv::kernels

#endif  // MLADV_KERNELS_HPP_
