// src/kernels/dispatch.cpp
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

#include <atomic>
#include <cstdlib>
#include <string>

#include "mladv/errors.hpp"
#include "mladv/kernels.hpp"

namespace mladv::kernels {

const KernelTable& scalar_table();
#ifdef MLADV_HAVE_AVX2_BUILD
const KernelTable& avx2_table();
#endif
#ifdef MLADV_HAVE_NEON_BUILD
const KernelTable& neon_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(MLADV_HAVE_AVX2_BUILD) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend default_backend() {
  if (const char* env = std::getenv("MLADV_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Backend::kScalar;
    if (want == "avx2") return Backend::kAvx2;
    if (want == "neon") return Backend::kNeon;
    throw ConfigError("MLADV_KERNELS: unknown backend '" + want +
                      "' (expected scalar, avx2 or neon)");
  }
  if (supported(Backend::kAvx2)) return Backend::kAvx2;
  if (supported(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

struct Active {
  Backend backend;
  const KernelTable* ops;
};

Active& active_state() {
  static Active a{default_backend(), &table(default_backend())};
  return a;
}

}  // namespace

bool supported(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
    case Backend::kNeon:
#ifdef MLADV_HAVE_NEON_BUILD
      return true;  // NEON is baseline on aarch64
#else
      return false;
#endif
  }
  return false;
}

std::string_view name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "?";
}

const KernelTable& table(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return scalar_table();
    case Backend::kAvx2:
#ifdef MLADV_HAVE_AVX2_BUILD
      if (cpu_has_avx2()) return avx2_table();
#endif
      throw ConfigError("avx2 kernels unavailable on this machine");
    case Backend::kNeon:
#ifdef MLADV_HAVE_NEON_BUILD
      return neon_table();
#else
      throw ConfigError("neon kernels unavailable on this machine");
#endif
  }
  throw ConfigError("unknown kernel backend");
}

Backend active_backend() { return active_state().backend; }

void set_backend(Backend backend) {
  const KernelTable& t = table(backend);  // throws if unsupported
  active_state().backend = backend;
  active_state().ops = &t;
}

void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
  active_state().ops->matmul(a, b, c, m, k, n);
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  active_state().ops->add(x, y, out, n);
}

void sub(const double* x, const double* y, double* out, std::size_t n) {
  active_state().ops->sub(x, y, out, n);
}

void hadamard(const double* x, const double* y, double* out, std::size_t n) {
  active_state().ops->hadamard(x, y, out, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active_state().ops->axpy(alpha, x, y, n);
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
  active_state().ops->scale(alpha, x, out, n);
}

}  // namespace mladv::kernels
