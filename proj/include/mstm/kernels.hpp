#pragma once

#include <cstddef>

// Array kernels behind the tensor ops. Every kernel has a scalar reference
// implementation; on x86-64 an AVX2 variant is compiled in and selected at
// runtime when the CPU supports it. Elementwise kernels (add/sub/mul/scale/
// axpy) are bit-identical across backends; reductions (dot/sum/abs_sum)
// accumulate lanewise and may differ from the scalar order by the usual
// reassociation rounding.

namespace mstm::kernels {

enum class Backend { scalar, avx2 };

Backend active();
bool supported(Backend b);
void select(Backend b);  // throws std::invalid_argument if unsupported here
void select_auto();      // best supported backend
const char* name(Backend b);

double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);  // y += a*x
void add(const double* x, const double* y, double* out, std::size_t n);
void sub(const double* x, const double* y, double* out, std::size_t n);
void mul(const double* x, const double* y, double* out, std::size_t n);
void scale(double a, const double* x, double* out, std::size_t n);  // out = a*x
double sum(const double* x, std::size_t n);
double abs_sum(const double* x, std::size_t n);

}  // namespace mstm::kernels
