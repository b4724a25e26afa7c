#pragma once

#include <cstddef>

// Internal: per-backend kernel entry points. Only kernels.cpp includes this.

namespace mstm::kernels::detail {

double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void add_scalar(const double* x, const double* y, double* out, std::size_t n);
void sub_scalar(const double* x, const double* y, double* out, std::size_t n);
void mul_scalar(const double* x, const double* y, double* out, std::size_t n);
void scale_scalar(double a, const double* x, double* out, std::size_t n);
double sum_scalar(const double* x, std::size_t n);
double abs_sum_scalar(const double* x, std::size_t n);

#if defined(MSTM_HAVE_AVX2_BUILD)
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
void add_avx2(const double* x, const double* y, double* out, std::size_t n);
void sub_avx2(const double* x, const double* y, double* out, std::size_t n);
void mul_avx2(const double* x, const double* y, double* out, std::size_t n);
void scale_avx2(double a, const double* x, double* out, std::size_t n);
double sum_avx2(const double* x, std::size_t n);
double abs_sum_avx2(const double* x, std::size_t n);
#endif

}  // namespace mstm::kernels::detail
