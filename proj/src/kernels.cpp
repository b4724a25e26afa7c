#include "mstm/kernels.hpp"

#include <stdexcept>

#include "kernels_detail.hpp"

namespace mstm::kernels {

namespace {

struct Vtable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*scale)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*abs_sum)(const double*, std::size_t);
};

constexpr Vtable kScalar = {
    detail::dot_scalar, detail::axpy_scalar, detail::add_scalar,   detail::sub_scalar,
    detail::mul_scalar, detail::scale_scalar, detail::sum_scalar, detail::abs_sum_scalar,
};

#if defined(MSTM_HAVE_AVX2_BUILD)
constexpr Vtable kAvx2 = {
    detail::dot_avx2, detail::axpy_avx2, detail::add_avx2,   detail::sub_avx2,
    detail::mul_avx2, detail::scale_avx2, detail::sum_avx2, detail::abs_sum_avx2,
};
#endif

// Scalar until select_auto() runs; any call issued during static init is
// still correct, just not vectorized.
Vtable g_vt = kScalar;
Backend g_backend = Backend::scalar;

struct AutoInit {
  AutoInit() { select_auto(); }
} g_auto_init;

}  // namespace

Backend active() { return g_backend; }

bool supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(MSTM_HAVE_AVX2_BUILD)
      return __builtin_cpu_supports("avx2") != 0;
#else
      return false;
#endif
  }
  return false;
}

void select(Backend b) {
  if (!supported(b)) {
    throw std::invalid_argument(std::string("kernel backend not supported here: ") + name(b));
  }
  switch (b) {
    case Backend::scalar:
      g_vt = kScalar;
      break;
    case Backend::avx2:
#if defined(MSTM_HAVE_AVX2_BUILD)
      g_vt = kAvx2;
#endif
      break;
  }
  g_backend = b;
}

void select_auto() { select(supported(Backend::avx2) ? Backend::avx2 : Backend::scalar); }

const char* name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "?";
}

double dot(const double* x, const double* y, std::size_t n) { return g_vt.dot(x, y, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { g_vt.axpy(a, x, y, n); }
void add(const double* x, const double* y, double* out, std::size_t n) { g_vt.add(x, y, out, n); }
void sub(const double* x, const double* y, double* out, std::size_t n) { g_vt.sub(x, y, out, n); }
void mul(const double* x, const double* y, double* out, std::size_t n) { g_vt.mul(x, y, out, n); }
void scale(double a, const double* x, double* out, std::size_t n) { g_vt.scale(a, x, out, n); }
double sum(const double* x, std::size_t n) { return g_vt.sum(x, n); }
double abs_sum(const double* x, std::size_t n) { return g_vt.abs_sum(x, n); }

}  // namespace mstm::kernels
