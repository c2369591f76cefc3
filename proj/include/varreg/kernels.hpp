#ifndef VARREG_KERNELS_HPP
#define VARREG_KERNELS_HPP

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel array kernels used by the regularizer evaluations, the FEM
// norms and the projected-gradient inner loops.  Every kernel has a scalar
// reference implementation and (on x86-64 with AVX2) a vectorized variant;
// the active set is chosen once at startup.  varreg::kernels::force_scalar()
// pins the reference path, which the equivalence tests use to compare both.

namespace varreg::kernels {

struct Ops {
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*sum_abs)(std::span<const double>);
  // sum of sqrt(x_i^2 + eps^2) - eps
  double (*sum_abs_smoothed)(std::span<const double>, double eps);
  double (*max_abs)(std::span<const double>);
  double (*sum_sq)(std::span<const double>);
  // y += a * x
  void (*axpy)(double a, std::span<const double> x, std::span<double> y);
  // x_i = max(x_i, lo)
  void (*clamp_min)(std::span<double>, double lo);
};

const Ops& scalar_ops();
const Ops& active_ops();
std::string_view active_name();  // "scalar" or "avx2"
void force_scalar(bool on);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_ops().dot(a, b);
}
inline double sum_abs(std::span<const double> x) { return active_ops().sum_abs(x); }
inline double sum_abs_smoothed(std::span<const double> x, double eps) {
  return active_ops().sum_abs_smoothed(x, eps);
}
inline double max_abs(std::span<const double> x) { return active_ops().max_abs(x); }
inline double sum_sq(std::span<const double> x) { return active_ops().sum_sq(x); }
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active_ops().axpy(a, x, y);
}
inline void clamp_min(std::span<double> x, double lo) { active_ops().clamp_min(x, lo); }

namespace detail {
bool have_avx2();
const Ops& avx2_ops();  // defined in kernels_avx2.cpp; valid only if have_avx2()
}

}  // namespace varreg::kernels

#endif
