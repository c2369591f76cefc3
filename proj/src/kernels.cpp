#include "varreg/kernels.hpp"

#include <atomic>
#include <cmath>

namespace varreg::kernels {

namespace {

double s_dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double s_sum_abs(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

double s_sum_abs_smoothed(std::span<const double> x, double eps) {
  double s = 0.0;
  for (double v : x) s += std::sqrt(v * v + eps * eps) - eps;
  return s;
}

double s_max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double s_sum_sq(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void s_axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void s_clamp_min(std::span<double> x, double lo) {
  for (double& v : x)
    if (v < lo) v = lo;
}

const Ops kScalar = {s_dot, s_sum_abs, s_sum_abs_smoothed, s_max_abs,
                     s_sum_sq, s_axpy, s_clamp_min};

std::atomic<bool> g_force_scalar{false};

}  // namespace

namespace detail {
bool have_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}
}  // namespace detail

const Ops& scalar_ops() { return kScalar; }

const Ops& active_ops() {
  if (g_force_scalar.load(std::memory_order_relaxed)) return kScalar;
  static const Ops* chosen = detail::have_avx2() ? &detail::avx2_ops() : &kScalar;
  return *chosen;
}

std::string_view active_name() {
  return &active_ops() == &kScalar ? "scalar" : "avx2";
}

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

}  // namespace varreg::kernels
