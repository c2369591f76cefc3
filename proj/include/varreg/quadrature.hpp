#ifndef VARREG_QUADRATURE_HPP
#define VARREG_QUADRATURE_HPP

#include <algorithm>
#include <array>
#include <functional>
#include <vector>

namespace varreg {

// 5-point Gauss-Legendre rule on [-1,1]; exact through degree 9.
struct Gauss5 {
  static constexpr std::array<double, 5> nodes = {
      -0.9061798459386639928, -0.5384693101056830910, 0.0,
      0.5384693101056830910, 0.9061798459386639928};
  static constexpr std::array<double, 5> weights = {
      0.2369268850561890875, 0.4786286704993664831, 0.5688888888888888889,
      0.4786286704993664831, 0.2369268850561890875};
};

// Integrate f over [a,b] with a single 5-point rule.
inline double gauss5(double a, double b, const std::function<double(double)>& f) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += Gauss5::weights[i] * f(mid + half * Gauss5::nodes[i]);
  return s * half;
}

// Composite rule over [a,b] split into `cells` equal pieces.
inline double gauss5_composite(double a, double b, int cells,
                               const std::function<double(double)>& f) {
  double s = 0.0;
  const double h = (b - a) / cells;
  for (int c = 0; c < cells; ++c) s += gauss5(a + c * h, a + (c + 1) * h, f);
  return s;
}

// Composite rule with interior breakpoints (jump locations made exact).
inline double gauss5_broken(double a, double b, std::vector<double> breaks,
                            const std::function<double(double)>& f,
                            int cells_per_piece = 1) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(a, breaks[i]), hi = std::min(b, breaks[i + 1]);
    if (hi > lo) s += gauss5_composite(lo, hi, cells_per_piece, f);
  }
  return s;
}

}  // namespace varreg

#endif
