#ifndef VARREG_GROUNDWATER_HPP
#define VARREG_GROUNDWATER_HPP

#include <cstdint>
#include <vector>

#include "varreg/fields.hpp"

namespace varreg {

// -(a u_x)_x = f on (0,1), u(0)=u(1)=0, with a >= c_lower > 0.
struct DiffusionProblem {
  ScalarFunction f;
  double c_lower = 0.1;
};

DiffusionProblem make_diffusion_problem(double c_lower = 0.1);  // f == 1
DiffusionProblem make_diffusion_problem(ScalarFunction f, double c_lower);

// Linear spline on the uniform grid of m+1 points, vanishing at 0 and 1.
class FemSolution {
 public:
  FemSolution(int m, std::vector<double> interior_values);

  int m() const { return m_; }
  std::span<const double> interior() const { return interior_; }
  std::vector<double>& mutable_interior() { return interior_; }
  // nodal value at grid point i in 0..m (boundary values are 0)
  double node(int i) const;
  double value_at(double x) const;

 private:
  int m_;
  std::vector<double> interior_;  // m-1 values
};

// L2 norms of/between spline functions (exact piecewise integration).
double l2_norm(const FemSolution& u);
double l2_distance(const FemSolution& u, const FemSolution& v);

inline constexpr int kReferenceM = 1 << 14;

FemSolution assemble_and_solve(const PiecewiseConstantField& a,
                               const DiffusionProblem& problem, int m);
FemSolution reference_forward(const PiecewiseConstantField& a,
                              const DiffusionProblem& problem,
                              int m_ref = kReferenceM);

// w = F'_m(a) h: solves (a w_x, v_x) = -(h (u_m)_x, v_x) for all v.
FemSolution frechet_apply(const PiecewiseConstantField& a,
                          const PiecewiseConstantField& h,
                          const DiffusionProblem& problem, int m);

// F'_m(a)^* w as per-cell dual coefficients g_j = -int_cell (u_m)_x z_x,
// z = K(a)^{-1} M w.  Pairing with a cell perturbation is the plain dot.
std::vector<double> adjoint_apply(const PiecewiseConstantField& a,
                                  const FemSolution& w,
                                  const DiffusionProblem& problem, int m);

struct ObservedData {
  FemSolution y_delta;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

// Exact data is the reference forward solve sampled onto the m-grid; noise is
// seeded Gaussian on the interior nodes, rescaled so the L2 error is exactly
// delta.
ObservedData make_observed_data(const PiecewiseConstantField& a_true,
                                const DiffusionProblem& problem, int m,
                                double delta, std::uint64_t seed);

}  // namespace varreg

#endif
