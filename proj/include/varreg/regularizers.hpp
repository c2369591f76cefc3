#ifndef VARREG_REGULARIZERS_HPP
#define VARREG_REGULARIZERS_HPP

#include <span>
#include <vector>

#include "varreg/fields.hpp"

namespace varreg {

enum class RegularizerKind { TV_L1, TV_L2, BD, SUP_NORM, SPARSITY };

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::TV_L1;
  double p = 1.0;             // SPARSITY exponent, in (0,1]
  double smoothing_eps = 0.0; // 0 = exact nonsmooth evaluation
};

// Dual coefficients, one per primal degree of freedom, with a snapshot of the
// primal coefficients the subgradient was taken at.  The pairing with a
// perturbation is the plain coefficient dot product; the measure weights are
// folded into the dual coefficients so that <xi,u> = R(u) for the active
// selection (sign(0) := 0).
struct SubgradientElement {
  std::vector<double> coeffs;
  std::vector<double> at_coeffs;
};

// |t| smoothed as sqrt(t^2+eps^2)-eps; identity at eps=0.
double smoothed_abs(double t, double eps);

double tv_anisotropic(const PiecewiseConstantField& field, double eps = 0.0);
double tv_isotropic(const PiecewiseConstantField& field, double eps = 0.0);
double bd_total_deformation(const NodalSplineField& field, double eps = 0.0);
double sup_norm(const PiecewiseConstantField& field);
double sparsity_penalty(std::span<const double> coeffs, double p);

// log-sum-exp softmax of |coeffs| with temperature eps (exact max at eps=0).
double sup_norm_smoothed(std::span<const double> coeffs, double eps);

double evaluate(const RegularizerSpec& spec, const PiecewiseConstantField& field);
double evaluate(const RegularizerSpec& spec, const NodalSplineField& field);

SubgradientElement subgradient(const RegularizerSpec& spec,
                               const PiecewiseConstantField& field);
SubgradientElement subgradient(const RegularizerSpec& spec,
                               const NodalSplineField& field);

// Gradient of the eps-smoothed penalty with respect to the cell coefficients
// (TV_L1, SUP_NORM and SPARSITY on parallelepiped meshes; used by the solver).
std::vector<double> smoothed_gradient(const RegularizerSpec& spec,
                                      const PiecewiseConstantField& field,
                                      double eps);

}  // namespace varreg

#endif
