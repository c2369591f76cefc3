#ifndef VARREG_METRICS_HPP
#define VARREG_METRICS_HPP

#include "varreg/groundwater.hpp"
#include "varreg/regularizers.hpp"

namespace varreg {

// d(u,v) = ||u-v||_Z + |R(u)-R(v)|, R evaluated exactly (eps=0).
struct StrictMetricSpec {
  enum class ZNorm { L1, Lp };
  ZNorm z_norm = ZNorm::L1;
  double p = 1.0;  // exponent when z_norm == Lp
  RegularizerSpec reg;
};

double strict_metric(const StrictMetricSpec& spec, const PiecewiseConstantField& u,
                     const PiecewiseConstantField& v);
double strict_metric(const StrictMetricSpec& spec, const NodalSplineField& u,
                     const NodalSplineField& v);

// ||u-v||_Z alone (exact for piecewise constants via common refinement).
double z_norm_distance(const StrictMetricSpec& spec, const PiecewiseConstantField& u,
                       const PiecewiseConstantField& v);

double bregman_distance(const RegularizerSpec& reg, const PiecewiseConstantField& v,
                        const PiecewiseConstantField& u, const SubgradientElement& xi);
double bregman_distance(const RegularizerSpec& reg, const NodalSplineField& v,
                        const NodalSplineField& u, const SubgradientElement& xi);

struct RateQuantities {
  double gamma_n = 0.0;   // ||F'(u_bar)(v_n - u_bar)||
  double lambda_n = 0.0;  // D_R(v_n, u_bar)
  double beta_n = 0.0;    // (rho_m + c lambda_n + gamma_n + delta)^2
  double zeta_n = 0.0;    // residual to exact data, supplied by the caller
  double rho_m = 0.0;
  double delta = 0.0;
  double c_nonlin = 0.0;
  double omega_norm = 0.0;
};

// v_n and u_bar must live on the same parameter grid.  Throws if
// c_nonlin * ||omega|| >= 1 (the rate regime requires c||omega|| < 1).
RateQuantities compute_rate_quantities(const PiecewiseConstantField& u_bar,
                                       const PiecewiseConstantField& v_n,
                                       const FemSolution& omega,
                                       const DiffusionProblem& problem, int m,
                                       const RegularizerSpec& reg,
                                       const SubgradientElement& xi, double delta,
                                       double rho_m, double c_nonlin,
                                       double zeta_n = 0.0);

// Empirical estimate of the nonlinearity constant: max over seeded samples of
// ||F(u)-F(u_bar)-F'(u_bar)(u-u_bar)|| / D_R(u,u_bar).  Reporting aid only.
double estimate_nonlinearity_constant(const PiecewiseConstantField& u_bar,
                                      const DiffusionProblem& problem, int m,
                                      const RegularizerSpec& reg,
                                      const SubgradientElement& xi, int samples,
                                      std::uint64_t seed);

}  // namespace varreg

#endif
