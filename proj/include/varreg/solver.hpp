#ifndef VARREG_SOLVER_HPP
#define VARREG_SOLVER_HPP

#include <cstdint>
#include <vector>

#include "varreg/groundwater.hpp"
#include "varreg/regularizers.hpp"

namespace varreg {

struct TikhonovConfig {
  double alpha = 1e-2;
  RegularizerSpec reg;
  // continuation over decreasing smoothing; the exact (eps=0) value is
  // reported separately in RegularizedSolution::reg_value
  std::vector<double> smoothing_schedule = {1e-2, 1e-3, 1e-4};
  int max_iters = 2000;
  double grad_tol = 1e-7;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int restarts = 1;
  double start_value = 1.0;  // initial coefficient level (clamped to c_lower)
  std::uint64_t seed = 0;
  bool trace = false;
};

struct SolverTraceRow {
  int iteration;
  double objective;
  double residual;
  double reg_value;
  double step;
};

struct RegularizedSolution {
  PiecewiseConstantField field;
  double objective = 0.0;  // residual^2 + alpha * (smoothed reg at final eps)
  double residual = 0.0;   // ||F_m(u) - y_delta||
  double reg_value = 0.0;  // R(u) at eps = 0
  int iterations = 0;
  bool converged = false;
  std::vector<SolverTraceRow> trace;
};

// Projected gradient descent (cellwise clamp to [c_lower, inf)) on the
// smoothed Tikhonov objective, with smoothing continuation and seeded
// restarts.
RegularizedSolution minimize_tikhonov(const DiffusionProblem& problem, int m,
                                      const ObservedData& y_delta,
                                      const TikhonovConfig& config, int n);

// alpha = C0 * max{delta, rho_m, approx_residual_n}^theta
double alpha_for_convergence(double delta, double rho_m, double approx_residual_n,
                             double C0 = 1.0, double theta = 1.0);

// alpha = C1 * max{delta, lambda_n, gamma_n}
double alpha_for_rates(double delta, double lambda_n, double gamma_n, double C1 = 1.0);

// Exhaustive tensor-grid search over [lo, hi]^n of the exact objective.
// Refuses n > 3.
RegularizedSolution brute_force_minimize(const DiffusionProblem& problem, int m,
                                         const ObservedData& y_delta, double alpha,
                                         const RegularizerSpec& reg, int n, double lo,
                                         double hi, int grid_points);

// Exact (eps = 0) Tikhonov objective of a candidate coefficient field.
double tikhonov_objective(const DiffusionProblem& problem, int m,
                          const ObservedData& y_delta, double alpha,
                          const RegularizerSpec& reg,
                          const PiecewiseConstantField& a);

}  // namespace varreg

#endif
