#include "varreg/solver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "varreg/kernels.hpp"

namespace varreg {

namespace {

struct Objective {
  const DiffusionProblem* problem;
  int m;
  const ObservedData* y;
  double alpha;
  RegularizerSpec reg;

  double residual(const PiecewiseConstantField& a) const {
    auto u = assemble_and_solve(a, *problem, m);
    std::vector<double> d(u.interior().begin(), u.interior().end());
    for (int i = 0; i < m - 1; ++i) d[i] -= y->y_delta.interior()[i];
    return l2_norm(FemSolution(m, std::move(d)));
  }

  double value(const PiecewiseConstantField& a, double eps) const {
    double r = residual(a);
    RegularizerSpec s = reg;
    s.smoothing_eps = eps;
    return r * r + alpha * evaluate(s, a);
  }

  std::vector<double> gradient(const PiecewiseConstantField& a, double eps) const {
    auto u = assemble_and_solve(a, *problem, m);
    std::vector<double> d(u.interior().begin(), u.interior().end());
    for (int i = 0; i < m - 1; ++i) d[i] -= y->y_delta.interior()[i];
    auto g = adjoint_apply(a, FemSolution(m, std::move(d)), *problem, m);
    for (double& v : g) v *= 2.0;
    auto gr = smoothed_gradient(reg, a, eps);
    kernels::axpy(alpha, gr, g);
    return g;
  }
};

}  // namespace

double tikhonov_objective(const DiffusionProblem& problem, int m,
                          const ObservedData& y_delta, double alpha,
                          const RegularizerSpec& reg,
                          const PiecewiseConstantField& a) {
  Objective obj{&problem, m, &y_delta, alpha, reg};
  return obj.value(a, 0.0);
}

RegularizedSolution minimize_tikhonov(const DiffusionProblem& problem, int m,
                                      const ObservedData& y_delta,
                                      const TikhonovConfig& config, int n) {
  if (config.alpha <= 0.0) throw std::invalid_argument("minimize_tikhonov: alpha must be > 0");
  if (n < 1) throw std::invalid_argument("minimize_tikhonov: n must be >= 1");
  if (config.grad_tol <= 0.0)
    throw std::invalid_argument("minimize_tikhonov: grad_tol must be > 0");
  for (std::size_t i = 1; i < config.smoothing_schedule.size(); ++i)
    if (config.smoothing_schedule[i] >= config.smoothing_schedule[i - 1])
      throw std::invalid_argument("minimize_tikhonov: smoothing schedule must decrease");

  auto mesh = make_uniform_mesh(1, n);
  Objective obj{&problem, m, &y_delta, config.alpha, config.reg};
  const double lo = problem.c_lower;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> factor(0.5, 2.0);

  RegularizedSolution best{PiecewiseConstantField(mesh, std::vector<double>(n, lo))};
  bool have_best = false;
  const double final_eps =
      config.smoothing_schedule.empty() ? 0.0 : config.smoothing_schedule.back();

  for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
    double start = std::max(lo, config.start_value);
    if (restart > 0) start = std::max(lo, start * factor(rng));
    std::vector<double> u(n, start);
    PiecewiseConstantField a(mesh, u);

    int iterations = 0;
    bool stage_converged = false;
    double step = 1.0;
    std::vector<SolverTraceRow> trace;

    std::vector<double> stages = config.smoothing_schedule;
    if (stages.empty()) stages.push_back(0.0);
    for (double eps : stages) {
      double J = obj.value(a, eps);
      if (!std::isfinite(J))
        throw std::runtime_error("minimize_tikhonov: non-finite objective at start");
      stage_converged = false;
      while (iterations < config.max_iters) {
        auto g = obj.gradient(a, eps);

        // projected-gradient stationarity measure
        std::vector<double> probe(a.coeffs().begin(), a.coeffs().end());
        kernels::axpy(-1.0, g, probe);
        kernels::clamp_min(probe, lo);
        std::vector<double> pg(a.coeffs().begin(), a.coeffs().end());
        kernels::axpy(-1.0, probe, pg);
        if (std::sqrt(kernels::sum_sq(pg)) <= config.grad_tol) {
          stage_converged = true;
          break;
        }

        step = std::min(step * 2.0, 1e6);
        bool accepted = false;
        while (step > 1e-18) {
          std::vector<double> cand(a.coeffs().begin(), a.coeffs().end());
          kernels::axpy(-step, g, cand);
          kernels::clamp_min(cand, lo);
          std::vector<double> delta(cand);
          kernels::axpy(-1.0, a.coeffs(), delta);
          PiecewiseConstantField next(mesh, cand);
          double Jn = obj.value(next, eps);
          if (!std::isfinite(Jn)) {
            step *= config.shrink;
            continue;
          }
          double decrease = config.sufficient_decrease * kernels::dot(g, delta);
          if (Jn <= J + decrease) {
            a = std::move(next);
            J = Jn;
            accepted = true;
            break;
          }
          step *= config.shrink;
        }
        ++iterations;
        if (config.trace) {
          RegularizerSpec exact = config.reg;
          exact.smoothing_eps = 0.0;
          trace.push_back({iterations, J, obj.residual(a), evaluate(exact, a), step});
        }
        if (!accepted) break;  // stalled line search at this smoothing level
      }
    }

    double res = obj.residual(a);
    RegularizerSpec exact = config.reg;
    exact.smoothing_eps = 0.0;
    RegularizerSpec smooth = exact;
    smooth.smoothing_eps = final_eps;
    RegularizedSolution sol{a};
    sol.residual = res;
    sol.reg_value = evaluate(exact, a);
    sol.objective = res * res + config.alpha * evaluate(smooth, a);
    sol.iterations = iterations;
    sol.converged = stage_converged;
    sol.trace = std::move(trace);

    if (!have_best || sol.objective < best.objective) {
      best = std::move(sol);
      have_best = true;
    }
  }
  return best;
}

double alpha_for_convergence(double delta, double rho_m, double approx_residual_n,
                             double C0, double theta) {
  if (delta < 0.0 || rho_m < 0.0 || approx_residual_n < 0.0)
    throw std::domain_error("alpha_for_convergence: inputs must be nonnegative");
  double mx = std::max({delta, rho_m, approx_residual_n});
  if (mx == 0.0) throw std::domain_error("alpha_for_convergence: all inputs zero");
  return C0 * std::pow(mx, theta);
}

double alpha_for_rates(double delta, double lambda_n, double gamma_n, double C1) {
  if (delta < 0.0 || lambda_n < 0.0 || gamma_n < 0.0)
    throw std::domain_error("alpha_for_rates: inputs must be nonnegative");
  double mx = std::max({delta, lambda_n, gamma_n});
  if (mx == 0.0) throw std::domain_error("alpha_for_rates: all inputs zero");
  return C1 * mx;
}

RegularizedSolution brute_force_minimize(const DiffusionProblem& problem, int m,
                                         const ObservedData& y_delta, double alpha,
                                         const RegularizerSpec& reg, int n, double lo,
                                         double hi, int grid_points) {
  if (n > 3) throw std::invalid_argument("brute_force_minimize: refusing n > 3");
  if (n < 1 || grid_points < 2 || hi <= lo)
    throw std::invalid_argument("brute_force_minimize: bad grid");
  auto mesh = make_uniform_mesh(1, n);
  Objective obj{&problem, m, &y_delta, alpha, reg};

  std::vector<int> idx(n, 0);
  std::vector<double> u(n);
  double best_val = 0.0;
  std::vector<double> best_u;
  long evals = 0;
  bool done = false;
  while (!done) {
    for (int k = 0; k < n; ++k)
      u[k] = lo + (hi - lo) * idx[k] / (grid_points - 1);
    PiecewiseConstantField a(mesh, u);
    double J = obj.value(a, 0.0);
    ++evals;
    if (best_u.empty() || J < best_val) {
      best_val = J;
      best_u = u;
    }
    int k = 0;
    while (k < n && ++idx[k] == grid_points) {
      idx[k] = 0;
      ++k;
    }
    done = (k == n);
  }

  PiecewiseConstantField a(mesh, best_u);
  RegularizerSpec exact = reg;
  exact.smoothing_eps = 0.0;
  RegularizedSolution sol{a};
  sol.residual = obj.residual(a);
  sol.reg_value = evaluate(exact, a);
  sol.objective = best_val;
  sol.iterations = static_cast<int>(evals);
  sol.converged = true;
  return sol;
}

}  // namespace varreg
