#include "varreg/metrics.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "varreg/kernels.hpp"
#include "varreg/quadrature.hpp"

namespace varreg {

namespace {

double lp_accumulate(double acc, double diff, double vol, bool l1, double p) {
  if (l1 || p == 1.0) return acc + std::abs(diff) * vol;
  return acc + std::pow(std::abs(diff), p) * vol;
}

double lp_finish(double acc, bool l1, double p) {
  if (l1 || p == 1.0) return acc;
  return std::pow(acc, 1.0 / p);
}

}  // namespace

double z_norm_distance(const StrictMetricSpec& spec, const PiecewiseConstantField& u,
                       const PiecewiseConstantField& v) {
  const bool l1 = spec.z_norm == StrictMetricSpec::ZNorm::L1;
  if (!l1 && spec.p < 1.0)
    throw std::domain_error("strict_metric: Lp norm requires p >= 1");

  if (u.on_grid() && v.on_grid()) {
    const auto& mu = u.grid();
    const auto& mv = v.grid();
    if (mu.dim() != mv.dim())
      throw std::domain_error("strict_metric: incompatible mesh dimensions");
    const int nr = std::lcm(mu.cells_per_axis(), mv.cells_per_axis());
    ParallelepipedMesh fine(mu.dim(), nr);
    double acc = 0.0;
    const double vol = fine.cell_volume();
    for (std::size_t c = 0; c < fine.cell_count(); ++c) {
      auto x = fine.cell_centroid(c);
      acc = lp_accumulate(acc, u.value_at(x) - v.value_at(x), vol, l1, spec.p);
    }
    return lp_finish(acc, l1, spec.p);
  }
  if (u.on_triangulation() && v.on_triangulation()) {
    const auto& mt = u.triangulation();
    if (&mt != &v.triangulation() && mt.triangle_count() != v.triangulation().triangle_count())
      throw std::domain_error("strict_metric: triangulation fields need a common mesh");
    double acc = 0.0;
    for (std::size_t t = 0; t < mt.triangle_count(); ++t)
      acc = lp_accumulate(acc, u.coeffs()[t] - v.coeffs()[t], mt.triangle_area(t), l1, spec.p);
    return lp_finish(acc, l1, spec.p);
  }
  throw std::domain_error("strict_metric: fields live on incompatible meshes");
}

double strict_metric(const StrictMetricSpec& spec, const PiecewiseConstantField& u,
                     const PiecewiseConstantField& v) {
  RegularizerSpec exact = spec.reg;
  exact.smoothing_eps = 0.0;
  return z_norm_distance(spec, u, v) + std::abs(evaluate(exact, u) - evaluate(exact, v));
}

double strict_metric(const StrictMetricSpec& spec, const NodalSplineField& u,
                     const NodalSplineField& v) {
  if (u.mesh_ptr().get() != v.mesh_ptr().get() &&
      (u.mesh().dim() != v.mesh().dim() ||
       u.mesh().cells_per_axis() != v.mesh().cells_per_axis()))
    throw std::domain_error("strict_metric: spline fields need a common mesh");
  if (u.components() != v.components())
    throw std::domain_error("strict_metric: component mismatch");
  if (spec.z_norm != StrictMetricSpec::ZNorm::L1)
    throw std::domain_error("strict_metric: BD variant uses the L1 norm");

  // fixed quadrature rule per cell (2x2 panels of 5x5 Gauss points):
  // a positive fixed rule keeps the pseudometric axioms exact
  const auto& mesh = u.mesh();
  const int dim = mesh.dim();
  double acc = 0.0;
  std::vector<double> x(dim);
  const int panels = 2;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    auto cm = mesh.cell_multi(c);
    // tensor loop over panels and Gauss nodes per axis
    int total = 1;
    for (int k = 0; k < dim; ++k) total *= panels * 5;
    for (int q = 0; q < total; ++q) {
      int rest = q;
      double w = 1.0;
      for (int k = 0; k < dim; ++k) {
        int local = rest % (panels * 5);
        rest /= panels * 5;
        int panel = local / 5, gp = local % 5;
        double plo = (cm[k] + static_cast<double>(panel) / panels) * mesh.h();
        double phw = mesh.h() / (2.0 * panels);
        x[k] = plo + phw * (1.0 + Gauss5::nodes[gp]);
        w *= phw * Gauss5::weights[gp];
      }
      auto uv = u.value_at(x);
      auto vv = v.value_at(x);
      double norm2 = 0.0;
      for (int k = 0; k < u.components(); ++k) {
        double d = uv[k] - vv[k];
        norm2 += d * d;
      }
      acc += w * std::sqrt(norm2);
    }
  }
  RegularizerSpec exact = spec.reg;
  exact.smoothing_eps = 0.0;
  return acc + std::abs(evaluate(exact, u) - evaluate(exact, v));
}

namespace {

void check_base_point(const SubgradientElement& xi, std::span<const double> u_coeffs) {
  if (xi.at_coeffs.size() != u_coeffs.size())
    throw std::domain_error("bregman_distance: subgradient taken at a different field");
  for (std::size_t i = 0; i < u_coeffs.size(); ++i)
    if (xi.at_coeffs[i] != u_coeffs[i])
      throw std::domain_error("bregman_distance: subgradient taken at a different field");
}

double bregman_core(double rv, double ru, const SubgradientElement& xi,
                    std::span<const double> v, std::span<const double> u) {
  double pair = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) pair += xi.coeffs[i] * (v[i] - u[i]);
  return rv - ru - pair;
}

}  // namespace

double bregman_distance(const RegularizerSpec& reg, const PiecewiseConstantField& v,
                        const PiecewiseConstantField& u, const SubgradientElement& xi) {
  check_base_point(xi, u.coeffs());
  RegularizerSpec exact = reg;
  exact.smoothing_eps = 0.0;
  return bregman_core(evaluate(exact, v), evaluate(exact, u), xi, v.coeffs(), u.coeffs());
}

double bregman_distance(const RegularizerSpec& reg, const NodalSplineField& v,
                        const NodalSplineField& u, const SubgradientElement& xi) {
  check_base_point(xi, u.coeffs());
  RegularizerSpec exact = reg;
  exact.smoothing_eps = 0.0;
  return bregman_core(evaluate(exact, v), evaluate(exact, u), xi, v.coeffs(), u.coeffs());
}

namespace {

PiecewiseConstantField field_difference(const PiecewiseConstantField& a,
                                        const PiecewiseConstantField& b) {
  if (!a.on_grid() || !b.on_grid() ||
      a.grid().cells_per_axis() != b.grid().cells_per_axis() ||
      a.grid().dim() != b.grid().dim())
    throw std::domain_error("rate quantities: fields must share the parameter grid");
  std::vector<double> d(a.coeffs().begin(), a.coeffs().end());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b.coeffs()[i];
  return PiecewiseConstantField(a.grid_ptr(), std::move(d));
}

}  // namespace

RateQuantities compute_rate_quantities(const PiecewiseConstantField& u_bar,
                                       const PiecewiseConstantField& v_n,
                                       const FemSolution& omega,
                                       const DiffusionProblem& problem, int m,
                                       const RegularizerSpec& reg,
                                       const SubgradientElement& xi, double delta,
                                       double rho_m, double c_nonlin, double zeta_n) {
  RateQuantities q;
  q.delta = delta;
  q.rho_m = rho_m;
  q.c_nonlin = c_nonlin;
  q.omega_norm = l2_norm(omega);
  if (c_nonlin * q.omega_norm >= 1.0)
    throw std::domain_error(
        "compute_rate_quantities: nonlinearity condition c*||omega|| < 1 violated");
  auto diff = field_difference(v_n, u_bar);
  q.gamma_n = l2_norm(frechet_apply(u_bar, diff, problem, m));
  q.lambda_n = bregman_distance(reg, v_n, u_bar, xi);
  double root = rho_m + c_nonlin * q.lambda_n + q.gamma_n + delta;
  q.beta_n = root * root;
  q.zeta_n = zeta_n;
  return q;
}

double estimate_nonlinearity_constant(const PiecewiseConstantField& u_bar,
                                      const DiffusionProblem& problem, int m,
                                      const RegularizerSpec& reg,
                                      const SubgradientElement& xi, int samples,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.2, 0.2);
  double best = 0.0;
  auto Fu = assemble_and_solve(u_bar, problem, m);
  for (int s = 0; s < samples; ++s) {
    std::vector<double> pert(u_bar.coeffs().size());
    for (double& v : pert) v = unif(rng);
    std::vector<double> uc(u_bar.coeffs().begin(), u_bar.coeffs().end());
    for (std::size_t i = 0; i < uc.size(); ++i)
      uc[i] = std::max(problem.c_lower, uc[i] + pert[i]);
    PiecewiseConstantField u(u_bar.grid_ptr(), uc);
    auto diff = field_difference(u, u_bar);
    auto lin = frechet_apply(u_bar, diff, problem, m);
    auto F = assemble_and_solve(u, problem, m);
    std::vector<double> rem(F.interior().begin(), F.interior().end());
    for (int i = 0; i < m - 1; ++i) rem[i] -= Fu.interior()[i] + lin.interior()[i];
    double num = l2_norm(FemSolution(m, std::move(rem)));
    double den = bregman_distance(reg, u, u_bar, xi);
    if (den > 1e-14) best = std::max(best, num / den);
  }
  return best;
}

}  // namespace varreg
