#include "varreg/groundwater.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "varreg/quadrature.hpp"

namespace varreg {

DiffusionProblem make_diffusion_problem(double c_lower) {
  DiffusionProblem p;
  p.f.f = [](std::span<const double>) { return 1.0; };
  p.c_lower = c_lower;
  if (c_lower <= 0.0) throw std::invalid_argument("DiffusionProblem: c_lower must be > 0");
  return p;
}

DiffusionProblem make_diffusion_problem(ScalarFunction f, double c_lower) {
  if (c_lower <= 0.0) throw std::invalid_argument("DiffusionProblem: c_lower must be > 0");
  return DiffusionProblem{std::move(f), c_lower};
}

FemSolution::FemSolution(int m, std::vector<double> interior_values)
    : m_(m), interior_(std::move(interior_values)) {
  if (m_ < 2) throw std::invalid_argument("FemSolution: m must be >= 2");
  if (interior_.size() != static_cast<std::size_t>(m_ - 1))
    throw std::invalid_argument("FemSolution: interior size must be m-1");
  for (double v : interior_)
    if (!std::isfinite(v)) throw std::invalid_argument("FemSolution: non-finite value");
}

double FemSolution::node(int i) const {
  if (i <= 0 || i >= m_) return 0.0;
  return interior_[i - 1];
}

double FemSolution::value_at(double x) const {
  double s = std::clamp(x, 0.0, 1.0) * m_;
  int i = std::clamp(static_cast<int>(std::floor(s)), 0, m_ - 1);
  double t = s - i;
  return (1.0 - t) * node(i) + t * node(i + 1);
}

namespace {

void check_admissible(const PiecewiseConstantField& a, const DiffusionProblem& problem) {
  if (!a.on_grid() || a.grid().dim() != 1)
    throw std::domain_error("groundwater: coefficient must be a 1-D grid field");
  for (double v : a.coeffs())
    if (v < problem.c_lower - 1e-14)
      throw std::domain_error("groundwater: coefficient violates lower bound a >= c");
}

// Exact integral of a piecewise-constant 1-D field over [lo, hi].
double integrate_cells(const PiecewiseConstantField& a, double lo, double hi) {
  const int n = a.grid().cells_per_axis();
  auto c = a.coeffs();
  double s = 0.0;
  int j0 = std::clamp(static_cast<int>(std::floor(lo * n)), 0, n - 1);
  int j1 = std::clamp(static_cast<int>(std::ceil(hi * n)) - 1, 0, n - 1);
  for (int j = j0; j <= j1; ++j) {
    double cl = std::max(lo, static_cast<double>(j) / n);
    double cr = std::min(hi, static_cast<double>(j + 1) / n);
    if (cr > cl) s += c[j] * (cr - cl);
  }
  return s;
}

// Per-interval integrals I_i = int_{(i-1)/m}^{i/m} a, i = 1..m.
std::vector<double> interval_integrals(const PiecewiseConstantField& a, int m) {
  std::vector<double> I(m + 1, 0.0);
  for (int i = 1; i <= m; ++i)
    I[i] = integrate_cells(a, static_cast<double>(i - 1) / m, static_cast<double>(i) / m);
  return I;
}

// Tridiagonal SPD solve (Thomas).  diag/off sized m-1 and m-2.
std::vector<double> thomas_solve(std::vector<double> diag, std::vector<double> off,
                                 std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0) throw std::runtime_error("groundwater: singular system");
    double w = off[i - 1] / diag[i - 1];
    diag[i] -= w * off[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (diag[n - 1] == 0.0) throw std::runtime_error("groundwater: singular system");
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - off[i] * x[i + 1]) / diag[i];
  return x;
}

struct Stiffness {
  std::vector<double> diag;  // m-1
  std::vector<double> off;   // m-2
};

Stiffness assemble_stiffness(const std::vector<double>& I, int m) {
  const double m2 = static_cast<double>(m) * m;
  Stiffness K;
  K.diag.resize(m - 1);
  K.off.resize(m - 2);
  for (int i = 1; i < m; ++i) K.diag[i - 1] = m2 * (I[i] + I[i + 1]);
  for (int i = 1; i < m - 1; ++i) K.off[i - 1] = -m2 * I[i + 1];
  return K;
}

std::vector<double> load_vector(const DiffusionProblem& problem, int m) {
  std::vector<double> b(m - 1);
  const double h = 1.0 / m;
  for (int i = 1; i < m; ++i) {
    double xi = i * h;
    auto phi = [&](double x) {
      double t = 1.0 - std::abs(x - xi) * m;
      std::array<double, 1> p{x};
      return t > 0.0 ? t * problem.f(p) : 0.0;
    };
    std::vector<double> breaks;
    if (!problem.f.breaks.empty())
      for (double br : problem.f.breaks[0])
        if (br > xi - h && br < xi + h) breaks.push_back(br);
    breaks.push_back(xi);
    b[i - 1] = gauss5_broken(xi - h, xi + h, std::move(breaks), phi, 1);
  }
  return b;
}

// y = K(coef) x for x given with boundary zeros folded in.
std::vector<double> stiffness_apply(const std::vector<double>& I, int m,
                                    const FemSolution& u) {
  const double m2 = static_cast<double>(m) * m;
  std::vector<double> y(m - 1);
  for (int i = 1; i < m; ++i)
    y[i - 1] = m2 * (I[i] * (u.node(i) - u.node(i - 1)) +
                     I[i + 1] * (u.node(i) - u.node(i + 1)));
  return y;
}

std::vector<double> mass_apply(const FemSolution& w) {
  const int m = w.m();
  const double h = 1.0 / m;
  std::vector<double> y(m - 1);
  for (int i = 1; i < m; ++i)
    y[i - 1] = h / 6.0 * (w.node(i - 1) + 4.0 * w.node(i) + w.node(i + 1));
  return y;
}

}  // namespace

double l2_norm(const FemSolution& u) {
  auto y = mass_apply(u);
  double s = 0.0;
  for (int i = 0; i < u.m() - 1; ++i) s += u.interior()[i] * y[i];
  return std::sqrt(std::max(0.0, s));
}

double l2_distance(const FemSolution& u, const FemSolution& v) {
  // merge both grids; the difference is linear on each merged interval,
  // Simpson is exact for its square
  const int mu = u.m(), mv = v.m();
  int iu = 0, iv = 0;
  double x = 0.0, s = 0.0;
  while (x < 1.0) {
    double nu = static_cast<double>(iu + 1) / mu;
    double nv = static_cast<double>(iv + 1) / mv;
    double nx = std::min(nu, nv);
    double a = u.value_at(x) - v.value_at(x);
    double mid = u.value_at(0.5 * (x + nx)) - v.value_at(0.5 * (x + nx));
    double b = u.value_at(nx) - v.value_at(nx);
    s += (nx - x) / 6.0 * (a * a + 4.0 * mid * mid + b * b);
    if (nu <= nx) ++iu;
    if (nv <= nx) ++iv;
    x = nx;
  }
  return std::sqrt(std::max(0.0, s));
}

FemSolution assemble_and_solve(const PiecewiseConstantField& a,
                               const DiffusionProblem& problem, int m) {
  if (m < 2) throw std::invalid_argument("assemble_and_solve: m must be >= 2");
  check_admissible(a, problem);
  auto I = interval_integrals(a, m);
  auto K = assemble_stiffness(I, m);
  auto b = load_vector(problem, m);
  return FemSolution(m, thomas_solve(std::move(K.diag), std::move(K.off), std::move(b)));
}

FemSolution reference_forward(const PiecewiseConstantField& a,
                              const DiffusionProblem& problem, int m_ref) {
  return assemble_and_solve(a, problem, m_ref);
}

FemSolution frechet_apply(const PiecewiseConstantField& a,
                          const PiecewiseConstantField& h,
                          const DiffusionProblem& problem, int m) {
  check_admissible(a, problem);
  if (!h.on_grid() || h.grid().dim() != 1)
    throw std::domain_error("frechet_apply: perturbation must be a 1-D grid field");
  auto u = assemble_and_solve(a, problem, m);
  auto Ih = interval_integrals(h, m);
  auto rhs = stiffness_apply(Ih, m, u);
  for (double& v : rhs) v = -v;
  auto Ia = interval_integrals(a, m);
  auto K = assemble_stiffness(Ia, m);
  return FemSolution(m, thomas_solve(std::move(K.diag), std::move(K.off), std::move(rhs)));
}

std::vector<double> adjoint_apply(const PiecewiseConstantField& a,
                                  const FemSolution& w,
                                  const DiffusionProblem& problem, int m) {
  check_admissible(a, problem);
  if (w.m() != m) throw std::invalid_argument("adjoint_apply: data resolution mismatch");
  auto u = assemble_and_solve(a, problem, m);
  auto Ia = interval_integrals(a, m);
  auto K = assemble_stiffness(Ia, m);
  auto z = FemSolution(m, thomas_solve(std::move(K.diag), std::move(K.off), mass_apply(w)));

  // g_j = -int_{cell j} u_x z_x; both derivatives are constant per FEM interval
  const int n = a.grid().cells_per_axis();
  std::vector<double> g(n, 0.0);
  for (int i = 1; i <= m; ++i) {
    double du = (u.node(i) - u.node(i - 1)) * m;
    double dz = (z.node(i) - z.node(i - 1)) * m;
    double lo = static_cast<double>(i - 1) / m, hi = static_cast<double>(i) / m;
    int j0 = std::clamp(static_cast<int>(std::floor(lo * n)), 0, n - 1);
    int j1 = std::clamp(static_cast<int>(std::ceil(hi * n)) - 1, 0, n - 1);
    for (int j = j0; j <= j1; ++j) {
      double cl = std::max(lo, static_cast<double>(j) / n);
      double cr = std::min(hi, static_cast<double>(j + 1) / n);
      if (cr > cl) g[j] -= du * dz * (cr - cl);
    }
  }
  return g;
}

ObservedData make_observed_data(const PiecewiseConstantField& a_true,
                                const DiffusionProblem& problem, int m,
                                double delta, std::uint64_t seed) {
  if (delta < 0.0) throw std::invalid_argument("make_observed_data: delta must be >= 0");
  auto y_ref = reference_forward(a_true, problem);
  std::vector<double> nodal(m - 1);
  for (int i = 1; i < m; ++i) nodal[i - 1] = y_ref.value_at(static_cast<double>(i) / m);
  if (delta > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> noise(m - 1);
    for (double& v : noise) v = gauss(rng);
    double norm = l2_norm(FemSolution(m, noise));
    if (norm == 0.0) throw std::runtime_error("make_observed_data: degenerate noise draw");
    for (int i = 0; i < m - 1; ++i) nodal[i] += noise[i] * (delta / norm);
  }
  return ObservedData{FemSolution(m, std::move(nodal)), delta, seed};
}

}  // namespace varreg
