#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "varreg/groundwater.hpp"

using namespace varreg;

namespace {

PiecewiseConstantField constant_coefficient(double value, int n) {
  return PiecewiseConstantField(make_uniform_mesh(1, n), std::vector<double>(n, value));
}

PiecewiseConstantField random_coefficient(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 3.0);
  std::vector<double> c(n);
  for (double& v : c) v = unif(rng);
  return PiecewiseConstantField(make_uniform_mesh(1, n), c);
}

}  // namespace

TEST_CASE("a == 1, f == 1: nodal values match u = x(1-x)/2 exactly") {
  auto problem = make_diffusion_problem();
  auto a = constant_coefficient(1.0, 4);
  for (int m : {4, 16, 64}) {
    auto u = assemble_and_solve(a, problem, m);
    for (int i = 0; i <= m; ++i) {
      double x = static_cast<double>(i) / m;
      CHECK(u.node(i) == doctest::Approx(0.5 * x * (1.0 - x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("doubling the coefficient halves the solution") {
  auto problem = make_diffusion_problem();
  auto a1 = constant_coefficient(1.0, 4);
  auto a2 = constant_coefficient(2.0, 4);
  auto u1 = assemble_and_solve(a1, problem, 32);
  auto u2 = assemble_and_solve(a2, problem, 32);
  for (int i = 1; i < 32; ++i)
    CHECK(u2.node(i) == doctest::Approx(0.5 * u1.node(i)).epsilon(1e-12));
}

TEST_CASE("piecewise coefficient: closed-form flux solution") {
  // a = 1 on (0,1/2), a = 2 on (1/2,1), f == 1.  Flux q(x) = q0 - x with
  // q0 fixed by u(1) = 0: q0 = 5/12.  u(x) = int_0^x (q0 - t)/a(t) dt.
  auto problem = make_diffusion_problem();
  auto mesh = make_uniform_mesh(1, 2);
  PiecewiseConstantField a(mesh, {1.0, 2.0});
  const double q0 = 5.0 / 12.0;
  auto exact = [&](double x) {
    if (x <= 0.5) return q0 * x - 0.5 * x * x;
    double u_half = q0 * 0.5 - 0.125;
    return u_half + 0.5 * (q0 * (x - 0.5) - 0.5 * (x * x - 0.25));
  };
  // even m puts the coefficient jump on a grid node; nodal values are exact
  for (int m : {4, 8, 64}) {
    auto u = assemble_and_solve(a, problem, m);
    for (int i = 0; i <= m; ++i)
      CHECK(u.node(i) == doctest::Approx(exact(static_cast<double>(i) / m)).epsilon(1e-10));
  }
}

TEST_CASE("approximation error decays like m^-2") {
  auto problem = make_diffusion_problem();
  auto a = random_coefficient(8, 3);
  auto ref = reference_forward(a, problem);
  std::vector<double> logm, loge;
  for (int m : {8, 16, 32, 64}) {
    auto u = assemble_and_solve(a, problem, m);
    double err = l2_distance(u, ref);
    CHECK(err > 0.0);
    logm.push_back(std::log(static_cast<double>(m)));
    loge.push_back(std::log(err));
  }
  // least-squares slope of log err vs log m
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = logm.size();
  for (std::size_t i = 0; i < logm.size(); ++i) {
    sx += logm[i];
    sy += loge[i];
    sxx += logm[i] * logm[i];
    sxy += logm[i] * loge[i];
  }
  double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(slope < -1.8);
  CHECK(slope > -2.2);
}

TEST_CASE("Frechet derivative: first-order remainder") {
  auto problem = make_diffusion_problem();
  auto a = random_coefficient(8, 11);
  auto h = random_coefficient(8, 12);
  for (double& v : h.mutable_coeffs()) v -= 1.5;  // allow signed perturbations
  const int m = 64;
  auto fa = assemble_and_solve(a, problem, m);
  auto dh = frechet_apply(a, h, problem, m);
  std::vector<double> logt, logr;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    std::vector<double> pc(a.coeffs().begin(), a.coeffs().end());
    for (std::size_t i = 0; i < pc.size(); ++i) pc[i] += t * h.coeffs()[i];
    PiecewiseConstantField ap(a.grid_ptr(), pc);
    auto fap = assemble_and_solve(ap, problem, m);
    // remainder ||(F(a+th)-F(a))/t - F'(a)h||
    FemSolution diff = fap;
    for (int i = 0; i < m - 1; ++i)
      diff.mutable_interior()[i] = (fap.interior()[i] - fa.interior()[i]) / t -
                                   dh.interior()[i];
    FemSolution zero(m, std::vector<double>(m - 1, 0.0));
    double rem = l2_distance(diff, zero);
    CHECK(rem > 0.0);
    logt.push_back(std::log(t));
    logr.push_back(std::log(rem));
  }
  double slope = (logr.front() - logr.back()) / (logt.front() - logt.back());
  CHECK(slope > 0.9);
  CHECK(slope < 1.1);
}

TEST_CASE("adjoint duality via polarization") {
  auto problem = make_diffusion_problem();
  const int m = 32;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    auto a = random_coefficient(8, 500 + s);
    auto h = random_coefficient(8, 700 + s);
    for (double& v : h.mutable_coeffs()) v = unif(rng);
    std::vector<double> wv(m - 1);
    for (double& v : wv) v = unif(rng);
    FemSolution w(m, wv);

    auto fh = frechet_apply(a, h, problem, m);
    // <F'h, w>_L2 by polarization of the norm
    FemSolution plus = fh, minus = fh;
    for (int i = 0; i < m - 1; ++i) {
      plus.mutable_interior()[i] += w.interior()[i];
      minus.mutable_interior()[i] -= w.interior()[i];
    }
    double lhs = 0.25 * (l2_norm(plus) * l2_norm(plus) -
                         l2_norm(minus) * l2_norm(minus));
    auto g = adjoint_apply(a, w, problem, m);
    double rhs = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) rhs += h.coeffs()[j] * g[j];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("observed data: determinism and exact noise level") {
  auto problem = make_diffusion_problem();
  auto a = random_coefficient(4, 21);
  const int m = 64;
  auto d1 = make_observed_data(a, problem, m, 0.01, 42);
  auto d2 = make_observed_data(a, problem, m, 0.01, 42);
  for (int i = 0; i < m - 1; ++i)
    CHECK(d1.y_delta.interior()[i] == d2.y_delta.interior()[i]);

  auto exact = make_observed_data(a, problem, m, 0.0, 42);
  CHECK(l2_distance(d1.y_delta, exact.y_delta) == doctest::Approx(0.01).epsilon(1e-12));

  auto d3 = make_observed_data(a, problem, m, 0.01, 43);
  double diff = l2_distance(d1.y_delta, d3.y_delta);
  CHECK(diff > 0.0);
}

TEST_CASE("error handling") {
  auto problem = make_diffusion_problem(0.5);
  auto mesh = make_uniform_mesh(1, 2);
  PiecewiseConstantField bad(mesh, {0.4, 1.0});  // below c_lower
  CHECK_THROWS_AS(assemble_and_solve(bad, problem, 16), std::domain_error);

  PiecewiseConstantField ok(mesh, {1.0, 1.0});
  CHECK_THROWS_AS(assemble_and_solve(ok, problem, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_observed_data(ok, problem, 16, -0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_diffusion_problem(0.0), std::invalid_argument);

  auto mesh2 = make_uniform_mesh(2, 2);
  PiecewiseConstantField planar(mesh2, {1.0, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(assemble_and_solve(planar, problem, 16), std::domain_error);

  CHECK_THROWS_AS(FemSolution(8, std::vector<double>(3, 0.0)), std::invalid_argument);
}
