#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "varreg/quadrature.hpp"
#include "varreg/regularizers.hpp"

using namespace varreg;

namespace {

NodalSplineField random_spline(int n, std::uint64_t seed) {
  auto mesh = make_uniform_mesh(2, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> c(2 * mesh->node_count());
  for (double& v : c) v = unif(rng);
  return NodalSplineField(mesh, 2, std::move(c));
}

// independent oracle for the discrete BD seminorm: per cell, quadrature of
// int_cell E_kl u for each component pair, absolute values outside the
// per-cell integrals
double bd_quadrature_oracle(const NodalSplineField& u) {
  const auto& mesh = u.mesh();
  const int n = mesh.cells_per_axis();
  const double h = mesh.h();
  double total = 0.0;
  std::vector<double> x(2);
  for (int ci = 0; ci < n; ++ci)
    for (int cj = 0; cj < n; ++cj) {
      double e00 = 0.0, e11 = 0.0, e01 = 0.0;
      for (int gi = 0; gi < 5; ++gi)
        for (int gj = 0; gj < 5; ++gj) {
          x[0] = (ci + 0.5 + 0.5 * Gauss5::nodes[gi]) * h;
          x[1] = (cj + 0.5 + 0.5 * Gauss5::nodes[gj]) * h;
          const double w = 0.25 * h * h * Gauss5::weights[gi] * Gauss5::weights[gj];
          e00 += w * u.partial(0, 0, x);
          e11 += w * u.partial(1, 1, x);
          e01 += w * 0.5 * (u.partial(0, 1, x) + u.partial(1, 0, x));
        }
      total += std::abs(e00) + std::abs(e11) + 2.0 * std::abs(e01);
    }
  return total;
}

}  // namespace

TEST_CASE("anisotropic TV in 1-D") {
  auto mesh = make_uniform_mesh(1, 4);
  PiecewiseConstantField u(mesh, {0.0, 1.0, 1.0, 0.0});
  CHECK(tv_anisotropic(u) == doctest::Approx(2.0).epsilon(1e-14));
  // smoothed variant at eps=1: two unit jumps, each sqrt(2)-1
  CHECK(tv_anisotropic(u, 1.0) ==
        doctest::Approx(2.0 * (std::sqrt(2.0) - 1.0)).epsilon(1e-13));
  PiecewiseConstantField c(mesh, {2.5, 2.5, 2.5, 2.5});
  CHECK(tv_anisotropic(c) == 0.0);
}

TEST_CASE("anisotropic TV in 2-D: hand-computed oracle") {
  // 3x3 grid, coeffs 1..9 row-major: 6 axis-0 faces with jump 3 and 6 axis-1
  // faces with jump 1, face measure 1/3 -> 6*3/3 + 6*1/3 = 8
  auto mesh = make_uniform_mesh(2, 3);
  std::vector<double> c(9);
  for (int i = 0; i < 9; ++i) c[i] = i + 1.0;
  PiecewiseConstantField u(mesh, c);
  CHECK(tv_anisotropic(u) == doctest::Approx(8.0).epsilon(1e-13));
}

TEST_CASE("isotropic TV on the criss-cross mesh") {
  auto mesh = make_crisscross_triangulation(2);
  // per-square constants [[a,b],[c,d]]; only the 4 inter-square grid edges
  // (length 1/2) carry jumps
  std::vector<double> coeffs(16);
  auto set_square = [&](int i, int j, double v) {
    for (int k = 0; k < 4; ++k) coeffs[4 * (2 * i + j) + k] = v;
  };
  set_square(0, 0, 0.0);
  set_square(0, 1, 1.0);
  set_square(1, 0, 2.0);
  set_square(1, 1, 3.0);
  PiecewiseConstantField u(mesh, coeffs);
  // |0-1| + |2-3| horizontal-neighbour jumps are along axis 1: (1 + 1)
  // |0-2| + |1-3| along axis 0: (2 + 2); each edge has length 1/2
  CHECK(tv_isotropic(u) == doctest::Approx(0.5 * (1 + 1 + 2 + 2)).epsilon(1e-13));

  auto grid = make_uniform_mesh(1, 2);
  PiecewiseConstantField g(grid, {0.0, 1.0});
  CHECK_THROWS_AS(tv_isotropic(g), std::domain_error);
}

TEST_CASE("TV_L1 and TV_L2 agree on axis-aligned variation") {
  // u(x,y) = g(x): grid field per column vs per-square criss-cross field
  const int n = 8;
  std::vector<double> gvals(n);
  for (int i = 0; i < n; ++i) gvals[i] = std::sin(3.0 * (i + 0.5) / n);

  auto grid = make_uniform_mesh(2, n);
  std::vector<double> gc(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gc[i * n + j] = gvals[i];
  PiecewiseConstantField ug(grid, gc);

  auto tri = make_crisscross_triangulation(n);
  std::vector<double> tc(4 * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < 4; ++k) tc[4 * (i * n + j) + k] = gvals[i];
  PiecewiseConstantField ut(tri, tc);

  CHECK(tv_anisotropic(ug) == doctest::Approx(tv_isotropic(ut)).epsilon(1e-10));
}

TEST_CASE("discrete BD seminorm: exact values") {
  for (int n : {2, 4}) {
    auto mesh = make_uniform_mesh(2, n);
    // constant field
    NodalSplineField c(mesh, 2, std::vector<double>(2 * mesh->node_count(), 3.0));
    CHECK(bd_total_deformation(c) == doctest::Approx(0.0).epsilon(1e-12));

    // u = (x, 0): E = [[1,0],[0,0]], total deformation 1
    std::vector<double> a(2 * mesh->node_count(), 0.0);
    for (std::size_t i = 0; i < mesh->node_count(); ++i)
      a[i] = mesh->node_coord(i)[0];
    NodalSplineField ux(mesh, 2, a);
    CHECK(bd_total_deformation(ux) == doctest::Approx(1.0).epsilon(1e-12));

    // u = (y, x): E = [[0,1],[1,0]], total deformation 2
    std::vector<double> b(2 * mesh->node_count(), 0.0);
    for (std::size_t i = 0; i < mesh->node_count(); ++i) {
      b[i] = mesh->node_coord(i)[1];
      b[mesh->node_count() + i] = mesh->node_coord(i)[0];
    }
    NodalSplineField uyx(mesh, 2, b);
    CHECK(bd_total_deformation(uyx) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("discrete BD seminorm agrees with the quadrature oracle") {
  for (int s = 0; s < 50; ++s) {
    int n = 2 + (s % 7);  // n in 2..8
    auto u = random_spline(n, 1000 + s);
    CHECK(bd_total_deformation(u) ==
          doctest::Approx(bd_quadrature_oracle(u)).epsilon(1e-9));
  }
}

TEST_CASE("positive homogeneity") {
  auto mesh = make_uniform_mesh(1, 5);
  PiecewiseConstantField u(mesh, {0.3, -1.2, 0.7, 2.0, -0.4});
  const double t = 2.5;
  std::vector<double> sc(u.coeffs().begin(), u.coeffs().end());
  for (double& v : sc) v *= t;
  PiecewiseConstantField tu(mesh, sc);
  CHECK(tv_anisotropic(tu) == doctest::Approx(t * tv_anisotropic(u)).epsilon(1e-13));
  CHECK(sup_norm(tu) == doctest::Approx(t * sup_norm(u)).epsilon(1e-13));

  auto v = random_spline(3, 9);
  std::vector<double> vc(v.coeffs().begin(), v.coeffs().end());
  for (double& w : vc) w *= t;
  NodalSplineField tv(v.mesh_ptr(), 2, vc);
  CHECK(bd_total_deformation(tv) ==
        doctest::Approx(t * bd_total_deformation(v)).epsilon(1e-12));
}

TEST_CASE("sup norm and smoothed variant") {
  auto mesh = make_uniform_mesh(1, 3);
  PiecewiseConstantField u(mesh, {1.0, -3.0, 3.0});
  CHECK(sup_norm(u) == 3.0);

  // log-sum-exp upper-bounds the max and converges to it as eps -> 0
  double prev = 1e300;
  for (double eps : {1.0, 0.1, 0.01, 0.001}) {
    double s = sup_norm_smoothed(u.coeffs(), eps);
    CHECK(s >= 3.0);
    CHECK(s <= prev);
    prev = s;
  }
  CHECK(sup_norm_smoothed(u.coeffs(), 1e-4) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("sparsity penalty") {
  std::vector<double> v = {1.0, -2.0, 0.5};
  CHECK(sparsity_penalty(v, 1.0) == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(sparsity_penalty(v, 0.5) ==
        doctest::Approx(1.0 + std::sqrt(2.0) + std::sqrt(0.5)).epsilon(1e-13));
  CHECK_THROWS_AS(sparsity_penalty(v, 0.0), std::domain_error);
  CHECK_THROWS_AS(sparsity_penalty(v, 1.5), std::domain_error);

  // quasinorm subadditivity sample: |a+b|^p <= |a|^p + |b|^p
  std::vector<double> a = {1.0, 0.0}, b = {0.0, 2.0}, ab = {1.0, 2.0};
  CHECK(sparsity_penalty(ab, 0.5) <=
        sparsity_penalty(a, 0.5) + sparsity_penalty(b, 0.5) + 1e-14);

  // smoothed value converges to the exact one
  RegularizerSpec spec{RegularizerKind::SPARSITY, 0.5, 0.0};
  auto mesh = make_uniform_mesh(1, 3);
  PiecewiseConstantField f(mesh, v);
  double exact = evaluate(spec, f);
  // smoothing bias scales like eps^p, so eps must be tiny for p = 1/2
  spec.smoothing_eps = 1e-12;
  CHECK(evaluate(spec, f) == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("subgradient inequality holds for seeded perturbations") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  auto check_pc = [&](const RegularizerSpec& spec, const PiecewiseConstantField& u) {
    auto xi = subgradient(spec, u);
    double ru = evaluate(spec, u);
    // active-selection pairing identity <xi,u> = R(u)
    double pair_u = 0.0;
    for (std::size_t i = 0; i < xi.coeffs.size(); ++i)
      pair_u += xi.coeffs[i] * u.coeffs()[i];
    CHECK(pair_u == doctest::Approx(ru).epsilon(1e-12));
    for (int s = 0; s < 100; ++s) {
      std::vector<double> vc(u.coeffs().begin(), u.coeffs().end());
      for (double& w : vc) w += unif(rng);
      PiecewiseConstantField v(u.on_grid() ? PiecewiseConstantField(u.grid_ptr(), vc)
                                           : PiecewiseConstantField(u.triangulation_ptr(), vc));
      double slack = evaluate(spec, v) - ru;
      for (std::size_t i = 0; i < vc.size(); ++i)
        slack -= xi.coeffs[i] * (vc[i] - u.coeffs()[i]);
      CHECK(slack >= -1e-10);
    }
  };

  auto grid = make_uniform_mesh(2, 3);
  std::vector<double> gc(9);
  for (double& v : gc) v = unif(rng);
  check_pc({RegularizerKind::TV_L1, 1.0, 0.0}, PiecewiseConstantField(grid, gc));
  check_pc({RegularizerKind::SUP_NORM, 1.0, 0.0}, PiecewiseConstantField(grid, gc));
  check_pc({RegularizerKind::SPARSITY, 1.0, 0.0}, PiecewiseConstantField(grid, gc));

  auto tri = make_crisscross_triangulation(2);
  std::vector<double> tc(16);
  for (double& v : tc) v = unif(rng);
  check_pc({RegularizerKind::TV_L2, 1.0, 0.0}, PiecewiseConstantField(tri, tc));

  // BD on nodal splines
  auto u = random_spline(3, 77);
  RegularizerSpec bd{RegularizerKind::BD, 1.0, 0.0};
  auto xi = subgradient(bd, u);
  double ru = evaluate(bd, u);
  double pair_u = 0.0;
  for (std::size_t i = 0; i < xi.coeffs.size(); ++i)
    pair_u += xi.coeffs[i] * u.coeffs()[i];
  CHECK(pair_u == doctest::Approx(ru).epsilon(1e-12));
  for (int s = 0; s < 100; ++s) {
    std::vector<double> vc(u.coeffs().begin(), u.coeffs().end());
    for (double& w : vc) w += unif(rng);
    NodalSplineField v(u.mesh_ptr(), 2, vc);
    double slack = evaluate(bd, v) - ru;
    for (std::size_t i = 0; i < vc.size(); ++i)
      slack -= xi.coeffs[i] * (vc[i] - u.coeffs()[i]);
    CHECK(slack >= -1e-10);
  }
}

TEST_CASE("smoothed gradient matches central finite differences") {
  auto mesh = make_uniform_mesh(1, 5);
  PiecewiseConstantField u(mesh, {0.3, 1.2, 0.7, 2.0, 0.4});
  const double eps = 1e-2, t = 1e-6;
  for (auto kind : {RegularizerKind::TV_L1, RegularizerKind::SUP_NORM,
                    RegularizerKind::SPARSITY}) {
    RegularizerSpec spec{kind, 1.0, 0.0};
    auto g = smoothed_gradient(spec, u, eps);
    RegularizerSpec sm = spec;
    sm.smoothing_eps = eps;
    for (std::size_t j = 0; j < 5; ++j) {
      auto up = u, dn = u;
      up.mutable_coeffs()[j] += t;
      dn.mutable_coeffs()[j] -= t;
      double fd = (evaluate(sm, up) - evaluate(sm, dn)) / (2 * t);
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("smoothing identity at eps = 0") {
  CHECK(smoothed_abs(-2.0, 0.0) == 2.0);
  CHECK(smoothed_abs(0.0, 1.0) == 0.0);
  CHECK(smoothed_abs(1.0, 1.0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
}
