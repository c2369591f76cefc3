#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "varreg/fields.hpp"
#include "varreg/mesh.hpp"
#include "varreg/quadrature.hpp"

using namespace varreg;

TEST_CASE("uniform mesh invariants") {
  ParallelepipedMesh m1(1, 4);
  CHECK(m1.cell_count() == 4);
  CHECK(m1.h() == doctest::Approx(0.25));

  ParallelepipedMesh m2(2, 3);
  CHECK(m2.cell_count() == 9);
  CHECK(m2.node_count() == 16);
  CHECK(m2.cell_count() * m2.cell_volume() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(ParallelepipedMesh(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(ParallelepipedMesh(2, 0), std::invalid_argument);
}

TEST_CASE("interior face count against brute-force oracle") {
  // oracle: enumerate all cell pairs whose multi-indices differ by one step
  // along exactly one axis
  for (auto [dim, n] : {std::pair{3, 2}, std::pair{2, 3}, std::pair{1, 5}}) {
    ParallelepipedMesh mesh(dim, n);
    std::set<std::pair<std::size_t, std::size_t>> oracle;
    for (std::size_t a = 0; a < mesh.cell_count(); ++a) {
      auto ma = mesh.cell_multi(a);
      for (int k = 0; k < dim; ++k) {
        if (ma[k] + 1 >= n) continue;
        auto mb = ma;
        mb[k] += 1;
        oracle.insert({a, mesh.cell_index(mb)});
      }
    }
    auto faces = mesh.interior_faces();
    CHECK(faces.size() == oracle.size());
    for (const auto& f : faces)
      CHECK(oracle.count({f.lower_cell, f.upper_cell}) == 1);
  }
  // 3-D n=2: 3 * 2^2 * (2-1) = 12
  CHECK(ParallelepipedMesh(3, 2).interior_faces().size() == 12);
  CHECK(ParallelepipedMesh(3, 2).face_measure() == doctest::Approx(0.25));
}

TEST_CASE("grid locate") {
  ParallelepipedMesh mesh(2, 4);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c)
    CHECK(mesh.locate(mesh.cell_centroid(c)) == c);
}

TEST_CASE("criss-cross triangulation") {
  auto t1 = build_crisscross_triangulation(1);
  CHECK(t1.triangle_count() == 4);
  CHECK(t1.vertex_count() == 5);
  CHECK(build_crisscross_triangulation(2).triangle_count() == 16);

  auto t3 = build_crisscross_triangulation(3);
  double area = 0.0;
  for (std::size_t i = 0; i < t3.triangle_count(); ++i) {
    CHECK(t3.triangle_area(i) > 0.0);
    area += t3.triangle_area(i);
  }
  CHECK(area == doctest::Approx(1.0).epsilon(1e-12));

  for (std::size_t i = 0; i < t3.triangle_count(); ++i) {
    auto c = t3.triangle_centroid(i);
    CHECK(t3.locate(c[0], c[1]) == i);
  }
  // every interior edge is shared by exactly two distinct triangles
  for (const auto& e : t3.interior_edges()) CHECK(e.tri_a != e.tri_b);
  // Euler-style count: per square 4 interior spokes; between squares shared
  // grid edges: 2*n*(n-1) of them
  const std::size_t n = 3;
  CHECK(t3.interior_edges().size() == 4 * n * n + 2 * n * (n - 1));

  CHECK_THROWS_AS(build_crisscross_triangulation(0), std::invalid_argument);
  CHECK_THROWS_AS(t3.locate(-0.5, 0.5), std::domain_error);
}

TEST_CASE("gravity-center sampling") {
  auto mesh2 = make_uniform_mesh(1, 2);
  auto c3 = sample_gravity_centers(scalar_function_1d([](double) { return 3.0; }), mesh2);
  CHECK(c3.coeffs()[0] == 3.0);
  CHECK(c3.coeffs()[1] == 3.0);

  auto id = sample_gravity_centers(scalar_function_1d([](double x) { return x; }), mesh2);
  CHECK(id.coeffs()[0] == doctest::Approx(0.25));
  CHECK(id.coeffs()[1] == doctest::Approx(0.75));

  // L1 error of midpoint sampling of sin(2 pi x) at n=64 is O(1/n):
  // approximately (1/4) h int |f'| = 1/n
  const int n = 64;
  auto mesh = make_uniform_mesh(1, n);
  auto f = scalar_function_1d([](double x) { return std::sin(2 * M_PI * x); });
  auto field = sample_gravity_centers(f, mesh);
  double err = 0.0;
  for (int j = 0; j < n; ++j) {
    double c = field.coeffs()[j];
    err += gauss5_composite(j / 64.0, (j + 1) / 64.0, 2,
                            [&](double x) { return std::abs(c - f(std::span(&x, 1))); });
  }
  CHECK(err < 2.0 / n);
  CHECK(err > 0.5 / n);

  // sup bound for continuous f
  double mx = 0.0;
  for (double v : field.coeffs()) mx = std::max(mx, std::abs(v));
  CHECK(mx <= 1.0);
}

TEST_CASE("nodal interpolation reproduces affine fields") {
  auto mesh = make_uniform_mesh(2, 3);
  VectorFunction aff{[](std::span<const double> x) {
    return std::vector<double>{1.0 + 2.0 * x[0] - x[1], 0.5 * x[0] + 3.0 * x[1]};
  }};
  auto u = interpolate_nodal(aff, mesh, 2);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    std::vector<double> x = {unif(rng), unif(rng)};
    auto v = u.value_at(x);
    auto w = aff.f(x);
    CHECK(v[0] == doctest::Approx(w[0]).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(w[1]).epsilon(1e-12));
  }
  // nodal exactness
  for (std::size_t a = 0; a < mesh->node_count(); ++a) {
    auto x = mesh->node_coord(a);
    auto w = aff.f(x);
    CHECK(u.coeff(0, a) == doctest::Approx(w[0]).epsilon(1e-14));
    CHECK(u.coeff(1, a) == doctest::Approx(w[1]).epsilon(1e-14));
  }
  // exact partial derivatives of the affine interpolant
  std::vector<double> x0 = {0.3, 0.6};
  CHECK(u.partial(0, 0, x0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(u.partial(0, 1, x0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(u.partial(1, 0, x0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(u.partial(1, 1, x0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("hat basis: nodal values and partition of unity") {
  std::vector<double> zero = {0.0, 0.0};
  CHECK(hat_value(zero) == 1.0);
  std::vector<double> other = {1.0, 0.0};
  CHECK(hat_value(other) == 0.0);

  // all-ones coefficients reproduce the constant 1
  auto mesh = make_uniform_mesh(2, 4);
  NodalSplineField ones(mesh, 1, std::vector<double>(mesh->node_count(), 1.0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    std::vector<double> x = {unif(rng), unif(rng)};
    CHECK(ones.value_at(x)[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mollifier kernel") {
  for (double eps : {0.1, 0.05, 0.01}) {
    double mass = gauss5_composite(-eps, eps, 32,
                                   [&](double t) { return mollifier_kernel_1d(t, eps); });
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mollifier_kernel_1d(1.01 * eps, eps) == 0.0);
    CHECK(mollifier_kernel_1d(-1.01 * eps, eps) == 0.0);
    CHECK(mollifier_kernel_1d(0.3 * eps, eps) > 0.0);
  }
}

TEST_CASE("mollification: plateau exactness and L1 convergence") {
  // constant 1: smoothing is exact away from the boundary layer
  ScalarFunction one = scalar_function_1d([](double) { return 1.0; });
  MollifierSpec spec{0.05};
  for (double x : {0.1, 0.5, 0.9})
    CHECK(mollify(one, spec, x) == doctest::Approx(1.0).epsilon(1e-9));

  // jump function: ||J_eps * f - f||_L1 shrinks as eps does
  ScalarFunction step = scalar_function_1d([](double x) { return x < 0.5 ? 0.0 : 1.0; },
                                           {0.5});
  std::vector<double> errs;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    MollifierSpec s{eps};
    double err = gauss5_broken(0.0, 1.0, {0.5}, [&](double x) {
      return std::abs(mollify(step, s, x) - step.f(std::span(&x, 1)));
    }, 16);
    errs.push_back(err);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] < errs[i - 1]);
  CHECK(errs.back() < 0.05);
}

TEST_CASE("piecewise-constant evaluation and errors") {
  auto mesh = make_uniform_mesh(2, 2);
  PiecewiseConstantField f(mesh, {1.0, 2.0, 3.0, 4.0});
  for (std::size_t c = 0; c < mesh->cell_count(); ++c)
    CHECK(f.value_at(mesh->cell_centroid(c)) == f.coeffs()[c]);
  CHECK_THROWS_AS(PiecewiseConstantField(mesh, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(f.triangulation(), std::domain_error);
}

TEST_CASE("csv dumps carry a header row") {
  ParallelepipedMesh mesh(2, 2);
  std::ostringstream os;
  write_mesh_csv(mesh, os);
  CHECK(os.str().find("cell") == 0);

  auto mp = make_uniform_mesh(1, 2);
  PiecewiseConstantField f(mp, {1.0, 2.0});
  std::ostringstream os2;
  write_field_csv(f, os2);
  CHECK(os2.str().substr(0, 4) == "cell");

  NodalSplineField u(mp, 1, {0.0, 1.0, 0.0});
  std::ostringstream os3;
  write_field_csv(u, os3);
  CHECK(os3.str().substr(0, 4) == "node");
}
