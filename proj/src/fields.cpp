#include "varreg/fields.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "varreg/quadrature.hpp"

namespace varreg {

ScalarFunction scalar_function_1d(std::function<double(double)> f,
                                  std::vector<double> breaks) {
  ScalarFunction sf;
  sf.f = [f = std::move(f)](std::span<const double> x) { return f(x[0]); };
  sf.breaks = {std::move(breaks)};
  return sf;
}

PiecewiseConstantField::PiecewiseConstantField(
    std::shared_ptr<const ParallelepipedMesh> mesh, std::vector<double> coeffs)
    : pmesh_(std::move(mesh)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != pmesh_->cell_count())
    throw std::invalid_argument("PiecewiseConstantField: coeffs/cell count mismatch");
}

PiecewiseConstantField::PiecewiseConstantField(
    std::shared_ptr<const TriangulationMesh> mesh, std::vector<double> coeffs)
    : tmesh_(std::move(mesh)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != tmesh_->triangle_count())
    throw std::invalid_argument("PiecewiseConstantField: coeffs/triangle count mismatch");
}

const ParallelepipedMesh& PiecewiseConstantField::grid() const {
  if (!pmesh_) throw std::domain_error("field is not on a parallelepiped mesh");
  return *pmesh_;
}

const TriangulationMesh& PiecewiseConstantField::triangulation() const {
  if (!tmesh_) throw std::domain_error("field is not on a triangulation");
  return *tmesh_;
}

double PiecewiseConstantField::value_at(std::span<const double> x) const {
  if (pmesh_) return coeffs_[pmesh_->locate(x)];
  if (x.size() < 2) throw std::domain_error("triangulation field needs 2-D coordinates");
  return coeffs_[tmesh_->locate(x[0], x[1])];
}

double PiecewiseConstantField::value_at(double x) const {
  return value_at(std::span<const double>(&x, 1));
}

NodalSplineField::NodalSplineField(std::shared_ptr<const ParallelepipedMesh> mesh,
                                   int components, std::vector<double> coeffs)
    : mesh_(std::move(mesh)), components_(components), coeffs_(std::move(coeffs)) {
  if (components_ < 1)
    throw std::invalid_argument("NodalSplineField: components must be >= 1");
  if (coeffs_.size() != components_ * mesh_->node_count())
    throw std::invalid_argument("NodalSplineField: coeffs shape mismatch");
}

namespace {

// Base node multi-index and local coordinates t in [0,1]^N for x.
void local_coords(const ParallelepipedMesh& mesh, std::span<const double> x,
                  std::vector<int>& base, std::vector<double>& t) {
  const int dim = mesh.dim();
  const int n = mesh.cells_per_axis();
  base.resize(dim);
  t.resize(dim);
  for (int k = 0; k < dim; ++k) {
    double s = x[k] * n;
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, n - 1);
    base[k] = i;
    t[k] = s - i;
  }
}

}  // namespace

std::vector<double> NodalSplineField::value_at(std::span<const double> x) const {
  const int dim = mesh_->dim();
  std::vector<int> base;
  std::vector<double> t;
  local_coords(*mesh_, x, base, t);
  std::vector<double> out(components_, 0.0);
  std::vector<int> node(dim);
  for (unsigned off = 0; off < (1u << dim); ++off) {
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      bool hi = (off >> k) & 1u;
      node[k] = base[k] + (hi ? 1 : 0);
      w *= hi ? t[k] : 1.0 - t[k];
    }
    if (w == 0.0) continue;
    std::size_t ni = mesh_->node_index(node);
    for (int c = 0; c < components_; ++c) out[c] += w * coeff(c, ni);
  }
  return out;
}

double NodalSplineField::partial(int component, int axis,
                                 std::span<const double> x) const {
  const int dim = mesh_->dim();
  const double inv_h = mesh_->cells_per_axis();
  std::vector<int> base;
  std::vector<double> t;
  local_coords(*mesh_, x, base, t);
  double out = 0.0;
  std::vector<int> node(dim);
  for (unsigned off = 0; off < (1u << dim); ++off) {
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      bool hi = (off >> k) & 1u;
      node[k] = base[k] + (hi ? 1 : 0);
      if (k == axis)
        w *= hi ? inv_h : -inv_h;
      else
        w *= hi ? t[k] : 1.0 - t[k];
    }
    if (w == 0.0) continue;
    out += w * coeff(component, mesh_->node_index(node));
  }
  return out;
}

double hat_value(std::span<const double> x) {
  double v = 1.0;
  for (double c : x) v *= std::max(0.0, 1.0 - std::abs(c));
  return v;
}

double mollifier_kernel_1d(double t, double eps) {
  if (eps <= 0.0) throw std::domain_error("mollifier: epsilon must be positive");
  double s = t / eps;
  if (std::abs(s) >= 1.0) return 0.0;
  double q = 1.0 - s * s;
  double q2 = q * q;
  // normalization: int_{-1}^{1} (1-s^2)^4 ds = 256/315
  return (315.0 / 256.0) / eps * q2 * q2;
}

PiecewiseConstantField sample_gravity_centers(
    const ScalarFunction& f, std::shared_ptr<const ParallelepipedMesh> mesh) {
  std::vector<double> coeffs(mesh->cell_count());
  for (std::size_t c = 0; c < coeffs.size(); ++c) {
    auto x = mesh->cell_centroid(c);
    coeffs[c] = f(x);
  }
  return PiecewiseConstantField(std::move(mesh), std::move(coeffs));
}

PiecewiseConstantField sample_gravity_centers(
    const ScalarFunction& f, std::shared_ptr<const TriangulationMesh> mesh) {
  std::vector<double> coeffs(mesh->triangle_count());
  for (std::size_t t = 0; t < coeffs.size(); ++t) {
    auto c = mesh->triangle_centroid(t);
    coeffs[t] = f(std::span<const double>(c.data(), 2));
  }
  return PiecewiseConstantField(std::move(mesh), std::move(coeffs));
}

NodalSplineField interpolate_nodal(const VectorFunction& f,
                                   std::shared_ptr<const ParallelepipedMesh> mesh,
                                   int components) {
  const std::size_t nn = mesh->node_count();
  std::vector<double> coeffs(components * nn);
  for (std::size_t i = 0; i < nn; ++i) {
    auto x = mesh->node_coord(i);
    auto v = f.f(x);
    if (static_cast<int>(v.size()) != components)
      throw std::invalid_argument("interpolate_nodal: component count mismatch");
    for (int c = 0; c < components; ++c) coeffs[c * nn + i] = v[c];
  }
  return NodalSplineField(std::move(mesh), components, std::move(coeffs));
}

namespace {

// Recursive product quadrature of kernel(x-y) * f(y) over the kernel support
// intersected with (0,1)^N (f is extended by zero outside the domain).
double mollify_axis(const ScalarFunction& f, double eps, std::span<const double> x,
                    std::vector<double>& y, std::size_t axis) {
  const std::size_t dim = x.size();
  if (axis == dim) return f(y);
  const double lo = std::max(0.0, x[axis] - eps);
  const double hi = std::min(1.0, x[axis] + eps);
  if (hi <= lo) return 0.0;
  std::vector<double> breaks;
  if (axis < f.breaks.size())
    for (double b : f.breaks[axis])
      if (b > lo && b < hi) breaks.push_back(b);
  auto integrand = [&](double yk) {
    y[axis] = yk;
    return mollifier_kernel_1d(x[axis] - yk, eps) * mollify_axis(f, eps, x, y, axis + 1);
  };
  return gauss5_broken(lo, hi, std::move(breaks), integrand, 4);
}

}  // namespace

double mollify(const ScalarFunction& f, const MollifierSpec& spec,
               std::span<const double> x) {
  if (spec.epsilon <= 0.0) throw std::domain_error("mollify: epsilon must be positive");
  std::vector<double> y(x.size());
  return mollify_axis(f, spec.epsilon, x, y, 0);
}

double mollify(const ScalarFunction& f, const MollifierSpec& spec, double x) {
  return mollify(f, spec, std::span<const double>(&x, 1));
}

void write_mesh_csv(const ParallelepipedMesh& mesh, std::ostream& out) {
  out << "cell";
  for (int k = 0; k < mesh.dim(); ++k) out << ",i" << k;
  for (int k = 0; k < mesh.dim(); ++k) out << ",x" << k;
  out << "\n";
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    out << c;
    for (int i : mesh.cell_multi(c)) out << ',' << i;
    for (double x : mesh.cell_centroid(c)) out << ',' << x;
    out << "\n";
  }
}

void write_field_csv(const PiecewiseConstantField& field, std::ostream& out) {
  if (field.on_grid()) {
    const auto& mesh = field.grid();
    out << "cell";
    for (int k = 0; k < mesh.dim(); ++k) out << ",i" << k;
    for (int k = 0; k < mesh.dim(); ++k) out << ",x" << k;
    out << ",coeff\n";
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
      out << c;
      for (int i : mesh.cell_multi(c)) out << ',' << i;
      for (double x : mesh.cell_centroid(c)) out << ',' << x;
      out << ',' << field.coeffs()[c] << "\n";
    }
  } else {
    const auto& mesh = field.triangulation();
    out << "triangle,x0,x1,coeff\n";
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      auto c = mesh.triangle_centroid(t);
      out << t << ',' << c[0] << ',' << c[1] << ',' << field.coeffs()[t] << "\n";
    }
  }
}

void write_field_csv(const NodalSplineField& field, std::ostream& out) {
  const auto& mesh = field.mesh();
  out << "node";
  for (int k = 0; k < mesh.dim(); ++k) out << ",i" << k;
  for (int k = 0; k < mesh.dim(); ++k) out << ",x" << k;
  for (int c = 0; c < field.components(); ++c) out << ",u" << c;
  out << "\n";
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    out << i;
    for (int m : mesh.node_multi(i)) out << ',' << m;
    for (double x : mesh.node_coord(i)) out << ',' << x;
    for (int c = 0; c < field.components(); ++c) out << ',' << field.coeff(c, i);
    out << "\n";
  }
}

}  // namespace varreg
