#ifndef VARREG_FIELDS_HPP
#define VARREG_FIELDS_HPP

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "varreg/mesh.hpp"

namespace varreg {

// Scalar function on (0,1)^N given as an evaluation callback.  Discontinuous
// test functions carry their jump positions per axis in `breaks` so that
// quadrature can split there and keep jump locations exact.
struct ScalarFunction {
  std::function<double(std::span<const double>)> f;
  std::vector<std::vector<double>> breaks;

  double operator()(std::span<const double> x) const { return f(x); }
};

ScalarFunction scalar_function_1d(std::function<double(double)> f,
                                  std::vector<double> breaks = {});

struct VectorFunction {
  std::function<std::vector<double>(std::span<const double>)> f;
};

// One real coefficient per cell, on either mesh type.
class PiecewiseConstantField {
 public:
  PiecewiseConstantField(std::shared_ptr<const ParallelepipedMesh> mesh,
                         std::vector<double> coeffs);
  PiecewiseConstantField(std::shared_ptr<const TriangulationMesh> mesh,
                         std::vector<double> coeffs);

  bool on_grid() const { return pmesh_ != nullptr; }
  bool on_triangulation() const { return tmesh_ != nullptr; }
  const ParallelepipedMesh& grid() const;
  const TriangulationMesh& triangulation() const;
  std::shared_ptr<const ParallelepipedMesh> grid_ptr() const { return pmesh_; }
  std::shared_ptr<const TriangulationMesh> triangulation_ptr() const { return tmesh_; }

  std::span<const double> coeffs() const { return coeffs_; }
  std::vector<double>& mutable_coeffs() { return coeffs_; }

  double value_at(std::span<const double> x) const;
  double value_at(double x) const;  // 1-D convenience

 private:
  std::shared_ptr<const ParallelepipedMesh> pmesh_;
  std::shared_ptr<const TriangulationMesh> tmesh_;
  std::vector<double> coeffs_;
};

// Vector-valued tensor-product hat spline on a parallelepiped mesh.
// Coefficient layout: component-major, coeffs[k * node_count + node].
class NodalSplineField {
 public:
  NodalSplineField(std::shared_ptr<const ParallelepipedMesh> mesh, int components,
                   std::vector<double> coeffs);

  const ParallelepipedMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const ParallelepipedMesh> mesh_ptr() const { return mesh_; }
  int components() const { return components_; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::vector<double>& mutable_coeffs() { return coeffs_; }

  double coeff(int component, std::size_t node) const {
    return coeffs_[component * mesh_->node_count() + node];
  }
  double& coeff(int component, std::size_t node) {
    return coeffs_[component * mesh_->node_count() + node];
  }

  std::vector<double> value_at(std::span<const double> x) const;
  // d u^component / d x_axis at x (defined inside cell interiors)
  double partial(int component, int axis, std::span<const double> x) const;

 private:
  std::shared_ptr<const ParallelepipedMesh> mesh_;
  int components_;
  std::vector<double> coeffs_;
};

// Hat basis: Delta(x) = prod_k max(0, 1-|x_k|), nodal at the mesh nodes.
double hat_value(std::span<const double> x);

struct MollifierSpec {
  double epsilon;
};

// Normalized 1-D bump (1-t^2)^4 restricted to |t| <= eps; unit integral.
double mollifier_kernel_1d(double t, double eps);

PiecewiseConstantField sample_gravity_centers(
    const ScalarFunction& f, std::shared_ptr<const ParallelepipedMesh> mesh);
PiecewiseConstantField sample_gravity_centers(
    const ScalarFunction& f, std::shared_ptr<const TriangulationMesh> mesh);

NodalSplineField interpolate_nodal(const VectorFunction& f,
                                   std::shared_ptr<const ParallelepipedMesh> mesh,
                                   int components);

// (J_eps * f)(x) with f extended by zero outside (0,1)^N.
double mollify(const ScalarFunction& f, const MollifierSpec& spec,
               std::span<const double> x);
double mollify(const ScalarFunction& f, const MollifierSpec& spec, double x);

// CSV dumps (header row mandatory).
void write_mesh_csv(const ParallelepipedMesh& mesh, std::ostream& out);
void write_field_csv(const PiecewiseConstantField& field, std::ostream& out);
void write_field_csv(const NodalSplineField& field, std::ostream& out);

}  // namespace varreg

#endif
