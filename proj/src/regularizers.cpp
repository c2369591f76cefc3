#include "varreg/regularizers.hpp"

#include <cmath>
#include <stdexcept>

#include "varreg/kernels.hpp"

namespace varreg {

double smoothed_abs(double t, double eps) {
  if (eps == 0.0) return std::abs(t);
  return std::sqrt(t * t + eps * eps) - eps;
}

namespace {

double sign0(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

}  // namespace

double tv_anisotropic(const PiecewiseConstantField& field, double eps) {
  require(field.on_grid(), "tv_anisotropic: field must live on a parallelepiped mesh");
  const auto& mesh = field.grid();
  auto c = field.coeffs();
  const double w = mesh.face_measure();
  std::vector<double> jumps;
  jumps.reserve(mesh.cell_count() * mesh.dim());
  for (const auto& f : mesh.interior_faces())
    jumps.push_back(c[f.upper_cell] - c[f.lower_cell]);
  return w * (eps == 0.0 ? kernels::sum_abs(jumps)
                         : kernels::sum_abs_smoothed(jumps, eps));
}

double tv_isotropic(const PiecewiseConstantField& field, double eps) {
  require(field.on_triangulation(), "tv_isotropic: field must live on a triangulation");
  const auto& mesh = field.triangulation();
  auto c = field.coeffs();
  double total = 0.0;
  for (const auto& e : mesh.interior_edges())
    total += smoothed_abs(c[e.tri_b] - c[e.tri_a], eps) * e.length;
  return total;
}

namespace {

// Shared walk over the terms of the discrete total-deformation formula.
// visit(component, node, multiplier, term_id) is called for every coefficient
// entering a term; flush(term_id, value, weight) with the accumulated sum.
template <typename Visit>
double bd_walk(const NodalSplineField& field, double eps, Visit* visit) {
  const auto& mesh = field.mesh();
  const int dim = mesh.dim();
  require(field.components() == dim,
          "bd_total_deformation: vector components must equal mesh dimension");
  const double w = std::pow(mesh.h() / 2.0, dim - 1);

  double total = 0.0;
  std::vector<int> node(dim);
  const unsigned ncorner = 1u << dim;
  for (std::size_t cell = 0; cell < mesh.cell_count(); ++cell) {
    auto am = mesh.cell_multi(cell);
    // difference sum over the corners of the cell with offset bit `k` fixed 0
    auto corner_sum = [&](int comp, int k) {
      double s = 0.0;
      for (unsigned off = 0; off < ncorner; ++off) {
        if ((off >> k) & 1u) continue;
        for (int d = 0; d < dim; ++d) node[d] = am[d] + ((off >> d) & 1);
        std::size_t lo = mesh.node_index(node);
        node[k] += 1;
        std::size_t hi = mesh.node_index(node);
        s += field.coeff(comp, hi) - field.coeff(comp, lo);
      }
      return s;
    };
    for (int k = 0; k < dim; ++k) {
      double s = corner_sum(k, k);
      total += smoothed_abs(s, eps) * w;
      if (visit) visit->flush_diag(k, am, s, w);
    }
    for (int k = 0; k < dim; ++k) {
      for (int l = 0; l < dim; ++l) {
        if (k == l) continue;
        double s = corner_sum(k, l) + corner_sum(l, k);
        total += 0.5 * smoothed_abs(s, eps) * w;
        if (visit) visit->flush_offdiag(k, l, am, s, 0.5 * w);
      }
    }
  }
  return total;
}

struct NoVisit {
  void flush_diag(int, const std::vector<int>&, double, double) {}
  void flush_offdiag(int, int, const std::vector<int>&, double, double) {}
};

}  // namespace

double bd_total_deformation(const NodalSplineField& field, double eps) {
  return bd_walk<NoVisit>(field, eps, nullptr);
}

double sup_norm(const PiecewiseConstantField& field) {
  require(!field.coeffs().empty(), "sup_norm: empty coefficient vector");
  return kernels::max_abs(field.coeffs());
}

double sup_norm_smoothed(std::span<const double> coeffs, double eps) {
  require(!coeffs.empty(), "sup_norm: empty coefficient vector");
  double m = kernels::max_abs(coeffs);
  if (eps == 0.0) return m;
  double s = 0.0;
  for (double v : coeffs) s += std::exp((std::abs(v) - m) / eps);
  return m + eps * std::log(s);
}

double sparsity_penalty(std::span<const double> coeffs, double p) {
  require(p > 0.0 && p <= 1.0, "sparsity_penalty: p must be in (0,1]");
  if (p == 1.0) return kernels::sum_abs(coeffs);
  double s = 0.0;
  for (double v : coeffs) s += std::pow(std::abs(v), p);
  return s;
}

namespace {

double sparsity_smoothed(std::span<const double> coeffs, double p, double eps) {
  if (p == 1.0)
    return eps == 0.0 ? kernels::sum_abs(coeffs)
                      : kernels::sum_abs_smoothed(coeffs, eps);
  double s = 0.0;
  const double ep = std::pow(eps, p);
  for (double v : coeffs) s += std::pow(v * v + eps * eps, 0.5 * p) - ep;
  return s;
}

}  // namespace

double evaluate(const RegularizerSpec& spec, const PiecewiseConstantField& field) {
  const double eps = spec.smoothing_eps;
  switch (spec.kind) {
    case RegularizerKind::TV_L1:
      return tv_anisotropic(field, eps);
    case RegularizerKind::TV_L2:
      return tv_isotropic(field, eps);
    case RegularizerKind::SUP_NORM:
      return sup_norm_smoothed(field.coeffs(), eps);
    case RegularizerKind::SPARSITY:
      require(spec.p > 0.0 && spec.p <= 1.0, "evaluate: p must be in (0,1]");
      return sparsity_smoothed(field.coeffs(), spec.p, eps);
    case RegularizerKind::BD:
      throw std::domain_error("evaluate: BD requires a NodalSplineField");
  }
  throw std::domain_error("evaluate: unknown kind");
}

double evaluate(const RegularizerSpec& spec, const NodalSplineField& field) {
  require(spec.kind == RegularizerKind::BD,
          "evaluate: NodalSplineField only supports the BD penalty");
  return bd_total_deformation(field, spec.smoothing_eps);
}

namespace {

SubgradientElement make_elem(std::span<const double> at, std::size_t ndual) {
  SubgradientElement e;
  e.coeffs.assign(ndual, 0.0);
  e.at_coeffs.assign(at.begin(), at.end());
  return e;
}

}  // namespace

SubgradientElement subgradient(const RegularizerSpec& spec,
                               const PiecewiseConstantField& field) {
  auto c = field.coeffs();
  SubgradientElement e = make_elem(c, c.size());
  switch (spec.kind) {
    case RegularizerKind::TV_L1: {
      require(field.on_grid(), "subgradient: TV_L1 needs a parallelepiped mesh");
      const auto& mesh = field.grid();
      const double w = mesh.face_measure();
      for (const auto& f : mesh.interior_faces()) {
        double s = sign0(c[f.upper_cell] - c[f.lower_cell]) * w;
        e.coeffs[f.upper_cell] += s;
        e.coeffs[f.lower_cell] -= s;
      }
      return e;
    }
    case RegularizerKind::TV_L2: {
      require(field.on_triangulation(), "subgradient: TV_L2 needs a triangulation");
      for (const auto& ed : field.triangulation().interior_edges()) {
        double s = sign0(c[ed.tri_b] - c[ed.tri_a]) * ed.length;
        e.coeffs[ed.tri_b] += s;
        e.coeffs[ed.tri_a] -= s;
      }
      return e;
    }
    case RegularizerKind::SUP_NORM: {
      require(!c.empty(), "subgradient: empty coefficient vector");
      std::size_t best = 0;
      for (std::size_t i = 1; i < c.size(); ++i)
        if (std::abs(c[i]) > std::abs(c[best])) best = i;
      e.coeffs[best] = sign0(c[best]);
      return e;
    }
    case RegularizerKind::SPARSITY: {
      require(spec.p == 1.0, "subgradient: sparsity with p<1 is nonconvex");
      for (std::size_t i = 0; i < c.size(); ++i) e.coeffs[i] = sign0(c[i]);
      return e;
    }
    case RegularizerKind::BD:
      throw std::domain_error("subgradient: BD requires a NodalSplineField");
  }
  throw std::domain_error("subgradient: unknown kind");
}

namespace {

struct BdSubgradVisit {
  const NodalSplineField* field;
  const ParallelepipedMesh* mesh;
  std::vector<double>* out;
  std::vector<int> node;

  void add(int comp, int fixed_axis, const std::vector<int>& am, double s) {
    const int dim = mesh->dim();
    node.resize(dim);
    for (unsigned off = 0; off < (1u << dim); ++off) {
      if ((off >> fixed_axis) & 1u) continue;
      for (int d = 0; d < dim; ++d) node[d] = am[d] + ((off >> d) & 1);
      std::size_t lo = mesh->node_index(node);
      node[fixed_axis] += 1;
      std::size_t hi = mesh->node_index(node);
      (*out)[comp * mesh->node_count() + hi] += s;
      (*out)[comp * mesh->node_count() + lo] -= s;
    }
  }

  void flush_diag(int k, const std::vector<int>& am, double s, double w) {
    add(k, k, am, sign0(s) * w);
  }
  void flush_offdiag(int k, int l, const std::vector<int>& am, double s, double w) {
    double g = sign0(s) * w;
    add(k, l, am, g);
    add(l, k, am, g);
  }
};

}  // namespace

SubgradientElement subgradient(const RegularizerSpec& spec,
                               const NodalSplineField& field) {
  require(spec.kind == RegularizerKind::BD,
          "subgradient: NodalSplineField only supports the BD penalty");
  SubgradientElement e = make_elem(field.coeffs(), field.coeffs().size());
  BdSubgradVisit v{&field, &field.mesh(), &e.coeffs, {}};
  bd_walk(field, 0.0, &v);
  return e;
}

std::vector<double> smoothed_gradient(const RegularizerSpec& spec,
                                      const PiecewiseConstantField& field,
                                      double eps) {
  auto c = field.coeffs();
  std::vector<double> g(c.size(), 0.0);
  switch (spec.kind) {
    case RegularizerKind::TV_L1: {
      const auto& mesh = field.grid();
      const double w = mesh.face_measure();
      for (const auto& f : mesh.interior_faces()) {
        double j = c[f.upper_cell] - c[f.lower_cell];
        double d = eps == 0.0 ? sign0(j) : j / std::sqrt(j * j + eps * eps);
        g[f.upper_cell] += d * w;
        g[f.lower_cell] -= d * w;
      }
      return g;
    }
    case RegularizerKind::SUP_NORM: {
      if (eps == 0.0) {
        auto e = subgradient(spec, field);
        return e.coeffs;
      }
      double m = kernels::max_abs(c);
      double z = 0.0;
      std::vector<double> wts(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) {
        wts[i] = std::exp((std::abs(c[i]) - m) / eps);
        z += wts[i];
      }
      for (std::size_t i = 0; i < c.size(); ++i) g[i] = wts[i] / z * sign0(c[i]);
      return g;
    }
    case RegularizerKind::SPARSITY: {
      const double p = spec.p;
      for (std::size_t i = 0; i < c.size(); ++i) {
        double v = c[i];
        if (eps == 0.0) {
          g[i] = p == 1.0 ? sign0(v)
                          : (v == 0.0 ? 0.0 : p * std::pow(std::abs(v), p - 1.0) * sign0(v));
        } else {
          g[i] = p * v * std::pow(v * v + eps * eps, 0.5 * p - 1.0);
        }
      }
      return g;
    }
    default:
      throw std::domain_error("smoothed_gradient: unsupported penalty for this field");
  }
}

}  // namespace varreg
