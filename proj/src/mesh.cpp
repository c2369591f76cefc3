#include "varreg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace varreg {

namespace {
std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}
}  // namespace

ParallelepipedMesh::ParallelepipedMesh(int dim, int n) : dim_(dim), n_(n) {
  if (dim <= 0 || n <= 0)
    throw std::invalid_argument("ParallelepipedMesh: dim and n must be positive");
  h_ = 1.0 / n;
  cell_count_ = ipow(static_cast<std::size_t>(n), dim);
  node_count_ = ipow(static_cast<std::size_t>(n) + 1, dim);
}

double ParallelepipedMesh::cell_volume() const { return std::pow(h_, dim_); }
double ParallelepipedMesh::face_measure() const { return std::pow(h_, dim_ - 1); }

std::size_t ParallelepipedMesh::cell_index(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int k = 0; k < dim_; ++k) idx = idx * n_ + multi[k];
  return idx;
}

std::vector<int> ParallelepipedMesh::cell_multi(std::size_t index) const {
  std::vector<int> m(dim_);
  for (int k = dim_ - 1; k >= 0; --k) {
    m[k] = static_cast<int>(index % n_);
    index /= n_;
  }
  return m;
}

std::vector<double> ParallelepipedMesh::cell_centroid(std::size_t index) const {
  auto m = cell_multi(index);
  std::vector<double> c(dim_);
  for (int k = 0; k < dim_; ++k) c[k] = (m[k] + 0.5) * h_;
  return c;
}

std::size_t ParallelepipedMesh::node_index(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int k = 0; k < dim_; ++k) idx = idx * (n_ + 1) + multi[k];
  return idx;
}

std::vector<int> ParallelepipedMesh::node_multi(std::size_t index) const {
  std::vector<int> m(dim_);
  for (int k = dim_ - 1; k >= 0; --k) {
    m[k] = static_cast<int>(index % (n_ + 1));
    index /= (n_ + 1);
  }
  return m;
}

std::vector<double> ParallelepipedMesh::node_coord(std::size_t index) const {
  auto m = node_multi(index);
  std::vector<double> c(dim_);
  for (int k = 0; k < dim_; ++k) c[k] = m[k] * h_;
  return c;
}

std::size_t ParallelepipedMesh::locate(std::span<const double> x) const {
  std::vector<int> m(dim_);
  for (int k = 0; k < dim_; ++k) {
    int i = static_cast<int>(std::floor(x[k] * n_));
    m[k] = std::clamp(i, 0, n_ - 1);
  }
  return cell_index(m);
}

std::vector<ParallelepipedMesh::Face> ParallelepipedMesh::interior_faces() const {
  std::vector<Face> faces;
  std::vector<int> m(dim_, 0);
  for (std::size_t c = 0; c < cell_count_; ++c) {
    auto cm = cell_multi(c);
    for (int k = 0; k < dim_; ++k) {
      if (cm[k] + 1 < n_) {
        auto nm = cm;
        ++nm[k];
        faces.push_back({c, cell_index(nm), k});
      }
    }
  }
  return faces;
}

TriangulationMesh::TriangulationMesh(std::vector<std::array<double, 2>> vertices,
                                     std::vector<std::array<std::size_t, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_tris;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    if (triangle_area(t) <= 0.0)
      throw std::invalid_argument("TriangulationMesh: triangle not positively oriented");
    for (int e = 0; e < 3; ++e) {
      std::size_t a = tri[e], b = tri[(e + 1) % 3];
      edge_tris[{std::min(a, b), std::max(a, b)}].push_back(t);
    }
  }
  for (const auto& [key, tris] : edge_tris) {
    if (tris.size() == 1) {
      boundary_edges_.push_back({key.first, key.second});
    } else if (tris.size() == 2) {
      const auto& p = vertices_[key.first];
      const auto& q = vertices_[key.second];
      interior_edges_.push_back(
          {key.first, key.second, tris[0], tris[1], std::hypot(q[0] - p[0], q[1] - p[1])});
    } else {
      throw std::invalid_argument("TriangulationMesh: edge shared by >2 triangles");
    }
  }
}

double TriangulationMesh::triangle_area(std::size_t i) const {
  const auto& t = triangles_[i];
  const auto& a = vertices_[t[0]];
  const auto& b = vertices_[t[1]];
  const auto& c = vertices_[t[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

std::array<double, 2> TriangulationMesh::triangle_centroid(std::size_t i) const {
  const auto& t = triangles_[i];
  const auto& a = vertices_[t[0]];
  const auto& b = vertices_[t[1]];
  const auto& c = vertices_[t[2]];
  return {(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
}

std::size_t TriangulationMesh::locate(double x, double y) const {
  const double tol = 1e-12;
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    const auto& t = triangles_[i];
    const auto& a = vertices_[t[0]];
    const auto& b = vertices_[t[1]];
    const auto& c = vertices_[t[2]];
    auto cross = [](double ux, double uy, double vx, double vy) {
      return ux * vy - uy * vx;
    };
    double d0 = cross(b[0] - a[0], b[1] - a[1], x - a[0], y - a[1]);
    double d1 = cross(c[0] - b[0], c[1] - b[1], x - b[0], y - b[1]);
    double d2 = cross(a[0] - c[0], a[1] - c[1], x - c[0], y - c[1]);
    if (d0 >= -tol && d1 >= -tol && d2 >= -tol) return i;
  }
  throw std::domain_error("TriangulationMesh::locate: point outside mesh");
}

ParallelepipedMesh build_uniform_mesh(int dim, int n) {
  return ParallelepipedMesh(dim, n);
}

std::shared_ptr<const ParallelepipedMesh> make_uniform_mesh(int dim, int n) {
  return std::make_shared<const ParallelepipedMesh>(dim, n);
}

TriangulationMesh build_crisscross_triangulation(int n) {
  if (n <= 0) throw std::invalid_argument("build_crisscross_triangulation: n must be positive");
  const double h = 1.0 / n;
  std::vector<std::array<double, 2>> verts;
  // Grid vertices, then one centroid per square.
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) verts.push_back({i * h, j * h});
  const std::size_t grid_count = verts.size();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) verts.push_back({(i + 0.5) * h, (j + 0.5) * h});

  auto gid = [n](int i, int j) { return static_cast<std::size_t>(j) * (n + 1) + i; };
  std::vector<std::array<std::size_t, 3>> tris;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      std::size_t c = grid_count + static_cast<std::size_t>(j) * n + i;
      std::size_t sw = gid(i, j), se = gid(i + 1, j), ne = gid(i + 1, j + 1), nw = gid(i, j + 1);
      tris.push_back({sw, se, c});  // south
      tris.push_back({se, ne, c});  // east
      tris.push_back({ne, nw, c});  // north
      tris.push_back({nw, sw, c});  // west
    }
  }
  return TriangulationMesh(std::move(verts), std::move(tris));
}

std::shared_ptr<const TriangulationMesh> make_crisscross_triangulation(int n) {
  return std::make_shared<const TriangulationMesh>(build_crisscross_triangulation(n));
}

}  // namespace varreg
