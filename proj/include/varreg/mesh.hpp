#ifndef VARREG_MESH_HPP
#define VARREG_MESH_HPP

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace varreg {

// Uniform partition of (0,1)^N into n^N cubes of edge length h = 1/n.
// Cells and nodes are enumerated lexicographically by multi-index with the
// last axis running fastest (row-major).
class ParallelepipedMesh {
 public:
  ParallelepipedMesh(int dim, int n);

  int dim() const { return dim_; }
  int cells_per_axis() const { return n_; }
  double h() const { return h_; }
  std::size_t cell_count() const { return cell_count_; }
  std::size_t node_count() const { return node_count_; }
  double cell_volume() const;

  std::size_t cell_index(std::span<const int> multi) const;
  std::vector<int> cell_multi(std::size_t index) const;
  std::vector<double> cell_centroid(std::size_t index) const;

  std::size_t node_index(std::span<const int> multi) const;
  std::vector<int> node_multi(std::size_t index) const;
  std::vector<double> node_coord(std::size_t index) const;

  // Cell containing x (coordinates clamped into the domain).
  std::size_t locate(std::span<const double> x) const;

  // Interior face between `lower_cell` and its +e_axis neighbour `upper_cell`.
  struct Face {
    std::size_t lower_cell;
    std::size_t upper_cell;
    int axis;
  };
  std::vector<Face> interior_faces() const;
  double face_measure() const;  // h^(N-1)

 private:
  int dim_;
  int n_;
  double h_;
  std::size_t cell_count_;
  std::size_t node_count_;
};

// 2-D triangulation of (0,1)^2.  Produced by build_crisscross_triangulation;
// each of the n^2 squares is split into 4 triangles by its centroid.
class TriangulationMesh {
 public:
  TriangulationMesh(std::vector<std::array<double, 2>> vertices,
                    std::vector<std::array<std::size_t, 3>> triangles);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }
  const std::array<double, 2>& vertex(std::size_t i) const { return vertices_[i]; }
  const std::array<std::size_t, 3>& triangle(std::size_t i) const { return triangles_[i]; }

  double triangle_area(std::size_t i) const;
  std::array<double, 2> triangle_centroid(std::size_t i) const;
  std::size_t locate(double x, double y) const;

  struct Edge {
    std::size_t v0, v1;
    std::size_t tri_a, tri_b;  // the two incident triangles
    double length;
  };
  const std::vector<Edge>& interior_edges() const { return interior_edges_; }
  const std::vector<std::array<std::size_t, 2>>& boundary_edges() const {
    return boundary_edges_;
  }

 private:
  std::vector<std::array<double, 2>> vertices_;
  std::vector<std::array<std::size_t, 3>> triangles_;
  std::vector<Edge> interior_edges_;
  std::vector<std::array<std::size_t, 2>> boundary_edges_;
};

ParallelepipedMesh build_uniform_mesh(int dim, int n);
std::shared_ptr<const ParallelepipedMesh> make_uniform_mesh(int dim, int n);

// Criss-cross triangulation: per square the 4 triangles (south, east, north,
// west around the centroid), all positively oriented.
TriangulationMesh build_crisscross_triangulation(int n);
std::shared_ptr<const TriangulationMesh> make_crisscross_triangulation(int n);

}  // namespace varreg

#endif
