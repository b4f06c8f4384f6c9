// Structured quadrilateral grid over the fixed design domain, with a
// bottom-up layer partition for the build simulation and named boundary
// selections for supports, tractions and the substrate.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace distopt {

struct Mesh2D {
  double width = 0.0;   // x extent
  double height = 0.0;  // y extent (build direction)
  int nx = 0;           // elements along x
  int ny = 0;           // elements along y
  int layers = 0;       // m, ny is a multiple of this

  int node_count() const { return (nx + 1) * (ny + 1); }
  int element_count() const { return nx * ny; }
  int dof_count() const { return 2 * node_count(); }

  double dx() const { return width / nx; }
  double dy() const { return height / ny; }
  double element_area() const { return dx() * dy(); }
  double domain_area() const { return width * height; }
  int rows_per_layer() const { return ny / layers; }

  int node_index(int i, int j) const { return j * (nx + 1) + i; }
  int node_col(int k) const { return k % (nx + 1); }
  int node_row(int k) const { return k / (nx + 1); }
  double node_x(int k) const { return node_col(k) * dx(); }
  double node_y(int k) const { return node_row(k) * dy(); }

  int element_index(int i, int j) const { return j * nx + i; }
  int element_col(int e) const { return e % nx; }
  int element_row(int e) const { return e / nx; }

  // counter-clockwise corners: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
  std::array<int, 4> element_nodes(int e) const {
    const int i = element_col(e), j = element_row(e);
    return {node_index(i, j), node_index(i + 1, j), node_index(i + 1, j + 1),
            node_index(i, j + 1)};
  }

  // 1-based layer index; layer 1 touches the bottom edge
  int element_layer(int e) const { return element_row(e) / rows_per_layer() + 1; }

  // reflection about the vertical centerline
  int mirror_node(int k) const { return node_index(nx - node_col(k), node_row(k)); }
  int mirror_element(int e) const {
    return element_index(nx - 1 - element_col(e), element_row(e));
  }
};

Mesh2D build_structured_mesh(double width, double height, int nx, int ny, int layers);

struct BoundarySelector {
  enum class Kind { LeftEdge, RightEdge, BottomSpan, EdgeSpan };
  enum class Edge { Bottom, Top, Left, Right };

  Kind kind = Kind::BottomSpan;
  double x0 = 0.0, x1 = 0.0;       // BottomSpan range
  Edge edge = Edge::Right;          // EdgeSpan host edge
  double center = 0.0;              // EdgeSpan: coordinate along the edge
  double half_width = 0.0;

  static BoundarySelector left_edge();
  static BoundarySelector right_edge();
  static BoundarySelector bottom_span(double x0, double x1);
  static BoundarySelector edge_span(Edge edge, double center, double half_width);
};

// Ordered node set for a selector. Empty selections throw (they signal a
// misconfigured boundary), as do spans outside the domain extents.
std::vector<int> select_boundary_nodes(const Mesh2D& mesh, const BoundarySelector& sel);

// Consecutive node pairs along the selected edge, for surface integration.
std::vector<std::array<int, 2>> select_boundary_edges(const Mesh2D& mesh,
                                                      const BoundarySelector& sel);

struct LayerMasks {
  std::vector<std::uint8_t> inherent;  // Ω_inh = Ω_i
  std::vector<std::uint8_t> active;    // Ω_A = Ω_1 ∪ … ∪ Ω_i
};

LayerMasks layer_mask(const Mesh2D& mesh, int layer);

}  // namespace distopt
