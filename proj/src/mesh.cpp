#include "distopt/mesh.hpp"

#include <cmath>

namespace distopt {

Mesh2D build_structured_mesh(double width, double height, int nx, int ny, int layers) {
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("mesh: width and height must be positive");
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("mesh: nx and ny must be at least 1");
  if (layers < 1)
    throw std::invalid_argument("mesh: layer count must be at least 1");
  if (ny % layers != 0)
    throw std::invalid_argument("mesh: ny (" + std::to_string(ny) +
                                ") must be divisible by the layer count (" +
                                std::to_string(layers) + ")");
  Mesh2D m;
  m.width = width;
  m.height = height;
  m.nx = nx;
  m.ny = ny;
  m.layers = layers;
  return m;
}

BoundarySelector BoundarySelector::left_edge() {
  BoundarySelector s;
  s.kind = Kind::LeftEdge;
  return s;
}

BoundarySelector BoundarySelector::right_edge() {
  BoundarySelector s;
  s.kind = Kind::RightEdge;
  return s;
}

BoundarySelector BoundarySelector::bottom_span(double x0, double x1) {
  BoundarySelector s;
  s.kind = Kind::BottomSpan;
  s.x0 = x0;
  s.x1 = x1;
  return s;
}

BoundarySelector BoundarySelector::edge_span(Edge edge, double center, double half_width) {
  BoundarySelector s;
  s.kind = Kind::EdgeSpan;
  s.edge = edge;
  s.center = center;
  s.half_width = half_width;
  return s;
}

namespace {

// geometric tolerance for span selection on node coordinates
double tol(const Mesh2D& mesh) { return 1e-9 * std::max(mesh.width, mesh.height); }

void check_span(double lo, double hi, double extent, const char* what) {
  if (lo > hi) throw std::invalid_argument(std::string(what) + ": empty span");
  if (lo < -1e-12 * extent - 1e-300 || hi > extent * (1.0 + 1e-12))
    throw std::invalid_argument(std::string(what) + ": span outside domain extents");
}

}  // namespace

std::vector<int> select_boundary_nodes(const Mesh2D& mesh, const BoundarySelector& sel) {
  std::vector<int> nodes;
  const double eps = tol(mesh);
  switch (sel.kind) {
    case BoundarySelector::Kind::LeftEdge:
      for (int j = 0; j <= mesh.ny; ++j) nodes.push_back(mesh.node_index(0, j));
      break;
    case BoundarySelector::Kind::RightEdge:
      for (int j = 0; j <= mesh.ny; ++j) nodes.push_back(mesh.node_index(mesh.nx, j));
      break;
    case BoundarySelector::Kind::BottomSpan: {
      check_span(sel.x0, sel.x1, mesh.width, "bottom-span");
      for (int i = 0; i <= mesh.nx; ++i) {
        const double x = i * mesh.dx();
        if (x >= sel.x0 - eps && x <= sel.x1 + eps) nodes.push_back(mesh.node_index(i, 0));
      }
      break;
    }
    case BoundarySelector::Kind::EdgeSpan: {
      const bool horizontal = sel.edge == BoundarySelector::Edge::Bottom ||
                              sel.edge == BoundarySelector::Edge::Top;
      const double extent = horizontal ? mesh.width : mesh.height;
      check_span(sel.center - sel.half_width, sel.center + sel.half_width, extent,
                 "edge-span");
      const int n = horizontal ? mesh.nx : mesh.ny;
      const double h = horizontal ? mesh.dx() : mesh.dy();
      for (int a = 0; a <= n; ++a) {
        const double c = a * h;
        if (c < sel.center - sel.half_width - eps || c > sel.center + sel.half_width + eps)
          continue;
        switch (sel.edge) {
          case BoundarySelector::Edge::Bottom: nodes.push_back(mesh.node_index(a, 0)); break;
          case BoundarySelector::Edge::Top: nodes.push_back(mesh.node_index(a, mesh.ny)); break;
          case BoundarySelector::Edge::Left: nodes.push_back(mesh.node_index(0, a)); break;
          case BoundarySelector::Edge::Right: nodes.push_back(mesh.node_index(mesh.nx, a)); break;
        }
      }
      break;
    }
  }
  if (nodes.empty()) throw std::invalid_argument("boundary selector matched no nodes");
  return nodes;
}

std::vector<std::array<int, 2>> select_boundary_edges(const Mesh2D& mesh,
                                                      const BoundarySelector& sel) {
  const std::vector<int> nodes = select_boundary_nodes(mesh, sel);
  std::vector<std::array<int, 2>> edges;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const int a = nodes[k], b = nodes[k + 1];
    // consecutive selected nodes form a mesh edge only if adjacent in the grid
    const bool adjacent =
        (mesh.node_row(a) == mesh.node_row(b) && mesh.node_col(b) - mesh.node_col(a) == 1) ||
        (mesh.node_col(a) == mesh.node_col(b) && mesh.node_row(b) - mesh.node_row(a) == 1);
    if (adjacent) edges.push_back({a, b});
  }
  if (edges.empty()) throw std::invalid_argument("boundary selector matched no edges");
  return edges;
}

LayerMasks layer_mask(const Mesh2D& mesh, int layer) {
  if (layer < 1 || layer > mesh.layers)
    throw std::invalid_argument("layer_mask: layer index out of range");
  LayerMasks masks;
  masks.inherent.assign(mesh.element_count(), 0);
  masks.active.assign(mesh.element_count(), 0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const int le = mesh.element_layer(e);
    if (le == layer) masks.inherent[e] = 1;
    if (le <= layer) masks.active[e] = 1;
  }
  return masks;
}

}  // namespace distopt
