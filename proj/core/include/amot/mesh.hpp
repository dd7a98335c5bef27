#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "amot/geometry.hpp"

namespace amot {

/// One triangle of the bisection forest. Local edge k is the edge opposite
/// vertex k: edge 0 = (v1,v2), edge 1 = (v2,v0), edge 2 = (v0,v1).
struct HierarchyNode {
  std::array<int, 3> v;        // vertex ids, CCW
  int parent = -1;             // node id, -1 for level-0 roots
  std::array<int, 2> child = {-1, -1};
  int midpoint = -1;           // vertex created when this node was bisected
  std::int8_t refine_edge = 0; // local edge split by the next bisection
  std::int32_t generation = 0;
  std::int32_t root = 0;       // index of the level-0 ancestor
};

/// Append-only newest-vertex-bisection forest shared by every mesh derived
/// from one build_uniform() call. Nodes and vertices are never removed, so a
/// node id identifies the same triangle in every mesh of the hierarchy;
/// transfer between meshes reduces to walks along parent/child links.
class MeshHierarchy {
 public:
  MeshHierarchy(std::vector<Vec2> vertices, std::vector<HierarchyNode> roots);

  const HierarchyNode& node(int id) const { return nodes_[id]; }
  Vec2 vertex(int id) const { return vertices_[id]; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_roots() const { return num_roots_; }

  Triangle2 triangle(int node_id) const {
    const auto& n = nodes_[node_id];
    return {{vertices_[n.v[0]], vertices_[n.v[1]], vertices_[n.v[2]]}};
  }

  /// Bisects the node at its refinement edge if not already done; returns the
  /// two child node ids. Thread-safe (appends under a mutex).
  std::array<int, 2> ensure_children(int node_id);

  /// Endpoints (vertex ids) of a node's refinement edge, in CCW order.
  std::array<int, 2> refine_edge_vertices(int node_id) const;

 private:
  int midpoint_vertex(int a, int b);

  std::vector<HierarchyNode> nodes_;
  std::vector<Vec2> vertices_;
  std::unordered_map<std::uint64_t, int> midpoint_of_edge_;
  int num_roots_ = 0;
  std::mutex mutex_;
};

/// Mesh edge. `normal` is the unit normal pointing out of the `left` triangle
/// (for boundary edges, out of the domain).
struct EdgeInfo {
  int a, b;                  // vertex ids
  int left;                  // triangle index in this mesh
  int right;                 // triangle index, or -1 on the boundary
  std::int8_t left_edge;     // local edge index within `left`
  std::int8_t right_edge;    // local edge index within `right`, -1 on boundary
  double h;                  // edge length
  Vec2 normal;

  bool boundary() const { return right < 0; }
};

/// Conforming triangulation of [-1,1]^2: a leaf set of the shared bisection
/// hierarchy plus derived edge connectivity. Immutable after construction;
/// refine/coarsen return new meshes.
class Mesh {
 public:
  Mesh(std::shared_ptr<MeshHierarchy> hierarchy, std::vector<int> leaf_nodes);

  int num_triangles() const { return static_cast<int>(leaves_.size()); }
  int num_vertices() const { return num_vertices_; }
  int num_dofs() const { return 3 * num_triangles(); }

  Triangle2 triangle(int i) const { return hierarchy_->triangle(leaves_[i]); }
  std::array<int, 3> triangle_vertices(int i) const { return hierarchy_->node(leaves_[i]).v; }
  Vec2 vertex(int id) const { return hierarchy_->vertex(id); }
  int generation(int i) const { return hierarchy_->node(leaves_[i]).generation; }
  double area(int i) const { return triangle(i).signed_area(); }
  double total_area() const;

  int node_id(int i) const { return leaves_[i]; }
  std::span<const int> leaf_nodes() const { return leaves_; }
  /// Triangle index of a hierarchy node in this mesh, if it is a leaf here.
  std::optional<int> find_leaf(int node_id) const;

  const std::vector<EdgeInfo>& edges() const { return edges_; }
  /// Neighboring triangle across local edge k of triangle i, or -1.
  int neighbor(int i, int k) const { return neighbors_[3 * i + k]; }
  /// Edge index of local edge k of triangle i.
  int edge_index(int i, int k) const { return edge_of_[3 * i + k]; }

  const std::shared_ptr<MeshHierarchy>& hierarchy() const { return hierarchy_; }
  bool same_mesh(const Mesh& other) const {
    return hierarchy_ == other.hierarchy_ && leaves_ == other.leaves_;
  }

 private:
  std::shared_ptr<MeshHierarchy> hierarchy_;
  std::vector<int> leaves_;              // node ids, one per triangle
  std::unordered_map<int, int> leaf_of_node_;
  std::vector<EdgeInfo> edges_;
  std::vector<int> neighbors_;           // 3 per triangle
  std::vector<int> edge_of_;             // 3 per triangle
  int num_vertices_ = 0;
};

/// n-by-n grid of squares on [-1,1]^2, each split along the lower-left to
/// upper-right diagonal; 2n^2 triangles of generation 0. The diagonal is the
/// longest edge and seeds the bisection (refinement) edge.
Mesh build_uniform(int n);

/// Bisects every marked triangle at its refinement edge and adds closure
/// bisections until the mesh is conforming. Empty set returns an equal mesh.
Mesh refine(const Mesh& mesh, std::span<const int> marked);

/// Merges sibling pairs back into their parent wherever both siblings are
/// marked leaves and the merge keeps the mesh conforming; other marks are
/// silently skipped. Level-0 triangles are never removed.
Mesh coarsen(const Mesh& mesh, std::span<const int> marked);

/// Per-(triangle,edge) inflow flags, decided by the sign of V.n at the edge
/// midpoint with n the outward normal of that triangle. V.n = 0 counts as
/// outflow.
struct EdgeClassification {
  std::vector<std::uint8_t> left_inflow;   // per edge
  std::vector<std::uint8_t> right_inflow;  // per edge; false on boundary edges
  std::vector<int> boundary_inflow;        // edge indices forming the inflow boundary
};

EdgeClassification classify_edges(const Mesh& mesh,
                                  const std::function<Vec2(Vec2)>& velocity);

}  // namespace amot
