#include "amot/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace amot {

namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

// Endpoint local indices (in CCW order) of local edge k; edge k is opposite
// vertex k.
constexpr int kEdgeEnd0[3] = {1, 2, 0};
constexpr int kEdgeEnd1[3] = {2, 0, 1};

}  // namespace

MeshHierarchy::MeshHierarchy(std::vector<Vec2> vertices, std::vector<HierarchyNode> roots)
    : nodes_(std::move(roots)), vertices_(std::move(vertices)),
      num_roots_(static_cast<int>(nodes_.size())) {}

std::array<int, 2> MeshHierarchy::refine_edge_vertices(int node_id) const {
  const auto& n = nodes_[node_id];
  const int k = n.refine_edge;
  return {n.v[kEdgeEnd0[k]], n.v[kEdgeEnd1[k]]};
}

int MeshHierarchy::midpoint_vertex(int a, int b) {
  const auto key = edge_key(a, b);
  auto it = midpoint_of_edge_.find(key);
  if (it != midpoint_of_edge_.end()) return it->second;
  const int id = static_cast<int>(vertices_.size());
  vertices_.push_back(midpoint(vertices_[a], vertices_[b]));
  midpoint_of_edge_.emplace(key, id);
  return id;
}

std::array<int, 2> MeshHierarchy::ensure_children(int node_id) {
  std::lock_guard<std::mutex> lock(mutex_);
  HierarchyNode& n = nodes_[node_id];
  if (n.child[0] >= 0) return n.child;

  const int k = n.refine_edge;
  const int va = n.v[kEdgeEnd0[k]];
  const int vb = n.v[kEdgeEnd1[k]];
  const int peak = n.v[k];
  const int m = midpoint_vertex(va, vb);

  // Newest-vertex rule: child refinement edges are the edges opposite the new
  // vertex m, i.e. the former edges (peak,va) and (vb,peak) of the parent.
  HierarchyNode a{{va, m, peak}, node_id, {-1, -1}, -1, 1,
                  n.generation + 1, n.root};
  HierarchyNode b{{m, vb, peak}, node_id, {-1, -1}, -1, 0,
                  n.generation + 1, n.root};

  const int ida = static_cast<int>(nodes_.size());
  nodes_.push_back(a);
  nodes_.push_back(b);
  HierarchyNode& parent = nodes_[node_id];  // re-reference after push_back
  parent.child = {ida, ida + 1};
  parent.midpoint = m;
  return parent.child;
}

Mesh::Mesh(std::shared_ptr<MeshHierarchy> hierarchy, std::vector<int> leaf_nodes)
    : hierarchy_(std::move(hierarchy)), leaves_(std::move(leaf_nodes)) {
  const int nt = num_triangles();
  leaf_of_node_.reserve(nt);
  for (int i = 0; i < nt; ++i) leaf_of_node_.emplace(leaves_[i], i);

  neighbors_.assign(3 * nt, -1);
  edge_of_.assign(3 * nt, -1);

  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(3 * nt);
  edges_.reserve(3 * nt / 2 + 2);
  std::unordered_set<int> used_vertices;
  used_vertices.reserve(nt);

  for (int i = 0; i < nt; ++i) {
    const auto& node = hierarchy_->node(leaves_[i]);
    if (triangle(i).signed_area() <= 0.0)
      throw std::runtime_error("mesh: non-positive triangle area");
    for (int v : node.v) used_vertices.insert(v);
    for (int k = 0; k < 3; ++k) {
      const int a = node.v[kEdgeEnd0[k]];
      const int b = node.v[kEdgeEnd1[k]];
      const auto key = edge_key(a, b);
      auto it = edge_index.find(key);
      if (it == edge_index.end()) {
        EdgeInfo e;
        e.a = a;
        e.b = b;
        e.left = i;
        e.right = -1;
        e.left_edge = static_cast<std::int8_t>(k);
        e.right_edge = -1;
        const Vec2 pa = hierarchy_->vertex(a);
        const Vec2 pb = hierarchy_->vertex(b);
        const Vec2 t = pb - pa;
        e.h = norm(t);
        // (a,b) traverses the triangle CCW, so the outward normal is the
        // clockwise rotation of the tangent.
        e.normal = {t.y / e.h, -t.x / e.h};
        edge_index.emplace(key, static_cast<int>(edges_.size()));
        edges_.push_back(e);
      } else {
        EdgeInfo& e = edges_[it->second];
        if (e.right >= 0)
          throw std::runtime_error("mesh: edge shared by more than two triangles");
        e.right = i;
        e.right_edge = static_cast<std::int8_t>(k);
      }
    }
  }

  for (int ei = 0; ei < static_cast<int>(edges_.size()); ++ei) {
    const EdgeInfo& e = edges_[ei];
    edge_of_[3 * e.left + e.left_edge] = ei;
    if (e.right >= 0) {
      edge_of_[3 * e.right + e.right_edge] = ei;
      neighbors_[3 * e.left + e.left_edge] = e.right;
      neighbors_[3 * e.right + e.right_edge] = e.left;
    }
  }
  num_vertices_ = static_cast<int>(used_vertices.size());
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (int i = 0; i < num_triangles(); ++i) sum += area(i);
  return sum;
}

std::optional<int> Mesh::find_leaf(int node_id) const {
  auto it = leaf_of_node_.find(node_id);
  if (it == leaf_of_node_.end()) return std::nullopt;
  return it->second;
}

Mesh build_uniform(int n) {
  if (n < 1) throw std::invalid_argument("build_uniform: n must be >= 1");

  std::vector<Vec2> verts;
  verts.reserve(static_cast<size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      verts.push_back({-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n});

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };

  std::vector<HierarchyNode> roots;
  roots.reserve(static_cast<size_t>(2) * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      const int r = static_cast<int>(roots.size());
      // Lower triangle (a,b,c): diagonal a-c is local edge 1 (opposite b).
      roots.push_back({{a, b, c}, -1, {-1, -1}, -1, 1, 0, r});
      // Upper triangle (a,c,d): diagonal a-c is local edge 2 (opposite d).
      roots.push_back({{a, c, d}, -1, {-1, -1}, -1, 2, 0, r + 1});
    }
  }

  auto hierarchy = std::make_shared<MeshHierarchy>(std::move(verts), std::move(roots));
  std::vector<int> leaves(hierarchy->num_roots());
  for (int i = 0; i < hierarchy->num_roots(); ++i) leaves[i] = i;
  return Mesh(std::move(hierarchy), std::move(leaves));
}

namespace {

// Working leaf set during refinement. Bisections are recorded as a split map;
// the final leaf list is emitted by expanding the original order depth-first,
// which keeps children adjacent and the result deterministic.
struct LeafEditor {
  explicit LeafEditor(const Mesh& mesh)
      : hierarchy(mesh.hierarchy()),
        original(mesh.leaf_nodes().begin(), mesh.leaf_nodes().end()) {
    alive.reserve(2 * original.size());
    incident.reserve(3 * original.size());
    for (int node : original) alive.emplace(node, true);
    for (int node : original) add_edges(node);
  }

  void add_edges(int node_id) {
    const auto& n = hierarchy->node(node_id);
    for (int k = 0; k < 3; ++k)
      incident[edge_key(n.v[kEdgeEnd0[k]], n.v[kEdgeEnd1[k]])].push_back(node_id);
  }

  void remove_edges(int node_id) {
    const auto& n = hierarchy->node(node_id);
    for (int k = 0; k < 3; ++k) {
      auto& vec = incident[edge_key(n.v[kEdgeEnd0[k]], n.v[kEdgeEnd1[k]])];
      vec.erase(std::remove(vec.begin(), vec.end(), node_id), vec.end());
    }
  }

  bool is_alive(int node_id) const {
    auto it = alive.find(node_id);
    return it != alive.end() && it->second;
  }

  // Alive neighbor sharing edge (a,b) with `node_id`, or -1.
  int neighbor_across(int node_id, int a, int b) const {
    auto it = incident.find(edge_key(a, b));
    if (it == incident.end()) return -1;
    for (int other : it->second)
      if (other != node_id) return other;
    return -1;
  }

  void bisect(int node_id) {
    const auto children = hierarchy->ensure_children(node_id);
    remove_edges(node_id);
    alive[node_id] = false;
    split.emplace(node_id, children);
    alive[children[0]] = true;
    alive[children[1]] = true;
    add_edges(children[0]);
    add_edges(children[1]);
  }

  std::vector<int> emit() const {
    std::vector<int> out;
    out.reserve(alive.size());
    for (int node : original) expand(node, out);
    return out;
  }

  void expand(int node, std::vector<int>& out) const {
    auto it = split.find(node);
    if (it == split.end()) {
      out.push_back(node);
    } else {
      expand(it->second[0], out);
      expand(it->second[1], out);
    }
  }

  std::shared_ptr<MeshHierarchy> hierarchy;
  std::vector<int> original;
  std::unordered_map<int, bool> alive;
  std::unordered_map<int, std::array<int, 2>> split;
  std::unordered_map<std::uint64_t, std::vector<int>> incident;
};

}  // namespace

Mesh refine(const Mesh& mesh, std::span<const int> marked) {
  for (int t : marked)
    if (t < 0 || t >= mesh.num_triangles())
      throw std::invalid_argument("refine: triangle id out of range");
  if (marked.empty()) return Mesh(mesh.hierarchy(), {mesh.leaf_nodes().begin(), mesh.leaf_nodes().end()});

  LeafEditor ed(mesh);

  std::vector<int> stack;
  std::vector<int> order(marked.begin(), marked.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    stack.push_back(mesh.node_id(*it));

  // Recursive newest-vertex closure with an explicit stack: a triangle is
  // bisected together with its refinement-edge neighbor; an incompatible
  // neighbor is bisected first, which makes the child facing this edge
  // compatible.
  size_t budget = 200 * ed.original.size() + 1000;
  while (!stack.empty()) {
    if (budget-- == 0) throw std::runtime_error("refine: closure did not terminate");
    const int t = stack.back();
    if (!ed.is_alive(t)) {
      stack.pop_back();
      continue;
    }
    const auto [va, vb] = ed.hierarchy->refine_edge_vertices(t);
    const int nb = ed.neighbor_across(t, va, vb);
    if (nb >= 0) {
      const auto [na, nbv] = ed.hierarchy->refine_edge_vertices(nb);
      const bool compatible = (edge_key(na, nbv) == edge_key(va, vb));
      if (!compatible) {
        stack.push_back(nb);
        continue;
      }
      ed.bisect(t);
      ed.bisect(nb);
    } else {
      ed.bisect(t);
    }
    stack.pop_back();
  }

  return Mesh(ed.hierarchy, ed.emit());
}

Mesh coarsen(const Mesh& mesh, std::span<const int> marked) {
  for (int t : marked)
    if (t < 0 || t >= mesh.num_triangles())
      throw std::invalid_argument("coarsen: triangle id out of range");

  const auto& hierarchy = mesh.hierarchy();

  std::unordered_set<int> marked_nodes;
  for (int t : marked) marked_nodes.insert(mesh.node_id(t));

  // Candidate parents: both children are marked leaves of this mesh.
  std::vector<int> candidates;
  std::unordered_set<int> seen;
  for (int node : marked_nodes) {
    const int p = hierarchy->node(node).parent;
    if (p < 0 || !seen.insert(p).second) continue;
    const auto& pn = hierarchy->node(p);
    if (marked_nodes.count(pn.child[0]) && marked_nodes.count(pn.child[1]) &&
        mesh.find_leaf(pn.child[0]) && mesh.find_leaf(pn.child[1]))
      candidates.push_back(p);
  }
  if (candidates.empty())
    return Mesh(hierarchy, {mesh.leaf_nodes().begin(), mesh.leaf_nodes().end()});

  // A merge is conforming only if the bisection vertex disappears entirely:
  // every leaf touching it must be a child of a candidate parent sharing it.
  std::unordered_map<int, std::vector<int>> candidates_by_mid;
  for (int p : candidates) candidates_by_mid[hierarchy->node(p).midpoint].push_back(p);

  std::unordered_map<int, int> touch_count;  // midpoint vertex -> #leaves touching it
  for (int i = 0; i < mesh.num_triangles(); ++i)
    for (int v : mesh.triangle_vertices(i)) {
      auto it = candidates_by_mid.find(v);
      if (it != candidates_by_mid.end()) ++touch_count[v];
    }

  std::unordered_map<int, int> parent_of_child;  // child node -> parent to restore
  for (const auto& [mid, parents] : candidates_by_mid) {
    if (touch_count[mid] != 2 * static_cast<int>(parents.size())) continue;
    for (int p : parents) {
      const auto& pn = hierarchy->node(p);
      parent_of_child.emplace(pn.child[0], p);
      parent_of_child.emplace(pn.child[1], p);
    }
  }
  if (parent_of_child.empty())
    return Mesh(hierarchy, {mesh.leaf_nodes().begin(), mesh.leaf_nodes().end()});

  std::vector<int> leaves;
  leaves.reserve(mesh.num_triangles());
  std::unordered_set<int> emitted_parents;
  for (int node : mesh.leaf_nodes()) {
    auto it = parent_of_child.find(node);
    if (it == parent_of_child.end()) {
      leaves.push_back(node);
    } else if (emitted_parents.insert(it->second).second) {
      leaves.push_back(it->second);
    }
  }
  return Mesh(hierarchy, std::move(leaves));
}

EdgeClassification classify_edges(const Mesh& mesh,
                                  const std::function<Vec2(Vec2)>& velocity) {
  const auto& edges = mesh.edges();
  EdgeClassification cls;
  cls.left_inflow.assign(edges.size(), 0);
  cls.right_inflow.assign(edges.size(), 0);
  for (size_t i = 0; i < edges.size(); ++i) {
    const EdgeInfo& e = edges[i];
    const Vec2 mid = midpoint(mesh.vertex(e.a), mesh.vertex(e.b));
    const double vn = dot(velocity(mid), e.normal);  // normal outward from left
    if (vn < 0.0) cls.left_inflow[i] = 1;
    if (e.right >= 0 && vn > 0.0) cls.right_inflow[i] = 1;
    if (e.right < 0 && vn < 0.0) cls.boundary_inflow.push_back(static_cast<int>(i));
  }
  return cls;
}

}  // namespace amot
