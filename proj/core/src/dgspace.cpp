#include "amot/dgspace.hpp"

#include <cmath>
#include <stdexcept>

#include "amot/quadrature.hpp"

namespace amot {

bool DgFunction::finite() const {
  for (double v : coeff)
    if (!std::isfinite(v)) return false;
  return true;
}

Block3 local_mass_block(double area) {
  const double s = area / 12.0;
  return {2 * s, s, s, s, 2 * s, s, s, s, 2 * s};
}

BlockCsrMatrix mass_matrix(const Mesh& mesh) {
  BlockCsrMatrix m = BlockCsrMatrix::diagonal_pattern(mesh.num_triangles());
  for (int i = 0; i < mesh.num_triangles(); ++i)
    m.add_block(i, i, local_mass_block(mesh.area(i)));
  return m;
}

L2Norms l2_norm_per_element(const DgFunction& u, const DgFunction* v) {
  if (v && !u.mesh->same_mesh(*v->mesh))
    throw std::invalid_argument("l2_norm_per_element: functions on different meshes");
  const Mesh& mesh = *u.mesh;
  L2Norms out;
  out.per_element.resize(mesh.num_triangles());
  double total2 = 0.0;
  for (int i = 0; i < mesh.num_triangles(); ++i) {
    const double s = mesh.area(i) / 12.0;
    double d0 = u(i, 0), d1 = u(i, 1), d2 = u(i, 2);
    if (v) {
      d0 -= (*v)(i, 0);
      d1 -= (*v)(i, 1);
      d2 -= (*v)(i, 2);
    }
    const double q = s * (2 * (d0 * d0 + d1 * d1 + d2 * d2) + 2 * (d0 * d1 + d1 * d2 + d0 * d2));
    out.per_element[i] = std::sqrt(std::max(q, 0.0));
    total2 += q;
  }
  out.total = std::sqrt(std::max(total2, 0.0));
  return out;
}

double l2_norm(const DgFunction& u) { return l2_norm_per_element(u).total; }

double l2_distance(const DgFunction& u, const DgFunction& v) {
  return l2_norm_per_element(u, &v).total;
}

double evaluate(const DgFunction& u, int tri, const std::array<double, 3>& bary) {
  if (tri < 0 || tri >= u.mesh->num_triangles())
    throw std::invalid_argument("evaluate: triangle id out of range");
  // Anchored form: exact for constant data even when the barycentric
  // coordinates do not sum to 1 to the last ulp.
  const double c0 = u(tri, 0);
  return c0 + bary[1] * (u(tri, 1) - c0) + bary[2] * (u(tri, 2) - c0);
}

namespace {

// Ancestor of `node` that is a leaf of `mesh`, or -1.
int leaf_ancestor(const MeshHierarchy& h, const Mesh& mesh, int node) {
  int p = h.node(node).parent;
  while (p >= 0) {
    if (mesh.find_leaf(p)) return p;
    p = h.node(p).parent;
  }
  return -1;
}

// Accumulates \int_leaf u_src * phi_i^{parent} dx for all source leaves below
// `node`, by degree-4 quadrature on each source leaf (exact: the integrand is
// quadratic).
void accumulate_projection_rhs(const MeshHierarchy& h, const Mesh& src_mesh,
                               const DgFunction& u, int node,
                               const Triangle2& parent_tri,
                               std::array<double, 3>& rhs) {
  if (auto leaf = src_mesh.find_leaf(node)) {
    const Triangle2 tri = h.triangle(node);
    const double jac = 2.0 * tri.signed_area();
    for (const auto& q : tri_rule_deg4()) {
      const Vec2 x = tri.point({q.l0, q.l1, q.l2});
      const double uval = q.l0 * u(*leaf, 0) + q.l1 * u(*leaf, 1) + q.l2 * u(*leaf, 2);
      const auto pb = parent_tri.barycentric(x);
      for (int j = 0; j < 3; ++j) rhs[j] += jac * q.w * uval * pb[j];
    }
    return;
  }
  const auto& n = h.node(node);
  if (n.child[0] < 0)
    throw std::invalid_argument("transfer: meshes do not cover each other");
  accumulate_projection_rhs(h, src_mesh, u, n.child[0], parent_tri, rhs);
  accumulate_projection_rhs(h, src_mesh, u, n.child[1], parent_tri, rhs);
}

}  // namespace

DgFunction transfer(const DgFunction& u, std::shared_ptr<const Mesh> target) {
  const Mesh& src = *u.mesh;
  if (src.hierarchy() != target->hierarchy())
    throw std::invalid_argument("transfer: meshes from different hierarchies");
  if (src.same_mesh(*target)) {
    DgFunction out = u;
    out.mesh = target;
    return out;
  }

  const MeshHierarchy& h = *src.hierarchy();
  DgFunction out(target);
  for (int i = 0; i < target->num_triangles(); ++i) {
    const int node = target->node_id(i);
    if (auto sl = src.find_leaf(node)) {
      out(i, 0) = u(*sl, 0);
      out(i, 1) = u(*sl, 1);
      out(i, 2) = u(*sl, 2);
      continue;
    }
    if (int anc = leaf_ancestor(h, src, node); anc >= 0) {
      // Target is finer here: evaluate the ancestor's linear polynomial at the
      // target vertices (exact restriction).
      const int sl = *src.find_leaf(anc);
      const Triangle2 anc_tri = h.triangle(anc);
      for (int j = 0; j < 3; ++j) {
        const auto bary = anc_tri.barycentric(target->vertex(target->triangle_vertices(i)[j]));
        out(i, j) = bary[0] * u(sl, 0) + bary[1] * u(sl, 1) + bary[2] * u(sl, 2);
      }
      continue;
    }
    // Target is coarser here: L2-project the descendants' data.
    const Triangle2 tri = target->triangle(i);
    std::array<double, 3> rhs{};
    accumulate_projection_rhs(h, src, u, node, tri, rhs);
    std::array<double, 3> x{};
    solve3x3(local_mass_block(tri.signed_area()), rhs, x);
    out(i, 0) = x[0];
    out(i, 1) = x[1];
    out(i, 2) = x[2];
  }
  return out;
}

namespace {

void project_element(const Triangle2& tri, const std::function<double(Vec2)>& f,
                     int levels, std::array<double, 3>& rhs, const Triangle2& base) {
  if (levels > 0) {
    const Vec2 m01 = midpoint(tri.p[0], tri.p[1]);
    const Vec2 m12 = midpoint(tri.p[1], tri.p[2]);
    const Vec2 m20 = midpoint(tri.p[2], tri.p[0]);
    project_element({{tri.p[0], m01, m20}}, f, levels - 1, rhs, base);
    project_element({{m01, tri.p[1], m12}}, f, levels - 1, rhs, base);
    project_element({{m20, m12, tri.p[2]}}, f, levels - 1, rhs, base);
    project_element({{m01, m12, m20}}, f, levels - 1, rhs, base);
    return;
  }
  const double jac = 2.0 * tri.signed_area();
  for (const auto& q : tri_rule_deg4()) {
    const Vec2 x = tri.point({q.l0, q.l1, q.l2});
    const double fx = f(x);
    const auto pb = base.barycentric(x);
    for (int j = 0; j < 3; ++j) rhs[j] += jac * q.w * fx * pb[j];
  }
}

}  // namespace

DgFunction project(std::shared_ptr<const Mesh> mesh, const std::function<double(Vec2)>& f,
                   const std::function<int(int)>& subdivide_levels) {
  DgFunction out(mesh);
  for (int i = 0; i < mesh->num_triangles(); ++i) {
    const Triangle2 tri = mesh->triangle(i);
    const int levels = subdivide_levels ? subdivide_levels(i) : 0;
    std::array<double, 3> rhs{};
    project_element(tri, f, levels, rhs, tri);
    std::array<double, 3> x{};
    solve3x3(local_mass_block(tri.signed_area()), rhs, x);
    out(i, 0) = x[0];
    out(i, 1) = x[1];
    out(i, 2) = x[2];
  }
  return out;
}

DgFunction interpolate(std::shared_ptr<const Mesh> mesh, const std::function<double(Vec2)>& f) {
  DgFunction out(mesh);
  for (int i = 0; i < mesh->num_triangles(); ++i) {
    const Triangle2 tri = mesh->triangle(i);
    for (int j = 0; j < 3; ++j) out(i, j) = f(tri.p[j]);
  }
  return out;
}

}  // namespace amot
