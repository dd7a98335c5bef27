#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "amot/mesh.hpp"
#include "amot/sparsela.hpp"

namespace amot {

/// Piecewise-linear discontinuous function: three nodal values per triangle,
/// entry (E, j) = value at vertex j of triangle E.
struct DgFunction {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> coeff;

  DgFunction() = default;
  explicit DgFunction(std::shared_ptr<const Mesh> m, double fill = 0.0)
      : mesh(std::move(m)), coeff(mesh->num_dofs(), fill) {}

  double& operator()(int tri, int j) { return coeff[3 * tri + j]; }
  double operator()(int tri, int j) const { return coeff[3 * tri + j]; }
  int size() const { return static_cast<int>(coeff.size()); }
  bool finite() const;
};

/// Exact P1 mass block of a triangle with area |E|: (|E|/12) [[2,1,1],[1,2,1],[1,1,2]].
Block3 local_mass_block(double area);

/// Block-diagonal mass matrix; (M u, v) equals the L2 inner product of the
/// piecewise-linear functions u, v.
BlockCsrMatrix mass_matrix(const Mesh& mesh);

/// Moves a function to another mesh of the same bisection hierarchy. Where the
/// target is finer the parent polynomial is restricted exactly; where the
/// target is coarser the children data is L2-projected onto the parent's P1
/// space.
DgFunction transfer(const DgFunction& u, std::shared_ptr<const Mesh> target);

struct L2Norms {
  double total = 0.0;
  std::vector<double> per_element;
};

/// Per-element L2 norms of u - v (v optional), computed exactly from the mass
/// block. total = sqrt(sum of squares).
L2Norms l2_norm_per_element(const DgFunction& u, const DgFunction* v = nullptr);
double l2_norm(const DgFunction& u);
double l2_distance(const DgFunction& u, const DgFunction& v);

/// Value of u at a barycentric point of triangle `tri`.
double evaluate(const DgFunction& u, int tri, const std::array<double, 3>& bary);

/// Element-wise L2 projection of a scalar field, by degree-4 quadrature on
/// each triangle split into 4^subdivide congruent sub-triangles (subdivide
/// may vary per element; pass {} for plain quadrature everywhere).
DgFunction project(std::shared_ptr<const Mesh> mesh,
                   const std::function<double(Vec2)>& f,
                   const std::function<int(int)>& subdivide_levels = {});

/// Nodal interpolation (values at the three vertices of each triangle).
DgFunction interpolate(std::shared_ptr<const Mesh> mesh,
                       const std::function<double(Vec2)>& f);

}  // namespace amot
