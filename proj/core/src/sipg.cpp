#include "amot/sipg.hpp"

#include <cmath>
#include <stdexcept>

#include "amot/quadrature.hpp"

namespace amot {

VelocityField VelocityField::zero() {
  return {"zero", [](Vec2) { return Vec2{0.0, 0.0}; }, [](Vec2) { return 0.0; }};
}

VelocityField VelocityField::sheering() {
  return {"sheering", [](Vec2 p) { return Vec2{0.0, -100.0 * p.x}; },
          [](Vec2) { return 0.0; }};
}

VelocityField VelocityField::expanding() {
  return {"expanding", [](Vec2 p) { return Vec2{10.0 * p.x, 10.0 * p.y}; },
          [](Vec2) { return 20.0; }};
}

VelocityField VelocityField::constant(Vec2 v) {
  return {"custom", [v](Vec2) { return v; }, [](Vec2) { return 0.0; }};
}

std::pair<double, double> f_cubic(double u) {
  // f = 2u - 6u^2 + 4u^3, f' = 2 - 12u + 12u^2
  return {2.0 * u - 6.0 * u * u + 4.0 * u * u * u, 2.0 - 12.0 * u + 12.0 * u * u};
}

NonlinearReaction NonlinearReaction::allen_cahn(double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("allen_cahn: epsilon must be positive");
  return {1.0 / epsilon, &f_cubic};
}

namespace {

// Values of the P1 basis of the left/right triangle at an edge point. The
// edge runs from vertex a to b of the owning triangle; local edge k has
// endpoints (k+1, k+2) mod 3 in CCW order, and t parametrizes a->b.
std::array<double, 3> edge_basis(int local_edge, double t, bool reversed) {
  const double s = reversed ? 1.0 - t : t;
  std::array<double, 3> bary{};
  const int e0[3] = {1, 2, 0}, e1[3] = {2, 0, 1};
  bary[e0[local_edge]] = 1.0 - s;
  bary[e1[local_edge]] = s;
  return bary;
}

}  // namespace

BlockCsrMatrix assemble_stiffness(const Mesh& mesh, const ModelParams& params,
                                  const VelocityField& field, const StiffnessTerms& terms) {
  if (params.epsilon <= 0.0) throw std::invalid_argument("assemble_stiffness: epsilon <= 0");
  if (params.sigma <= 0.0) throw std::invalid_argument("assemble_stiffness: sigma <= 0");

  BlockCsrMatrix A = BlockCsrMatrix::mesh_pattern(mesh);
  const double eps = params.epsilon;
  const auto tri_rule = tri_rule_deg4();
  const auto edge_rule = edge_rule_deg5();

  // Element terms.
  for (int i = 0; i < mesh.num_triangles(); ++i) {
    const Triangle2 tri = mesh.triangle(i);
    const double area = tri.signed_area();
    const auto grad = tri.basis_gradients();
    Block3 blk{};

    if (terms.diffusion) {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) blk[3 * r + c] += eps * area * dot(grad[r], grad[c]);
    }

    if (terms.advection) {
      const double jac = 2.0 * area;
      for (const auto& q : tri_rule) {
        const std::array<double, 3> bary = {q.l0, q.l1, q.l2};
        const Vec2 x = tri.point(bary);
        const Vec2 v = field.value(x);
        const double dv = field.divergence(x);
        for (int r = 0; r < 3; ++r) {
          const double w = jac * q.w * bary[r];  // test function r
          for (int c = 0; c < 3; ++c)
            blk[3 * r + c] += w * (dot(v, grad[c]) + dv * bary[c]);
        }
      }
    }
    A.add_block(i, i, blk);
  }

  // Edge terms. Inflow membership is decided once per edge at the midpoint;
  // V.n inside the integrals is evaluated at the quadrature points.
  const EdgeClassification cls = classify_edges(mesh, field.value);
  const auto& edges = mesh.edges();
  for (size_t ei = 0; ei < edges.size(); ++ei) {
    const EdgeInfo& e = edges[ei];
    const Vec2 pa = mesh.vertex(e.a);
    const Vec2 pb = mesh.vertex(e.b);

    if (e.boundary()) {
      if (terms.boundary_inflow && cls.left_inflow[ei]) {
        // -\int_e V.n u_in v ds with V.n < 0: dissipative inflow term.
        Block3 blk{};
        for (const auto& q : edge_rule) {
          const Vec2 x = pa + q.t * (pb - pa);
          const double vn = dot(field.value(x), e.normal);
          const auto bl = edge_basis(e.left_edge, q.t, false);
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
              blk[3 * r + c] -= e.h * q.w * vn * bl[c] * bl[r];
        }
        A.add_block(e.left, e.left, blk);
      }
      continue;
    }

    // Interior edge: basis traces from both sides. The right triangle sees
    // the edge through its own local edge whose endpoints run b->a, so its
    // parametrization is reversed.
    const int L = e.left, R = e.right;
    const Triangle2 ltri = mesh.triangle(L);
    const Triangle2 rtri = mesh.triangle(R);
    const auto lgrad = ltri.basis_gradients();
    const auto rgrad = rtri.basis_gradients();

    Block3 bll{}, blr{}, brl{}, brr{};

    for (const auto& q : edge_rule) {
      const Vec2 x = pa + q.t * (pb - pa);
      const double w = e.h * q.w;
      const auto bl = edge_basis(e.left_edge, q.t, false);
      const auto br = edge_basis(e.right_edge, q.t, true);

      if (terms.upwind) {
        const double vn = dot(field.value(x), e.normal);
        // \int_{dE^-} V.n_E (u_out - u_in) v ds from whichever side is inflow.
        if (cls.left_inflow[ei]) {
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
              bll[3 * r + c] -= w * vn * bl[c] * bl[r];
              blr[3 * r + c] += w * vn * br[c] * bl[r];
            }
        } else if (cls.right_inflow[ei]) {
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
              brr[3 * r + c] += w * vn * br[c] * br[r];  // V.n_R = -vn
              brl[3 * r + c] -= w * vn * bl[c] * br[r];
            }
        }
      }

      if (terms.penalty) {
        const double pen = params.sigma * eps / e.h;
        // [u][v] with scalar jumps (u_L - u_R)(v_L - v_R).
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) {
            bll[3 * r + c] += w * pen * bl[c] * bl[r];
            blr[3 * r + c] -= w * pen * br[c] * bl[r];
            brl[3 * r + c] -= w * pen * bl[c] * br[r];
            brr[3 * r + c] += w * pen * br[c] * br[r];
          }
      }

      if (terms.consistency) {
        // -({eps grad v}.[u] + {eps grad u}.[v]) with [w] = (w_L - w_R) n_L.
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) {
            const double gvl = 0.5 * eps * dot(lgrad[r], e.normal);
            const double gvr = 0.5 * eps * dot(rgrad[r], e.normal);
            const double gul = 0.5 * eps * dot(lgrad[c], e.normal);
            const double gur = 0.5 * eps * dot(rgrad[c], e.normal);
            bll[3 * r + c] -= w * (gvl * bl[c] + gul * bl[r]);
            blr[3 * r + c] -= w * (gvl * (-br[c]) + gur * bl[r]);
            brl[3 * r + c] -= w * (gvr * bl[c] + gul * (-br[r]));
            brr[3 * r + c] -= w * (gvr * (-br[c]) + gur * (-br[r]));
          }
      }
    }

    A.add_block(L, L, bll);
    A.add_block(L, R, blr);
    A.add_block(R, L, brl);
    A.add_block(R, R, brr);
  }

  A.compress();
  return A;
}

std::vector<double> assemble_nonlinear(const DgFunction& u, const NonlinearReaction& reaction) {
  const Mesh& mesh = *u.mesh;
  std::vector<double> out(mesh.num_dofs(), 0.0);
  if (!reaction.f || reaction.scale == 0.0) return out;
  for (int i = 0; i < mesh.num_triangles(); ++i) {
    const double jac = 2.0 * mesh.area(i);
    for (const auto& q : tri_rule_deg4()) {
      const std::array<double, 3> bary = {q.l0, q.l1, q.l2};
      const double uval = evaluate(u, i, bary);
      const double fv = reaction.scale * reaction.f(uval).first;
      for (int j = 0; j < 3; ++j) out[3 * i + j] += jac * q.w * fv * bary[j];
    }
  }
  return out;
}

std::vector<double> assemble_nonlinear(const DgFunction& u, const ModelParams& params) {
  return assemble_nonlinear(u, NonlinearReaction::allen_cahn(params.epsilon));
}

std::vector<double> assemble_load(const Mesh& mesh, const std::function<double(Vec2)>& g) {
  std::vector<double> out(mesh.num_dofs(), 0.0);
  for (int i = 0; i < mesh.num_triangles(); ++i) {
    const Triangle2 tri = mesh.triangle(i);
    const double jac = 2.0 * tri.signed_area();
    for (const auto& q : tri_rule_deg6()) {
      const std::array<double, 3> bary = {q.l0, q.l1, q.l2};
      const double gv = g(tri.point(bary));
      for (int j = 0; j < 3; ++j) out[3 * i + j] += jac * q.w * gv * bary[j];
    }
  }
  return out;
}

BlockCsrMatrix assemble_jacobian(const DgFunction& u, const BlockCsrMatrix& A,
                                 const NonlinearReaction& reaction) {
  if (A.block_rows() != u.mesh->num_triangles())
    throw std::invalid_argument("assemble_jacobian: operator size mismatch");
  BlockCsrMatrix J = A;
  J.scale(-1.0);
  if (!reaction.f || reaction.scale == 0.0) return J;
  const Mesh& mesh = *u.mesh;
  for (int i = 0; i < mesh.num_triangles(); ++i) {
    const double jac = 2.0 * mesh.area(i);
    Block3 blk{};
    for (const auto& q : tri_rule_deg4()) {
      const std::array<double, 3> bary = {q.l0, q.l1, q.l2};
      const double uval = evaluate(u, i, bary);
      const double fp = reaction.scale * reaction.f(uval).second;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) blk[3 * r + c] -= jac * q.w * fp * bary[c] * bary[r];
    }
    J.add_block(i, i, blk);
  }
  return J;
}

bool check_coercivity(const Mesh& mesh, const ModelParams& params, int iterations) {
  const BlockCsrMatrix A =
      assemble_stiffness(mesh, params, VelocityField::zero(), StiffnessTerms::diffusion_only());
  const int n = A.rows();

  // Gershgorin upper bound, then power iteration on cI - A targets c - lambda_min.
  double c = 0.0;
  for (int i = 0; i < A.block_rows(); ++i) {
    const auto rp = A.row_ptr();
    const auto cols = A.col();
    const auto val = A.values();
    for (int r = 0; r < 3; ++r) {
      double radius = 0.0, diag = 0.0;
      for (int k = rp[i]; k < rp[i + 1]; ++k)
        for (int q = 0; q < 3; ++q) {
          const double v = val[9 * k + 3 * r + q];
          if (cols[k] == i && q == r)
            diag = v;
          else
            radius += std::abs(v);
        }
      c = std::max(c, diag + radius);
    }
  }
  if (c == 0.0) return true;

  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(1.0 + 0.7 * i);  // fixed seed vector
  double lam = 0.0;
  for (int it = 0; it < iterations; ++it) {
    A.matvec(x, y);
    for (int i = 0; i < n; ++i) y[i] = c * x[i] - y[i];
    double nrm = 0.0;
    for (double v : y) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return true;
    for (int i = 0; i < n; ++i) x[i] = y[i] / nrm;
    lam = nrm;
  }
  const double lambda_min = c - lam;
  return lambda_min >= -1e-8 * c;
}

}  // namespace amot
