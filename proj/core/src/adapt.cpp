#include "amot/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "amot/quadrature.hpp"

namespace amot {

void AmotConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must be in (0,1)");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("config: rho must be in (0,1)");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("config: theta must be in (0,1)");
  if (!(tau_min <= tau0 && tau0 <= tau_max))
    throw std::invalid_argument("config: need tau_min <= tau0 <= tau_max");
  if (!(growth_max > 1.0)) throw std::invalid_argument("config: growth_max must exceed 1");
  if (!(refine_frac > 0.0)) throw std::invalid_argument("config: refine_frac must be positive");
  if (!(coarsen_abs >= 0.0)) throw std::invalid_argument("config: coarsen_abs must be >= 0");
}

double temporal_estimator(const DgFunction& u3, const DgFunction& u2) {
  return l2_distance(u3, u2);
}

double propose_tau(double eps_T, double tau_k, const AmotConfig& cfg) {
  if (!(tau_k > 0.0)) throw std::invalid_argument("propose_tau: tau_k must be positive");
  if (eps_T < 0.0) throw std::invalid_argument("propose_tau: eps_T must be >= 0");
  double factor;
  if (eps_T == 0.0) {
    factor = cfg.growth_max;
  } else {
    factor = std::cbrt(cfg.rho * cfg.tol_T() / eps_T);
    factor = std::clamp(factor, 1.0 / cfg.growth_max, cfg.growth_max);
  }
  return std::clamp(factor * tau_k, cfg.tau_min, cfg.tau_max);
}

IndicatorResult residual_indicator(const DgFunction& u_new, const DgFunction& u_old,
                                   double tau, const ModelParams& params,
                                   const VelocityField& field) {
  if (!u_new.mesh->same_mesh(*u_old.mesh))
    throw std::invalid_argument("residual_indicator: functions on different meshes");
  if (!(tau > 0.0)) throw std::invalid_argument("residual_indicator: tau must be positive");

  const Mesh& mesh = *u_new.mesh;
  const int nt = mesh.num_triangles();
  const double eps = params.epsilon;
  const double inv_sqrt_eps = 1.0 / std::sqrt(eps);

  IndicatorResult out;
  out.cell.assign(nt, 0.0);
  out.jump.assign(nt, 0.0);
  out.boundary.assign(nt, 0.0);
  out.eta_E.assign(nt, 0.0);

  // Cell residual: for P1 the Laplacian vanishes, so the strong residual is
  // (u_new - u_old)/tau + V.grad(u) + (div V) u + (1/eps) f(u); its square is
  // degree <= 6 and integrates exactly with the degree-6 rule.
  for (int i = 0; i < nt; ++i) {
    const Triangle2 tri = mesh.triangle(i);
    const auto grad = tri.basis_gradients();
    Vec2 gu{0.0, 0.0};
    for (int j = 0; j < 3; ++j) gu = gu + u_new(i, j) * grad[j];
    const double jac = 2.0 * tri.signed_area();
    double acc = 0.0;
    for (const auto& q : tri_rule_deg6()) {
      const std::array<double, 3> bary = {q.l0, q.l1, q.l2};
      const Vec2 x = tri.point(bary);
      const double un = evaluate(u_new, i, bary);
      const double uo = evaluate(u_old, i, bary);
      const double r = (un - uo) / tau + dot(field.value(x), gu) +
                       field.divergence(x) * un + f_cubic(un).first / eps;
      acc += jac * q.w * r * r;
    }
    const double lambda_E = std::min(tri.diameter() * inv_sqrt_eps, 1.0);
    out.cell[i] = lambda_E * std::sqrt(std::max(acc, 0.0));
  }

  // Edge terms: interior edges contribute the normal-flux jump and the scaled
  // solution jump, halved between the two neighbors; boundary edges penalize
  // the Neumann flux of the discrete solution.
  std::vector<double> jump2(nt, 0.0), bnd2(nt, 0.0);
  const auto& edges = mesh.edges();
  for (const EdgeInfo& e : edges) {
    const double lambda_e = std::min(e.h * inv_sqrt_eps, 1.0);
    if (e.boundary()) {
      const Triangle2 tri = mesh.triangle(e.left);
      const auto grad = tri.basis_gradients();
      Vec2 gu{0.0, 0.0};
      for (int j = 0; j < 3; ++j) gu = gu + u_new(e.left, j) * grad[j];
      const double flux = eps * dot(gu, e.normal);
      bnd2[e.left] += inv_sqrt_eps * lambda_e * flux * flux * e.h;
      continue;
    }
    const Triangle2 lt = mesh.triangle(e.left);
    const Triangle2 rt = mesh.triangle(e.right);
    const auto lg = lt.basis_gradients();
    const auto rg = rt.basis_gradients();
    Vec2 gul{0.0, 0.0}, gur{0.0, 0.0};
    for (int j = 0; j < 3; ++j) {
      gul = gul + u_new(e.left, j) * lg[j];
      gur = gur + u_new(e.right, j) * rg[j];
    }
    const double flux_jump = eps * dot(gul - gur, e.normal);  // constant on e
    double sol_jump2 = 0.0;  // \int_e [u]^2, [u] linear along e
    {
      const int e0[3] = {1, 2, 0}, e1[3] = {2, 0, 1};
      for (const auto& q : edge_rule_deg5()) {
        std::array<double, 3> bl{}, br{};
        bl[e0[e.left_edge]] = 1.0 - q.t;
        bl[e1[e.left_edge]] = q.t;
        br[e0[e.right_edge]] = q.t;  // reversed traversal on the right side
        br[e1[e.right_edge]] = 1.0 - q.t;
        const double ju = evaluate(u_new, e.left, bl) - evaluate(u_new, e.right, br);
        sol_jump2 += e.h * q.w * ju * ju;
      }
    }
    const double contrib = 0.5 * (inv_sqrt_eps * lambda_e * flux_jump * flux_jump * e.h +
                                  (params.sigma * eps / e.h) * sol_jump2);
    jump2[e.left] += contrib;
    jump2[e.right] += contrib;
  }

  double total2 = 0.0;
  for (int i = 0; i < nt; ++i) {
    out.jump[i] = std::sqrt(jump2[i]);
    out.boundary[i] = std::sqrt(bnd2[i]);
    const double e2 = out.cell[i] * out.cell[i] + jump2[i] + bnd2[i];
    out.eta_E[i] = std::sqrt(e2);
    total2 += e2;
  }
  out.total = std::sqrt(total2);
  return out;
}

std::vector<int> bulk_mark(std::span<const double> eta_E, double theta) {
  if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("bulk_mark: theta must be in [0,1]");
  const int n = static_cast<int>(eta_E.size());
  double total2 = 0.0;
  for (double e : eta_E) total2 += e * e;
  if (total2 == 0.0 || theta == 0.0) return {};

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (eta_E[a] != eta_E[b]) return eta_E[a] > eta_E[b];
    return a < b;
  });

  std::vector<int> marked;
  double acc = 0.0;
  const double target = theta * total2;
  for (int id : order) {
    if (acc >= target) break;
    if (eta_E[id] == 0.0) break;
    marked.push_back(id);
    acc += eta_E[id] * eta_E[id];
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

SpatialEstimate aggregate_fine_difference(const DgFunction& a, const DgFunction& b,
                                          const Mesh& coarse) {
  if (!a.mesh->same_mesh(*b.mesh))
    throw std::invalid_argument("aggregate_fine_difference: functions on different meshes");
  const Mesh& fine = *a.mesh;
  if (fine.hierarchy() != coarse.hierarchy())
    throw std::invalid_argument("aggregate_fine_difference: meshes from different hierarchies");

  const L2Norms fine_norms = l2_norm_per_element(a, &b);
  const MeshHierarchy& h = *fine.hierarchy();

  SpatialEstimate out;
  out.per_element.assign(coarse.num_triangles(), 0.0);
  for (int i = 0; i < fine.num_triangles(); ++i) {
    int node = fine.node_id(i);
    std::optional<int> cl = coarse.find_leaf(node);
    while (!cl && h.node(node).parent >= 0) {
      node = h.node(node).parent;
      cl = coarse.find_leaf(node);
    }
    if (!cl)
      throw std::invalid_argument("aggregate_fine_difference: fine mesh not nested in coarse");
    out.per_element[*cl] += fine_norms.per_element[i] * fine_norms.per_element[i];
  }
  double total2 = 0.0;
  for (double& v : out.per_element) {
    total2 += v;
    v = std::sqrt(v);
  }
  out.total = std::sqrt(total2);
  out.ok = true;
  return out;
}

SpatialEstimate spatial_estimator(const DgFunction& u3_coarse, const DgFunction& u_prev,
                                  double tau, std::span<const int> bulk_set,
                                  const Ros3pTableau& tableau, const ModelParams& params,
                                  const VelocityField& field, const NonlinearReaction& reaction,
                                  const SolverOptions& solver_opts) {
  if (!u3_coarse.mesh->same_mesh(*u_prev.mesh))
    throw std::invalid_argument("spatial_estimator: functions on different meshes");
  const auto& coarse = u3_coarse.mesh;

  const auto fine = std::make_shared<const Mesh>(refine(*coarse, bulk_set));
  const DgFunction u_prev_fine = transfer(u_prev, fine);
  const BlockCsrMatrix M = mass_matrix(*fine);
  const BlockCsrMatrix A = assemble_stiffness(*fine, params, field);
  const StepResult fine_step = step(tableau, u_prev_fine, tau, M, A, reaction, solver_opts);
  if (!fine_step.ok) return {};

  const DgFunction u3_fine = transfer(u3_coarse, fine);
  return aggregate_fine_difference(fine_step.u3, u3_fine, *coarse);
}

std::pair<std::vector<int>, std::vector<int>> mark_space(std::span<const double> eps_S,
                                                         const AmotConfig& cfg) {
  std::vector<int> refine_set, coarsen_set;
  const double tol_S = cfg.tol_S();
  const double refine_thr = cfg.refine_frac * tol_S;
  for (int i = 0; i < static_cast<int>(eps_S.size()); ++i) {
    const double v = cfg.squared_spatial_thresholds ? eps_S[i] * eps_S[i] : eps_S[i];
    if (v > refine_thr)
      refine_set.push_back(i);
    else if (v < cfg.coarsen_abs)
      coarsen_set.push_back(i);
  }
  return {std::move(refine_set), std::move(coarsen_set)};
}

}  // namespace amot
