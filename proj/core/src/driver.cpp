#include "amot/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <stdexcept>

#include "amot/output.hpp"

namespace amot {

Experiment Experiment::sheering() {
  Experiment e;
  e.name = "sheering";
  e.velocity = VelocityField::sheering();
  e.ic_lo = -0.1;
  e.ic_hi = 0.1;
  e.ic_value = 1.0;
  e.t_final = 0.06;
  e.epsilon = 0.01;
  return e;
}

Experiment Experiment::expanding() {
  Experiment e;
  e.name = "expanding";
  e.velocity = VelocityField::expanding();
  e.ic_lo = -0.3;
  e.ic_hi = 0.3;
  e.ic_value = 1.0;
  e.t_final = 0.06;
  e.epsilon = 0.01;
  return e;
}

AmotProblem AmotProblem::make(const Experiment& exp, AmotConfig cfg, double sigma,
                              SolverOptions solver) {
  cfg.validate();
  AmotProblem p;
  p.experiment = exp;
  p.params = {exp.epsilon, sigma};
  p.cfg = cfg;
  p.tableau = default_tableau();
  const TableauReport rep = validate_tableau(p.tableau);
  if (!rep.pass)
    throw std::runtime_error("tableau validation failed: " + rep.message);
  p.reaction = NonlinearReaction::allen_cahn(exp.epsilon);
  p.solver = solver;
  return p;
}

namespace {

// Elements cut by the boundary of [lo,hi]^2 (bounding-box overlap without
// full containment; exact for triangles against an axis-aligned square).
std::vector<int> square_cut_elements(const Mesh& m, double lo, double hi) {
  const auto inside = [lo, hi](Vec2 p) {
    return p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi;
  };
  std::vector<int> cut;
  for (int i = 0; i < m.num_triangles(); ++i) {
    const Triangle2 tri = m.triangle(i);
    const double bx0 = std::min({tri.p[0].x, tri.p[1].x, tri.p[2].x});
    const double bx1 = std::max({tri.p[0].x, tri.p[1].x, tri.p[2].x});
    const double by0 = std::min({tri.p[0].y, tri.p[1].y, tri.p[2].y});
    const double by1 = std::max({tri.p[0].y, tri.p[1].y, tri.p[2].y});
    if (bx1 < lo || bx0 > hi || by1 < lo || by0 > hi) continue;  // fully outside
    if (inside(tri.p[0]) && inside(tri.p[1]) && inside(tri.p[2])) continue;  // fully inside
    cut.push_back(i);
  }
  return cut;
}

}  // namespace

double square_signed_distance(Vec2 p, double lo, double hi) {
  const double dx = std::max({lo - p.x, 0.0, p.x - hi});
  const double dy = std::max({lo - p.y, 0.0, p.y - hi});
  if (dx > 0.0 || dy > 0.0) return -std::hypot(dx, dy);  // outside
  return std::min({p.x - lo, hi - p.x, p.y - lo, hi - p.y});
}

DgFunction project_indicator_square(std::shared_ptr<const Mesh> mesh, double lo, double hi,
                                    double value) {
  const auto inside = [lo, hi](Vec2 p) {
    return p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi;
  };
  const auto f = [&, value](Vec2 p) { return inside(p) ? value : 0.0; };

  std::vector<int> levels(mesh->num_triangles(), 0);
  for (int i : square_cut_elements(*mesh, lo, hi))
    levels[i] = 4;  // cut by the square boundary: subdivided quadrature
  DgFunction u = project(mesh, f, [&levels](int i) { return levels[i]; });
  // Clamp the cut-element Gibbs spikes to the indicator's range; the states
  // outside [0,value] are projection artifacts, not data.
  const double clamp_lo = std::min(0.0, value);
  const double clamp_hi = std::max(0.0, value);
  for (double& c : u.coeff) c = std::clamp(c, clamp_lo, clamp_hi);
  return u;
}

DgFunction project_phase_square(std::shared_ptr<const Mesh> mesh, double lo, double hi,
                                double value, double width) {
  // Equilibrium front of the bistable cubic at interface scale `width`:
  // u = value/2 (1 + tanh(d / (sqrt(2) width))) with d the signed distance.
  const double scale = std::sqrt(2.0) * width;
  const auto f = [=](Vec2 p) {
    return 0.5 * value * (1.0 + std::tanh(square_signed_distance(p, lo, hi) / scale));
  };
  DgFunction u = project(mesh, f);
  const double clamp_lo = std::min(0.0, value);
  const double clamp_hi = std::max(0.0, value);
  for (double& c : u.coeff) c = std::clamp(c, clamp_lo, clamp_hi);
  return u;
}

std::shared_ptr<const Mesh> prepare_initial_mesh(std::shared_ptr<const Mesh> mesh, double lo,
                                                 double hi, double interface_width) {
  // Resolve the initial interface down to the width the phase dynamics will
  // form: bisect elements in the transition band while they are coarser than
  // that width. The initial data is projected afterwards on the prepared
  // mesh, so refinement here genuinely improves it.
  for (int pass = 0; pass < 40; ++pass) {
    std::vector<int> marks;
    for (int i = 0; i < mesh->num_triangles(); ++i) {
      const Triangle2 tri = mesh->triangle(i);
      const double diam = tri.diameter();
      if (diam <= interface_width) continue;
      double dist = std::abs(square_signed_distance(tri.point({1.0 / 3, 1.0 / 3, 1.0 / 3}),
                                                    lo, hi));
      for (const Vec2& p : tri.p)
        dist = std::min(dist, std::abs(square_signed_distance(p, lo, hi)));
      if (dist <= 3.0 * interface_width + 0.5 * diam) marks.push_back(i);
    }
    if (marks.empty()) break;
    mesh = std::make_shared<const Mesh>(refine(*mesh, marks));
  }
  return mesh;
}

namespace {

std::pair<double, double> coeff_minmax(const DgFunction& u) {
  const auto [mn, mx] = std::minmax_element(u.coeff.begin(), u.coeff.end());
  return {*mn, *mx};
}

// Stiffness/mass pair cached per mesh (reassembled only when the mesh
// changes).
struct OperatorCache {
  std::shared_ptr<const Mesh> mesh;
  BlockCsrMatrix M{0, {}};
  BlockCsrMatrix A{0, {}};

  void update(const std::shared_ptr<const Mesh>& m, const ModelParams& params,
              const VelocityField& field) {
    if (mesh && mesh->same_mesh(*m)) return;
    mesh = m;
    M = mass_matrix(*m);
    A = assemble_stiffness(*m, params, field);
  }
};

// Multi-level coarsening pass: merges every mergeable sibling pair whose
// aggregated spatial contribution stays below the threshold. Merged parents
// inherit the root-sum-square of their children's values, so negligible
// regions un-build level by level in one event.
std::shared_ptr<const Mesh> coarsen_below(const std::shared_ptr<const Mesh>& start,
                                          std::unordered_map<int, double> value,
                                          double threshold, bool squared) {
  const MeshHierarchy& h = *start->hierarchy();
  auto cur = start;
  for (int pass = 0; pass < 24; ++pass) {
    std::vector<int> marks;
    for (int i = 0; i < cur->num_triangles(); ++i) {
      const double v = value.at(cur->node_id(i));
      if ((squared ? v * v : v) < threshold) marks.push_back(i);
    }
    if (marks.empty()) break;
    auto next = std::make_shared<const Mesh>(coarsen(*cur, marks));
    if (next->same_mesh(*cur)) break;
    for (int i = 0; i < next->num_triangles(); ++i) {
      const int node = next->node_id(i);
      if (value.count(node)) continue;  // unchanged leaf
      const auto& children = h.node(node).child;
      const double a = value.at(children[0]);
      const double b = value.at(children[1]);
      value.emplace(node, std::sqrt(a * a + b * b));
    }
    cur = next;
  }
  return cur;
}

// Applies the marked refinement, then coarsens where the spatial
// contribution is negligible. The evolution-difference indicator cannot see
// representation needs (a resolved static front evolves identically at both
// resolutions), so a coarsening candidate is adopted only if re-projecting
// the state onto it loses less than a small fraction of TOL_S; otherwise the
// threshold backs off.
std::shared_ptr<const Mesh> adapt_mesh(const std::shared_ptr<const Mesh>& working,
                                       const DgFunction& u_prev,
                                       std::span<const double> eps_S_per_element,
                                       const AmotConfig& cfg,
                                       std::span<const int> refine_set) {
  const MeshHierarchy& h = *working->hierarchy();
  std::unordered_map<int, double> value;  // hierarchy node -> (eps_S)_E
  value.reserve(2 * eps_S_per_element.size());
  for (int i = 0; i < working->num_triangles(); ++i)
    value[working->node_id(i)] = eps_S_per_element[i];

  auto refined = std::make_shared<const Mesh>(refine(*working, refine_set));
  // Fresh children inherit their ancestor's value (refined elements sit far
  // above the coarsening threshold, so they are never merge candidates).
  for (int i = 0; i < refined->num_triangles(); ++i) {
    int node = refined->node_id(i);
    while (!value.count(node) && h.node(node).parent >= 0) node = h.node(node).parent;
    value.emplace(refined->node_id(i), value.at(node));
  }

  // Coarsening must not visibly distort the state: wake regions reproject
  // with losses far below the state norm, while merging a resolved front
  // would cost a sizable fraction of it.
  const double loss_budget = 0.05 * std::max(l2_norm(u_prev), 1e-6);
  for (double scale : {1.0, 0.125, 1.0 / 64.0}) {
    auto candidate = coarsen_below(refined, value, scale * cfg.coarsen_abs,
                                   cfg.squared_spatial_thresholds);
    if (candidate->same_mesh(*refined)) return refined;
    const DgFunction down = transfer(u_prev, candidate);
    const DgFunction back = transfer(down, working);
    if (l2_distance(u_prev, back) <= loss_budget) return candidate;
  }
  return refined;
}

}  // namespace

AmotStepOutput amot_step(AmotState& state, const AmotProblem& pb) {
  const auto t0 = std::chrono::steady_clock::now();
  const AmotConfig& cfg = pb.cfg;
  const double TOL_T = cfg.tol_T();
  const double TOL_S = cfg.tol_S();
  constexpr int kIterationCap = 10;

  std::shared_ptr<const Mesh> working = state.mesh;
  DgFunction u_prev = state.u;
  OperatorCache ops;

  double tau_star = state.tau_next;
  int rejects_T = 0, rejects_S = 0;
  EstimatorReport report;

  // Previous spatial estimate at the current tau, for stall detection. Once
  // a stall has cut tau, the step stays in time-descent mode: per-element
  // spatial contributions scale with tau, so marking computed at a slashed
  // tau would coarsen far too aggressively.
  double last_spatial_eps = -1.0;
  bool tau_descent = false;
  int consecutive_t_rejects = 0;
  const bool trace = std::getenv("AMOT_TRACE") != nullptr;

  for (int iter = 0; iter < kIterationCap; ++iter) {
    const double tau_k = tau_star;
    ops.update(working, pb.params, pb.experiment.velocity);

    const StepResult sr = step(pb.tableau, u_prev, tau_k, ops.M, ops.A, pb.reaction, pb.solver);
    if (!sr.ok) {
      // Linear solver failure: halve the step and retry.
      tau_star = std::max(0.5 * tau_k, cfg.tau_min);
      last_spatial_eps = -1.0;
      ++rejects_T;
      continue;
    }

    const double eps_T = temporal_estimator(sr.u3, sr.u2);
    if (eps_T > TOL_T) {
      tau_star = propose_tau(eps_T, tau_k, cfg);
      // The cube-root law assumes eps_T ~ tau^3; rough transients scale more
      // like tau and would burn the cap, so repeated rejections back off at
      // least geometrically.
      if (consecutive_t_rejects >= 1) tau_star = std::min(tau_star, 0.5 * tau_k);
      tau_star = std::max(tau_star, cfg.tau_min);
      last_spatial_eps = -1.0;
      ++rejects_T;
      ++consecutive_t_rejects;
      continue;
    }
    consecutive_t_rejects = 0;

    const IndicatorResult ind = residual_indicator(sr.u3, u_prev, tau_k, pb.params,
                                                   pb.experiment.velocity);
    const std::vector<int> bulk = bulk_mark(ind.eta_E, cfg.theta);
    const SpatialEstimate sp = spatial_estimator(sr.u3, u_prev, tau_k, bulk, pb.tableau,
                                                 pb.params, pb.experiment.velocity, pb.reaction,
                                                 pb.solver);
    if (!sp.ok) {
      tau_star = std::max(0.5 * tau_k, cfg.tau_min);
      last_spatial_eps = -1.0;
      ++rejects_T;
      continue;
    }

    if (trace)
      std::fprintf(stderr, "  [it %d] tris %d tau %.3e eps_T %.3e eps_S %.3e\n", iter,
                   working->num_triangles(), tau_k, eps_T, sp.total);

    if (sp.total > TOL_S) {
      // Per-element spatial contributions scale with tau. Below the step-size
      // rail the absolute coarsening threshold would over-fire, so it is
      // deflated proportionally; refinement thresholds are left alone (being
      // too selective there only delays refinement by one iteration).
      AmotConfig mark_cfg = cfg;
      mark_cfg.coarsen_abs = cfg.coarsen_abs * std::min(1.0, tau_k / cfg.tau_max);
      auto [refine_set, coarsen_set] = mark_space(sp.per_element, mark_cfg);
      report.marked_refine = refine_set;
      report.marked_coarsen = coarsen_set;

      auto adapted = adapt_mesh(working, u_prev, sp.per_element, mark_cfg, refine_set);

      // Refinement cannot reduce eps_S when the one-step difference is
      // dominated by rough data (unresolved transients): there eps_S scales
      // linearly with tau and grows with refinement depth. On a stall (no
      // mesh change, no estimator progress, or nearing the cap) keep the
      // current mesh and shrink the step by the linear law instead.
      const bool no_change = adapted->same_mesh(*working);
      const bool no_progress = last_spatial_eps >= 0.0 && sp.total > 0.9 * last_spatial_eps;
      if (tau_descent || no_change || no_progress || iter >= kIterationCap - 4) {
        const double factor = std::min(0.95, cfg.rho * TOL_S / sp.total);
        tau_star = std::max(factor * tau_k, cfg.tau_min);
        last_spatial_eps = -1.0;
        tau_descent = true;
      } else {
        last_spatial_eps = sp.total;
        working = adapted;
        u_prev = transfer(state.u, working);
      }
      ++rejects_S;
      continue;
    }

    // Both estimators within tolerance: accept on the current working mesh.
    state.mesh = working;
    state.u = sr.u3;
    state.t += tau_k;
    state.k += 1;
    // Next proposal: temporal controller, additionally capped by the spatial
    // ceiling (eps_S is first order in tau and must stay below TOL_S too).
    state.tau_next = propose_tau(eps_T, tau_k, cfg);
    if (sp.total > 0.0) {
      const double s_limit =
          tau_k * std::clamp(cfg.rho * TOL_S / sp.total, 1.0, cfg.growth_max);
      state.tau_next = std::min(state.tau_next, std::max(s_limit, cfg.tau_min));
    }

    report.eps_T = eps_T;
    report.eps_S_total = sp.total;
    report.eps_S = sp.per_element;
    report.eta_total = ind.total;
    report.eta_E = ind.eta_E;
    report.eta_R = ind.cell;
    report.eta_J = ind.jump;
    report.eta_B = ind.boundary;
    report.bulk_set = bulk;

    StepRecord rec;
    rec.k = state.k;
    rec.t = state.t;
    rec.tau = tau_k;
    rec.dofs = working->num_dofs();
    rec.eps_T = eps_T;
    rec.eps_S = sp.total;
    rec.eta = ind.total;
    rec.rejects_T = rejects_T;
    rec.rejects_S = rejects_S;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return {rec, std::move(report)};
  }

  throw std::runtime_error(
      "amot_step: iteration cap exceeded (temporal rejects: " + std::to_string(rejects_T) +
      ", spatial rejects: " + std::to_string(rejects_S) + ")");
}

RunResult run(const Experiment& experiment, const AmotConfig& cfg, const RunOptions& options) {
  AmotConfig run_cfg = cfg;
  run_cfg.tau_max = std::min(cfg.tau_max, experiment.t_final / 10.0);
  run_cfg.tau0 = std::clamp(cfg.tau0, run_cfg.tau_min, run_cfg.tau_max);
  const AmotProblem pb = AmotProblem::make(experiment, run_cfg, options.sigma, options.solver);

  RunWriter writer(options.out_dir);

  const double ic_width =
      experiment.ic_width < 0.0 ? experiment.epsilon : experiment.ic_width;
  auto mesh = std::make_shared<const Mesh>(build_uniform(options.mesh_n));
  if (options.mode == RunMode::adaptive)
    mesh = prepare_initial_mesh(mesh, experiment.ic_lo, experiment.ic_hi,
                                0.5 * std::max(ic_width, experiment.epsilon));
  AmotState state;
  state.mesh = mesh;
  state.u = ic_width > 0.0
                ? project_phase_square(mesh, experiment.ic_lo, experiment.ic_hi,
                                       experiment.ic_value, ic_width)
                : project_indicator_square(mesh, experiment.ic_lo, experiment.ic_hi,
                                           experiment.ic_value);
  state.t = 0.0;
  state.tau_next = run_cfg.tau0;
  state.k = 0;

  RunResult result;
  const auto [imn, imx] = coeff_minmax(state.u);
  result.u_min.push_back(imn);
  result.u_max.push_back(imx);
  if (options.snapshot_every > 0) writer.write_snapshot(0, state.u);

  const double T = experiment.t_final;
  const bool uniform = options.mode == RunMode::uniform;

  OperatorCache uniform_ops;
  while (T - state.t > 1e-14 * T) {
    if (state.k >= options.max_steps)
      throw std::runtime_error("run: step budget exhausted before reaching t_final");

    StepRecord rec;
    if (uniform) {
      const auto t0 = std::chrono::steady_clock::now();
      const double tau = std::min(options.uniform_tau, T - state.t);
      uniform_ops.update(state.mesh, pb.params, pb.experiment.velocity);
      const StepResult sr =
          step(pb.tableau, state.u, tau, uniform_ops.M, uniform_ops.A, pb.reaction, pb.solver);
      if (!sr.ok) throw std::runtime_error("run: linear solver failed in uniform mode");
      state.u = sr.u3;
      state.t += tau;
      state.k += 1;
      rec.k = state.k;
      rec.t = state.t;
      rec.tau = tau;
      rec.dofs = state.mesh->num_dofs();
      rec.eps_T = temporal_estimator(sr.u3, sr.u2);
      rec.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
    } else {
      state.tau_next = std::min(state.tau_next, T - state.t);
      rec = amot_step(state, pb).record;
    }

    result.steps.push_back(rec);
    const auto [mn, mx] = coeff_minmax(state.u);
    result.u_min.push_back(mn);
    result.u_max.push_back(mx);
    writer.append_record(rec);
    if (options.snapshot_every > 0 &&
        (state.k % options.snapshot_every == 0 || T - state.t <= 1e-14 * T))
      writer.write_snapshot(state.k, state.u);
  }

  // Overshoot beyond [0,1] over the computed states (the projected initial
  // condition is an input, not a product of the scheme).
  for (size_t i = 1; i < result.u_max.size(); ++i) {
    result.overshoot_above = std::max(result.overshoot_above, result.u_max[i] - 1.0);
    result.overshoot_below = std::max(result.overshoot_below, -result.u_min[i]);
  }
  result.final_u = state.u;

  writer.write_summary(result, experiment, options.mode);
  writer.close();
  return result;
}

}  // namespace amot
