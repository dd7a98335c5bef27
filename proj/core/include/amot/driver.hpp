#pragma once

#include <memory>
#include <string>
#include <vector>

#include "amot/adapt.hpp"
#include "amot/dgspace.hpp"
#include "amot/ros3p.hpp"
#include "amot/sipg.hpp"

namespace amot {

/// Experiment preset: velocity field, indicator-square initial condition
/// (value inside [lo,hi]^2, zero outside), final time and surface tension.
/// ic_width < 0 regularizes the indicator at the model's own interface
/// width (the tanh equilibrium profile at scale epsilon); 0 keeps it sharp.
struct Experiment {
  std::string name = "custom";
  VelocityField velocity = VelocityField::zero();
  double ic_lo = -0.1;
  double ic_hi = 0.1;
  double ic_value = 1.0;
  double ic_width = -1.0;
  double t_final = 0.06;
  double epsilon = 0.01;

  static Experiment sheering();   // V = (0,-100x), IC 1 on [-0.1,0.1]^2
  static Experiment expanding();  // V = (10x,10y),  IC 1 on [-0.3,0.3]^2
};

/// Signed distance to the square [lo,hi]^2 (positive inside).
double square_signed_distance(Vec2 p, double lo, double hi);

/// Telemetry of one accepted step.
struct StepRecord {
  int k = 0;
  double t = 0.0;
  double tau = 0.0;
  int dofs = 0;
  double eps_T = 0.0;
  double eps_S = 0.0;
  double eta = 0.0;
  int rejects_T = 0;
  int rejects_S = 0;
  double wall_ms = 0.0;
};

enum class RunMode { adaptive, uniform };

struct RunOptions {
  RunMode mode = RunMode::adaptive;
  int mesh_n = 64;
  double uniform_tau = 1e-3;
  int snapshot_every = 1;      // 0 disables snapshots
  std::string out_dir;         // empty: no file output
  double sigma = 10.0;
  SolverOptions solver;
  int max_steps = 200000;
};

/// Mutable state of the adaptive time loop.
struct AmotState {
  std::shared_ptr<const Mesh> mesh;
  DgFunction u;
  double t = 0.0;
  double tau_next = 0.0;
  int k = 0;
};

/// Immutable per-run problem data.
struct AmotProblem {
  Experiment experiment;
  ModelParams params;
  AmotConfig cfg;
  Ros3pTableau tableau;
  NonlinearReaction reaction;
  SolverOptions solver;

  static AmotProblem make(const Experiment& exp, AmotConfig cfg, double sigma = 10.0,
                          SolverOptions solver = {});
};

struct AmotStepOutput {
  StepRecord record;
  EstimatorReport report;
};

/// One step of the adaptive loop: advances state.u / state.mesh / state.t by
/// the accepted step and leaves the next proposal in state.tau_next. Throws
/// on iteration-cap overflow, identifying the failing estimator.
AmotStepOutput amot_step(AmotState& state, const AmotProblem& problem);

struct RunResult {
  std::vector<StepRecord> steps;
  std::vector<double> u_min, u_max;  // per accepted step (index 0 = initial state)
  DgFunction final_u;
  double overshoot_above = 0.0;  // max over steps of max(u) - 1
  double overshoot_below = 0.0;  // max over steps of -min(u)
};

/// Runs an experiment to t_final. Adaptive mode runs the full estimator loop
/// from the projected initial condition; uniform mode keeps the n-by-n mesh
/// and a constant step (order-3 solution only). Writes steps.csv and VTK
/// snapshots when out_dir is set.
RunResult run(const Experiment& experiment, const AmotConfig& cfg, const RunOptions& options);

/// Projected indicator-square initial condition; elements cut by the square
/// boundary use subdivided quadrature. Nodal values are clamped to the
/// indicator's range (cut-element Gibbs spikes are artifacts, not data).
DgFunction project_indicator_square(std::shared_ptr<const Mesh> mesh, double lo, double hi,
                                    double value);

/// Indicator regularized by the bistable equilibrium profile at the given
/// interface width, projected element-wise.
DgFunction project_phase_square(std::shared_ptr<const Mesh> mesh, double lo, double hi,
                                double value, double width);

/// Refines elements cut by the indicator boundary until they resolve the
/// given interface width (used by adaptive runs before the first step).
std::shared_ptr<const Mesh> prepare_initial_mesh(std::shared_ptr<const Mesh> mesh, double lo,
                                                 double hi, double interface_width);

}  // namespace amot
