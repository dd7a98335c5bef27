// amot-ac: time-space adaptive solver for the advective Allen-Cahn equation.
//
//   amot-ac run --experiment sheering [--mode adaptive|uniform] [--out DIR] ...
//   amot-ac validate
//
// Exit code 0 on success; nonzero with a one-line "error: ..." message.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "amot/driver.hpp"
#include "amot/output.hpp"
#include "amot/quadrature.hpp"

namespace {

int run_validate() {
  using namespace amot;
  bool ok = true;
  const auto check = [&ok](const std::string& name, bool pass, const std::string& detail = "") {
    std::printf("check %-22s %s%s\n", name.c_str(), pass ? "ok" : "FAIL",
                detail.empty() ? "" : ("  (" + detail + ")").c_str());
    if (!pass) ok = false;
  };

  const Ros3pTableau tableau = default_tableau();
  const TableauReport rep = validate_tableau(tableau);
  check("tableau-order", rep.pass, "max residual " + format_double(rep.max_residual));
  check("tableau-damping", std::abs(stability_function(tableau, -1e8)) <= 1e-6,
        "|R(-1e8)| = " + format_double(std::abs(stability_function(tableau, -1e8))));
  check("tableau-consistency", std::abs(stability_function(tableau, 0.0) - 1.0) <= 1e-14);

  // Quadrature exactness on the unit reference triangle: int x^p y^q =
  // p! q! / (p+q+2)!.
  const auto monomial_exact = [](int p, int q) {
    double num = 1.0;
    for (int i = 2; i <= p; ++i) num *= i;
    for (int i = 2; i <= q; ++i) num *= i;
    double den = 1.0;
    for (int i = 2; i <= p + q + 2; ++i) den *= i;
    return num / den;
  };
  const Triangle2 ref{{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}}};
  bool quad_ok = true;
  for (int deg = 0; deg <= 4; ++deg)
    for (int p = 0; p <= deg; ++p) {
      const int q = deg - p;
      double val = 0.0;
      for (const auto& qp : tri_rule_deg4()) {
        const Vec2 x = ref.point({qp.l0, qp.l1, qp.l2});
        val += qp.w * std::pow(x.x, p) * std::pow(x.y, q);
      }
      if (std::abs(val - monomial_exact(p, q)) > 1e-14) quad_ok = false;
    }
  check("quadrature-deg4", quad_ok);

  bool quad6_ok = true;
  for (int deg = 0; deg <= 6; ++deg)
    for (int p = 0; p <= deg; ++p) {
      const int q = deg - p;
      double val = 0.0;
      for (const auto& qp : tri_rule_deg6()) {
        const Vec2 x = ref.point({qp.l0, qp.l1, qp.l2});
        val += qp.w * std::pow(x.x, p) * std::pow(x.y, q);
      }
      if (std::abs(val - monomial_exact(p, q)) > 1e-13) quad6_ok = false;
    }
  check("quadrature-deg6", quad6_ok);

  bool edge_ok = true;
  for (int p = 0; p <= 5; ++p) {
    double val = 0.0;
    for (const auto& qp : edge_rule_deg5()) val += qp.w * std::pow(qp.t, p);
    if (std::abs(val - 1.0 / (p + 1)) > 1e-14) edge_ok = false;
  }
  check("quadrature-edge", edge_ok);

  // Velocity presets: analytic divergence matches finite differences.
  bool div_ok = true;
  for (const auto& field : {VelocityField::sheering(), VelocityField::expanding()}) {
    for (double x : {-0.7, 0.1, 0.9})
      for (double y : {-0.3, 0.5}) {
        const double h = 1e-5;
        const double fd = (field.value({x + h, y}).x - field.value({x - h, y}).x +
                           field.value({x, y + h}).y - field.value({x, y - h}).y) /
                          (2 * h);
        if (std::abs(fd - field.divergence({x, y})) > 1e-6) div_ok = false;
      }
  }
  check("velocity-divergence", div_ok);

  // Coercivity of the symmetric diffusion operator at default sigma.
  const Mesh sanity = build_uniform(8);
  check("sipg-coercivity", check_coercivity(sanity, ModelParams{0.01, 10.0}));

  // Stage solver round trip on a small stage matrix.
  {
    auto mesh = std::make_shared<const Mesh>(build_uniform(2));
    const BlockCsrMatrix M = mass_matrix(*mesh);
    const BlockCsrMatrix A =
        assemble_stiffness(*mesh, ModelParams{0.01, 10.0}, VelocityField::sheering());
    DgFunction u(mesh, 0.3);
    const StepResult sr = step(tableau, u, 1e-3, M, A, NonlinearReaction::allen_cahn(0.01));
    check("stage-solver", sr.ok && sr.stats.prepares == 1);
  }

  if (!ok) std::fprintf(stderr, "error: validate: at least one self-test failed\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace amot;

  CLI::App app{"time-space adaptive advective Allen-Cahn solver"};
  app.require_subcommand(1);

  auto* validate_cmd = app.add_subcommand("validate", "tableau + quadrature + self-tests");

  auto* run_cmd = app.add_subcommand("run", "run an experiment");
  std::string experiment_name = "sheering";
  std::string mode_name = "adaptive";
  std::string out_dir = "out";
  AmotConfig cfg;
  double epsilon = -1.0;  // negative: preset default
  double tfinal = -1.0;
  double sigma = 10.0;
  double vx = 0.0, vy = 0.0;
  double ic_lo = -0.1, ic_hi = 0.1, ic_value = 1.0, ic_width = -1.0;
  int mesh_n = 64;
  int snapshot_every = 1;

  run_cmd->set_config("--config");
  run_cmd->add_option("--experiment", experiment_name, "sheering|expanding|custom")
      ->check(CLI::IsMember({"sheering", "expanding", "custom"}));
  run_cmd->add_option("--mode", mode_name, "adaptive|uniform")
      ->check(CLI::IsMember({"adaptive", "uniform"}));
  run_cmd->add_option("--tol", cfg.tol, "total tolerance TOL");
  run_cmd->add_option("--alpha", cfg.alpha, "temporal share of TOL");
  run_cmd->add_option("--epsilon", epsilon, "surface tension (preset default if unset)");
  run_cmd->add_option("--sigma", sigma, "SIPG penalty parameter");
  run_cmd->add_option("--theta", cfg.theta, "bulk marking fraction");
  run_cmd->add_option("--rho", cfg.rho, "step controller safety factor");
  run_cmd->add_option("--tau0", cfg.tau0, "initial time step");
  run_cmd->add_option("--tfinal", tfinal, "final time (preset default if unset)");
  run_cmd->add_option("--mesh-n", mesh_n, "initial uniform mesh subdivisions per side");
  run_cmd->add_option("--snapshot-every", snapshot_every,
                      "write a VTK snapshot every N accepted steps (0: none)");
  run_cmd->add_option("--out", out_dir, "output directory (steps.csv, VTK snapshots)");
  run_cmd->add_option("--vx", vx, "custom experiment: constant velocity x");
  run_cmd->add_option("--vy", vy, "custom experiment: constant velocity y");
  run_cmd->add_option("--ic-lo", ic_lo, "custom experiment: indicator square lower bound");
  run_cmd->add_option("--ic-hi", ic_hi, "custom experiment: indicator square upper bound");
  run_cmd->add_option("--ic-value", ic_value, "custom experiment: indicator value");
  run_cmd->add_option("--ic-width", ic_width,
                      "interface width of the initial profile (<0: epsilon, 0: sharp)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) return run_validate();

    Experiment exp;
    if (experiment_name == "sheering") {
      exp = Experiment::sheering();
    } else if (experiment_name == "expanding") {
      exp = Experiment::expanding();
    } else {
      exp.name = "custom";
      exp.velocity = VelocityField::constant({vx, vy});
      exp.ic_lo = ic_lo;
      exp.ic_hi = ic_hi;
      exp.ic_value = ic_value;
    }
    if (epsilon > 0.0) exp.epsilon = epsilon;
    if (tfinal > 0.0) exp.t_final = tfinal;
    exp.ic_width = ic_width;

    RunOptions opt;
    opt.mode = (mode_name == "uniform") ? RunMode::uniform : RunMode::adaptive;
    opt.mesh_n = mesh_n;
    opt.snapshot_every = snapshot_every;
    opt.out_dir = out_dir;
    opt.sigma = sigma;

    const RunResult result = run(exp, cfg, opt);
    std::printf("run complete: %zu steps, final dofs %d, overshoot above %.6g below %.6g\n",
                result.steps.size(),
                result.steps.empty() ? 0 : result.steps.back().dofs,
                result.overshoot_above, result.overshoot_below);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
