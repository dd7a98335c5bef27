#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amot/driver.hpp"
#include "amot/output.hpp"
#include "test_utils.hpp"

using namespace amot;
using namespace amot::testing;

namespace {

std::shared_ptr<const Mesh> uniform(int n) {
  return std::make_shared<const Mesh>(build_uniform(n));
}

Experiment equilibrium_experiment() {
  Experiment e;
  e.name = "custom";
  e.velocity = VelocityField::zero();
  e.epsilon = 0.02;
  e.t_final = 0.01;
  return e;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// steps.csv with the wall_ms column blanked out.
std::string csv_without_wall_ms(const std::filesystem::path& p) {
  std::istringstream in(slurp(p));
  std::string line, out;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out += line.substr(0, pos);
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("experiment presets") {
  const Experiment sh = Experiment::sheering();
  CHECK(sh.ic_lo == -0.1);
  CHECK(sh.ic_hi == 0.1);
  CHECK(sh.t_final == 0.06);
  CHECK(sh.epsilon == 0.01);
  const Vec2 v = sh.velocity.value({0.5, -0.3});
  CHECK(v.x == 0.0);
  CHECK(v.y == -50.0);

  const Experiment ex = Experiment::expanding();
  CHECK(ex.ic_lo == -0.3);
  CHECK(ex.ic_hi == 0.3);
  const Vec2 w = ex.velocity.value({0.5, -0.3});
  CHECK(w.x == 5.0);
  CHECK(w.y == -3.0);
}

TEST_CASE("indicator-square projection") {
  const auto mesh = uniform(32);
  const DgFunction u = project_indicator_square(mesh, -0.3, 0.3, 1.0);

  // integral matches the square's area up to the clamped cut-element band
  const BlockCsrMatrix m = mass_matrix(*mesh);
  const auto mu = m.matvec(u.coeff);
  double integral = 0.0;
  for (double v : mu) integral += v;
  CHECK(integral == doctest::Approx(0.36).epsilon(0.06));

  // the clamp keeps nodal values inside the indicator's range
  for (double c : u.coeff) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }

  // elements away from the square boundary are exactly 0 or 1
  for (int i = 0; i < mesh->num_triangles(); ++i) {
    const Vec2 c = mesh->triangle(i).point({1.0 / 3, 1.0 / 3, 1.0 / 3});
    if (std::max(std::abs(c.x), std::abs(c.y)) < 0.2)
      for (int j = 0; j < 3; ++j) CHECK(u(i, j) == doctest::Approx(1.0).epsilon(1e-12));
    if (std::max(std::abs(c.x), std::abs(c.y)) > 0.5)
      for (int j = 0; j < 3; ++j) CHECK(u(i, j) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("amot_step at equilibrium accepts immediately and grows tau") {
  const Experiment exp = equilibrium_experiment();
  AmotConfig cfg;
  const AmotProblem pb = AmotProblem::make(exp, cfg);

  AmotState state;
  state.mesh = uniform(2);
  state.u = DgFunction(state.mesh, 0.5);
  state.tau_next = cfg.tau0;

  const auto mesh_before = state.mesh;
  const AmotStepOutput out = amot_step(state, pb);

  CHECK(out.record.eps_T == 0.0);
  CHECK(out.record.eps_S == 0.0);
  CHECK(out.record.eta <= 1e-12);
  CHECK(out.record.rejects_T == 0);
  CHECK(out.record.rejects_S == 0);
  CHECK(state.mesh->same_mesh(*mesh_before));
  CHECK(state.tau_next == doctest::Approx(cfg.growth_max * cfg.tau0).epsilon(1e-14));
  CHECK(state.k == 1);
  CHECK(out.record.dofs == state.mesh->num_dofs());
}

TEST_CASE("equilibrium state: 10 steps, mesh frozen, estimators zero") {
  // u = 1/2 is a root of f with zero gradient; on a power-of-two uniform grid
  // every stage right-hand side vanishes identically, so the state is a
  // bitwise fixed point even though the PDE equilibrium is unstable.
  const Experiment exp = equilibrium_experiment();
  AmotConfig cfg;
  const AmotProblem pb = AmotProblem::make(exp, cfg);

  AmotState state;
  state.mesh = uniform(2);
  state.u = DgFunction(state.mesh, 0.5);
  state.tau_next = cfg.tau0;
  const auto mesh0 = state.mesh;

  for (int k = 0; k < 10; ++k) {
    const AmotStepOutput out = amot_step(state, pb);
    CHECK(out.record.eps_T <= 1e-12);
    CHECK(out.record.eps_S <= 1e-12);
    CHECK(out.record.eta <= 1e-12);
    CHECK(state.mesh->same_mesh(*mesh0));
    CHECK(out.record.dofs == 24);
  }
  for (double c : state.u.coeff) CHECK(c == 0.5);
}

TEST_CASE("loose tolerance accepts every step on the first iteration") {
  Experiment exp = Experiment::sheering();
  exp.t_final = 0.002;
  AmotConfig cfg;
  cfg.tol = 10.0;
  RunOptions opt;
  opt.mesh_n = 4;
  opt.snapshot_every = 0;

  const RunResult res = run(exp, cfg, opt);
  REQUIRE(!res.steps.empty());
  for (const StepRecord& r : res.steps) {
    CHECK(r.rejects_T == 0);
    CHECK(r.rejects_S == 0);
    CHECK(r.dofs == res.steps.front().dofs);  // never adapted after the start
  }
  double sum = 0.0;
  for (const StepRecord& r : res.steps) sum += r.tau;
  CHECK(sum == doctest::Approx(exp.t_final).epsilon(1e-12));
}

TEST_CASE("uniform mode: fixed step count and dofs") {
  Experiment exp = Experiment::sheering();
  exp.t_final = 0.005;
  AmotConfig cfg;
  RunOptions opt;
  opt.mode = RunMode::uniform;
  opt.mesh_n = 8;
  opt.uniform_tau = 1e-3;
  opt.snapshot_every = 0;

  const RunResult res = run(exp, cfg, opt);
  CHECK(res.steps.size() == 5);  // ceil(0.005/0.001)
  for (const StepRecord& r : res.steps) {
    CHECK(r.tau == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(r.dofs == 8 * 8 * 2 * 3);
  }
  CHECK(res.steps.back().t == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("accepted records satisfy both tolerances on a small adaptive run") {
  Experiment exp = Experiment::sheering();
  exp.t_final = 0.003;
  AmotConfig cfg;  // TOL 1e-3, alpha 0.5
  RunOptions opt;
  opt.mesh_n = 8;
  opt.snapshot_every = 0;

  const RunResult res = run(exp, cfg, opt);
  REQUIRE(!res.steps.empty());
  for (const StepRecord& r : res.steps) {
    CHECK(r.eps_T <= cfg.tol_T());
    CHECK(r.eps_S <= cfg.tol_S());
  }
  double sum = 0.0;
  for (const StepRecord& r : res.steps) sum += r.tau;
  CHECK(sum == doctest::Approx(exp.t_final).epsilon(1e-12));
}

TEST_CASE("csv writer: header-only file for an empty run") {
  const auto dir = std::filesystem::temp_directory_path() / "amot_test_csv";
  std::filesystem::create_directories(dir);
  write_steps_csv({}, (dir / "steps.csv").string());
  CHECK(slurp(dir / "steps.csv") ==
        "k,t,tau,dofs,eps_T,eps_S,eta,rejects_T,rejects_S,wall_ms\n");
}

TEST_CASE("vtk writer: n=1 snapshot layout and value round trip") {
  const auto mesh = uniform(1);
  DgFunction u(mesh);
  u.coeff = random_vector(u.size(), 55, -0.25, 1.25);

  const auto dir = std::filesystem::temp_directory_path() / "amot_test_vtk";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "snap.vtk").string();
  write_vtk(u, path);

  const std::string text = slurp(path);
  CHECK(text.find("POINTS 6 double") != std::string::npos);
  CHECK(text.find("CELLS 2 8") != std::string::npos);
  CHECK(text.find("CELL_TYPES 2") != std::string::npos);

  const VtkSnapshot snap = read_vtk(path);
  REQUIRE(snap.points.size() == 6);
  REQUIRE(snap.cells.size() == 2);
  REQUIRE(snap.values.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(snap.values[i] == doctest::Approx(u.coeff[i]).epsilon(1e-9));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec2 expect = mesh->triangle(i).p[j];
      const Vec2 got = snap.points[snap.cells[i][j]];
      CHECK(got.x == doctest::Approx(expect.x).epsilon(1e-9));
      CHECK(got.y == doctest::Approx(expect.y).epsilon(1e-9));
    }
}

TEST_CASE("determinism: identical runs write identical steps.csv modulo wall_ms") {
  Experiment exp = Experiment::sheering();
  exp.t_final = 0.002;
  AmotConfig cfg;
  RunOptions opt;
  opt.mesh_n = 4;
  opt.snapshot_every = 0;

  const auto base = std::filesystem::temp_directory_path();
  opt.out_dir = (base / "amot_det_a").string();
  run(exp, cfg, opt);
  opt.out_dir = (base / "amot_det_b").string();
  run(exp, cfg, opt);

  const std::string a = csv_without_wall_ms(base / "amot_det_a" / "steps.csv");
  const std::string b = csv_without_wall_ms(base / "amot_det_b" / "steps.csv");
  CHECK(a == b);
  CHECK(a.find("k,t,tau") == 0);
}

TEST_CASE("unwritable output directory fails before the run") {
  Experiment exp = equilibrium_experiment();
  AmotConfig cfg;
  RunOptions opt;
  opt.mesh_n = 2;
  opt.out_dir = "/proc/definitely/not/writable";
  CHECK_THROWS(run(exp, cfg, opt));
}
