#include <doctest.h>

#include <cmath>

#include "amot/dgspace.hpp"
#include "amot/ros3p.hpp"
#include "amot/sipg.hpp"
#include "test_utils.hpp"

using namespace amot;
using namespace amot::testing;

namespace {

std::shared_ptr<const Mesh> uniform(int n) {
  return std::make_shared<const Mesh>(build_uniform(n));
}

// Integrates M u' = -A u - B(u) to T by repeated steps propagating the chosen
// weights.
DgFunction integrate(const Ros3pTableau& t, DgFunction u, double T, int steps,
                     const BlockCsrMatrix& M, const BlockCsrMatrix& A,
                     const NonlinearReaction& reaction, bool third_order) {
  const double tau = T / steps;
  for (int k = 0; k < steps; ++k) {
    const StepResult r = step(t, u, tau, M, A, reaction, {1e-13, 4000});
    REQUIRE(r.ok);
    u = third_order ? r.u3 : r.u2;
  }
  return u;
}

}  // namespace

TEST_CASE("tableau passes the order-condition gate") {
  const TableauReport rep = validate_tableau(default_tableau());
  CHECK(rep.pass);
  CHECK(rep.max_residual <= 1e-12);
  for (double r : rep.order3_residuals) CHECK(r <= 1e-12);
  for (double r : rep.order2_residuals) CHECK(r <= 1e-12);
}

TEST_CASE("perturbing a weight is caught by the order conditions") {
  Ros3pTableau t = default_tableau();
  t.m[0] += 1e-3;
  const TableauReport rep = validate_tableau(t);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_residual > 1e-4);
}

TEST_CASE("zero gamma is rejected") {
  Ros3pTableau t = default_tableau();
  t.gamma = 0.0;
  CHECK_FALSE(validate_tableau(t).pass);
}

TEST_CASE("stability function") {
  const Ros3pTableau t = default_tableau();

  SUBCASE("consistency: R(0) = 1") {
    CHECK(stability_function(t, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("stiff limit: |R(-1e8)| below 1e-6") {
    CHECK(std::abs(stability_function(t, -1e8)) <= 1e-6);
  }

  SUBCASE("third-order Taylor agreement, ratio ~16 per doubling of |z|") {
    const double r1 = std::abs(stability_function(t, -0.01) - std::exp(-0.01));
    const double r2 = std::abs(stability_function(t, -0.02) - std::exp(-0.02));
    const double r4 = std::abs(stability_function(t, -0.04) - std::exp(-0.04));
    CHECK(r2 / r1 == doctest::Approx(16.0).epsilon(0.3));
    CHECK(r4 / r2 == doctest::Approx(16.0).epsilon(0.3));
  }

  SUBCASE("pole rejected") {
    CHECK_THROWS_AS(stability_function(t, 1.0 / t.gamma), std::invalid_argument);
  }
}

TEST_CASE("equilibrium state is a fixed point of the step") {
  const auto mesh = uniform(2);
  const ModelParams params{0.02, 10.0};
  const BlockCsrMatrix M = mass_matrix(*mesh);
  const BlockCsrMatrix A = assemble_stiffness(*mesh, params, VelocityField::zero());
  DgFunction u(mesh, 0.5);  // f(1/2) = 0 and grad u = 0

  const StepResult r = step(default_tableau(), u, 1e-2, M, A,
                            NonlinearReaction::allen_cahn(params.epsilon));
  REQUIRE(r.ok);
  for (int i = 0; i < u.size(); ++i) {
    CHECK(std::abs(r.u3.coeff[i] - 0.5) <= 1e-14);
    CHECK(std::abs(r.u2.coeff[i] - 0.5) <= 1e-14);
  }
}

TEST_CASE("linear problem reproduces the stability function") {
  const auto mesh = uniform(1);
  const BlockCsrMatrix M = mass_matrix(*mesh);
  const double lambda = -3.7;
  const double tau = 0.1;

  // A = -lambda M makes M u' = -A u the system u' = lambda u.
  BlockCsrMatrix A = M;
  A.scale(-lambda);

  DgFunction u(mesh);
  u.coeff = random_vector(u.size(), 77);
  const Ros3pTableau t = default_tableau();
  const StepResult r = step(t, u, tau, M, A, NonlinearReaction::none(), {1e-14, 100});
  REQUIRE(r.ok);

  const double R = stability_function(t, tau * lambda);
  for (int i = 0; i < u.size(); ++i)
    CHECK(r.u3.coeff[i] == doctest::Approx(R * u.coeff[i]).epsilon(1e-12));
}

TEST_CASE("one stage matrix, three solves per step") {
  const auto mesh = uniform(2);
  const ModelParams params{0.05, 10.0};
  const BlockCsrMatrix M = mass_matrix(*mesh);
  const BlockCsrMatrix A = assemble_stiffness(*mesh, params, VelocityField::sheering());
  DgFunction u(mesh, 0.3);

  const StepResult r =
      step(default_tableau(), u, 1e-3, M, A, NonlinearReaction::allen_cahn(params.epsilon));
  REQUIRE(r.ok);
  CHECK(r.stats.prepares == 1);
  CHECK(r.stats.solves == 3);
}

TEST_CASE("equal weight vectors collapse the embedded solution onto u3") {
  const auto mesh = uniform(1);
  const ModelParams params{0.1, 10.0};
  const BlockCsrMatrix M = mass_matrix(*mesh);
  const BlockCsrMatrix A = assemble_stiffness(*mesh, params, VelocityField::zero());
  Ros3pTableau t = default_tableau();
  t.mhat = t.m;  // u3 - u2 = sum (m_i - mhat_i) K_i must vanish identically

  DgFunction u(mesh);
  u.coeff = random_vector(u.size(), 13, 0.0, 1.0);
  const StepResult r = step(t, u, 1e-3, M, A, NonlinearReaction::allen_cahn(params.epsilon));
  REQUIRE(r.ok);
  for (int i = 0; i < u.size(); ++i) CHECK(r.u3.coeff[i] == r.u2.coeff[i]);
}

TEST_CASE("nonlinear convergence on a frozen mesh: orders 3 and 2") {
  const auto mesh = uniform(1);
  const ModelParams params{0.1, 10.0};
  const BlockCsrMatrix M = mass_matrix(*mesh);
  const BlockCsrMatrix A = assemble_stiffness(*mesh, params, VelocityField::zero());
  const NonlinearReaction reaction = NonlinearReaction::allen_cahn(params.epsilon);
  const Ros3pTableau t = default_tableau();

  DgFunction u0 = interpolate(mesh, [](Vec2 p) { return 0.5 + 0.3 * p.x - 0.2 * p.y; });
  const double T = 0.08;
  const int base_steps = 4;  // tau = 0.02 down to 0.0025
  const DgFunction ref = integrate(t, u0, T, base_steps * 64, M, A, reaction, true);

  std::vector<double> taus, err3, err2, gap;
  for (int mult : {1, 2, 4, 8}) {
    const int steps = base_steps * mult;
    const DgFunction u3 = integrate(t, u0, T, steps, M, A, reaction, true);
    const DgFunction u2 = integrate(t, u0, T, steps, M, A, reaction, false);
    taus.push_back(T / steps);
    err3.push_back(l2_distance(u3, ref));
    err2.push_back(l2_distance(u2, ref));
    // embedded gap of one step from the same state scales like tau^3
    const StepResult last = step(t, u3, T / steps, M, A, reaction);
    gap.push_back(l2_distance(last.u3, last.u2));
  }

  const double order3 = observed_order(taus, err3);
  const double order2 = observed_order(taus, err2);
  CHECK(order3 > 2.7);
  CHECK(order3 < 3.3);
  CHECK(order2 > 1.7);
  CHECK(order2 < 2.3);

  for (size_t i = 0; i + 1 < gap.size(); ++i) {
    const double ratio = gap[i] / gap[i + 1];
    CHECK(ratio > 8.0 * 0.7);
    CHECK(ratio < 8.0 * 1.3);
  }
}

TEST_CASE("step rejects invalid inputs") {
  const auto mesh = uniform(1);
  const BlockCsrMatrix M = mass_matrix(*mesh);
  DgFunction u(mesh, 0.1);
  CHECK_THROWS_AS(step(default_tableau(), u, 0.0, M, M, NonlinearReaction::none()),
                  std::invalid_argument);
}
