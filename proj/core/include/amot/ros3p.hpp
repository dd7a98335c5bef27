#pragma once

#include <array>
#include <string>

#include "amot/dgspace.hpp"
#include "amot/sipg.hpp"
#include "amot/sparsela.hpp"

namespace amot {

/// Coefficients of a 3-stage linearly implicit Rosenbrock pair in the form
///   (M/(gamma tau) - J) K_i = R(z_i) + sum_{j<i} (c_ij/tau) M K_j,
///   z_i = u + sum_{j<i} a_ij K_j,
///   u3 = u + sum m_i K_i   (order 3),   u2 = u + sum mhat_i K_i (order 2).
struct Ros3pTableau {
  double gamma;
  std::array<std::array<double, 3>, 3> a;  // strictly lower
  std::array<std::array<double, 3>, 3> c;  // strictly lower
  std::array<double, 3> m;
  std::array<double, 3> mhat;
};

/// The shipped pair: 3 stages, order 3(2), L-stable (|R(z)| -> 0 as
/// z -> -infinity), one f-evaluation shared by stages 2 and 3, embedded
/// method damped with Rhat(-inf) = 1/2. Validated at startup by
/// validate_tableau.
Ros3pTableau default_tableau();

struct TableauReport {
  bool pass = false;
  std::array<double, 4> order3_residuals{};  // conditions for the m weights
  std::array<double, 2> order2_residuals{};  // conditions for the mhat weights
  double max_residual = 0.0;
  std::string message;
};

/// Evaluates the classical Rosenbrock order conditions (order 3 for m, order
/// 2 for mhat) after transforming the implementation coefficients back to
/// (alpha, Gamma, b) form. Passes iff every residual is <= 1e-12.
TableauReport validate_tableau(const Ros3pTableau& t);

/// Stability function R(z) of the order-3 weights: one step applied to
/// u' = lambda u with z = tau*lambda. Requires 1 - gamma z != 0.
double stability_function(const Ros3pTableau& t, double z);

struct StepStats {
  int prepares = 0;      // stage-matrix factorizations (must be 1 per step)
  int solves = 0;
  int total_iterations = 0;
};

struct StepResult {
  DgFunction u3;
  DgFunction u2;
  bool ok = false;
  StepStats stats;
};

/// One Rosenbrock step of size tau for M du/dt = -A u - B(u). The Jacobian is
/// frozen at u_prev and the stage matrix M/(gamma tau) - J is prepared once
/// for all three solves.
StepResult step(const Ros3pTableau& t, const DgFunction& u_prev, double tau,
                const BlockCsrMatrix& M, const BlockCsrMatrix& A,
                const NonlinearReaction& reaction, const SolverOptions& solver_opts = {});

}  // namespace amot
