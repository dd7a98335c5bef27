#include "amot/ros3p.hpp"

#include <cmath>
#include <stdexcept>

namespace amot {

Ros3pTableau default_tableau() {
  // gamma is the root of g^3 - 3g^2 + 3g/2 - 1/6 near 0.4359, which makes the
  // order-3 stability function vanish at -infinity. Stage 3 reuses the stage-2
  // function evaluation (a31 = a21, a32 = 0).
  Ros3pTableau t;
  t.gamma = 0.435866521508458999416019451194;
  t.a = {{{0.0, 0.0, 0.0},
          {2.29428036027904171982205036136, 0.0, 0.0},
          {2.29428036027904171982205036136, 0.0, 0.0}}};
  t.c = {{{0.0, 0.0, 0.0},
          {0.0, 0.0, 0.0},
          {-3.0, -1.25097989505606042201886610438, 0.0}}};
  t.m = {2.52952024018602781321470024091, 0.416993298352020140672955368127,
         0.764760120093013906607350120453};
  t.mhat = {2.72936357978565958670885784799, 0.558026667974905390818950505328,
            1.16444679929227745359566533463};
  return t;
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Inverse of a lower-triangular 3x3 with nonzero diagonal.
Mat3 invert_lower(const Mat3& g) {
  Mat3 inv{};
  for (int i = 0; i < 3; ++i) inv[i][i] = 1.0 / g[i][i];
  inv[1][0] = -g[1][0] * inv[0][0] * inv[1][1];
  inv[2][1] = -g[2][1] * inv[1][1] * inv[2][2];
  inv[2][0] = -(g[2][0] * inv[0][0] + g[2][1] * inv[1][0]) * inv[2][2];
  return inv;
}

}  // namespace

TableauReport validate_tableau(const Ros3pTableau& t) {
  TableauReport rep;
  if (!(t.gamma > 0.0)) {
    rep.message = "gamma must be positive";
    rep.max_residual = 1.0;
    return rep;
  }

  // Recover the classical (alpha, Gamma, b) coefficients:
  //   Gamma^{-1} = I/gamma - C,  alpha = A Gamma,  b = Gamma^T m.
  Mat3 ginv{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) ginv[i][j] = (i == j ? 1.0 / t.gamma : 0.0) - t.c[i][j];
  const Mat3 g = invert_lower(ginv);

  Mat3 alpha{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) alpha[i][j] += t.a[i][k] * g[k][j];

  std::array<double, 3> b{}, bh{};
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      b[j] += g[i][j] * t.m[i];
      bh[j] += g[i][j] * t.mhat[i];
    }

  std::array<double, 3> alpha_sum{}, beta_sum{};  // strictly-lower row sums
  Mat3 beta{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) {
      beta[i][j] = alpha[i][j] + g[i][j];
      alpha_sum[i] += alpha[i][j];
      beta_sum[i] += beta[i][j];
    }

  const double gamma = t.gamma;
  double o1 = -1.0, o2 = -(0.5 - gamma), o3 = -1.0 / 3.0;
  double o4 = -(1.0 / 6.0 - gamma + gamma * gamma);
  double e1 = -1.0, e2 = -(0.5 - gamma);
  for (int i = 0; i < 3; ++i) {
    o1 += b[i];
    o2 += b[i] * beta_sum[i];
    o3 += b[i] * alpha_sum[i] * alpha_sum[i];
    e1 += bh[i];
    e2 += bh[i] * beta_sum[i];
    for (int k = 0; k < i; ++k) o4 += b[i] * beta[i][k] * beta_sum[k];
  }

  rep.order3_residuals = {std::abs(o1), std::abs(o2), std::abs(o3), std::abs(o4)};
  rep.order2_residuals = {std::abs(e1), std::abs(e2)};
  for (double r : rep.order3_residuals) rep.max_residual = std::max(rep.max_residual, r);
  for (double r : rep.order2_residuals) rep.max_residual = std::max(rep.max_residual, r);
  rep.pass = rep.max_residual <= 1e-12;
  rep.message = rep.pass ? "ok" : "order-condition residual above 1e-12";
  return rep;
}

double stability_function(const Ros3pTableau& t, double z) {
  const double denom = 1.0 / t.gamma - z;
  if (denom == 0.0) throw std::invalid_argument("stability_function: pole at 1 - gamma z = 0");
  std::array<double, 3> K{};
  for (int i = 0; i < 3; ++i) {
    double zi = 1.0;
    for (int j = 0; j < i; ++j) zi += t.a[i][j] * K[j];
    double rhs = z * zi;
    for (int j = 0; j < i; ++j) rhs += t.c[i][j] * K[j];
    K[i] = rhs / denom;
  }
  return 1.0 + t.m[0] * K[0] + t.m[1] * K[1] + t.m[2] * K[2];
}

StepResult step(const Ros3pTableau& t, const DgFunction& u_prev, double tau,
                const BlockCsrMatrix& M, const BlockCsrMatrix& A,
                const NonlinearReaction& reaction, const SolverOptions& solver_opts) {
  if (!(tau > 0.0)) throw std::invalid_argument("step: tau must be positive");
  if (A.block_rows() != u_prev.mesh->num_triangles() || M.block_rows() != A.block_rows())
    throw std::invalid_argument("step: operator/mesh size mismatch");

  const int n = u_prev.size();
  StepResult out;

  // One Jacobian, one stage matrix, one factorization for all three stages.
  BlockCsrMatrix S = assemble_jacobian(u_prev, A, reaction);
  S.scale(-1.0);
  S.add_scaled(M, 1.0 / (t.gamma * tau));
  const BlockJacobiBicgstab solver(S, solver_opts);
  out.stats.prepares = 1;

  std::array<std::vector<double>, 3> K;
  std::array<std::vector<double>, 3> MK;
  std::vector<double> z(n), z_prev(n), rhs(n), Az(n), B;
  bool have_prev_rhs = false;

  for (int i = 0; i < 3; ++i) {
    for (int q = 0; q < n; ++q) {
      double v = u_prev.coeff[q];
      for (int j = 0; j < i; ++j) v += t.a[i][j] * K[j][q];
      z[q] = v;
    }

    // Stages with identical a-rows share the function evaluation.
    const bool same_z = have_prev_rhs && z == z_prev;
    if (!same_z) {
      A.matvec(z, Az);
      DgFunction zf;
      zf.mesh = u_prev.mesh;
      zf.coeff = z;
      B = assemble_nonlinear(zf, reaction);
      z_prev = z;
      have_prev_rhs = true;
    }

    for (int q = 0; q < n; ++q) rhs[q] = -Az[q] - B[q];
    for (int j = 0; j < i; ++j) {
      const double cf = t.c[i][j] / tau;
      if (cf == 0.0) continue;
      for (int q = 0; q < n; ++q) rhs[q] += cf * MK[j][q];
    }

    K[i].assign(n, 0.0);
    const SolveStatus st = solver.solve(rhs, K[i]);
    out.stats.solves += 1;
    out.stats.total_iterations += st.iterations;
    if (!st.converged) {
      out.ok = false;
      return out;
    }
    MK[i] = M.matvec(K[i]);
  }

  out.u3 = DgFunction(u_prev.mesh);
  out.u2 = DgFunction(u_prev.mesh);
  for (int q = 0; q < n; ++q) {
    const double k0 = K[0][q], k1 = K[1][q], k2 = K[2][q];
    out.u3.coeff[q] = u_prev.coeff[q] + t.m[0] * k0 + t.m[1] * k1 + t.m[2] * k2;
    out.u2.coeff[q] = u_prev.coeff[q] + t.mhat[0] * k0 + t.mhat[1] * k1 + t.mhat[2] * k2;
  }
  out.ok = out.u3.finite() && out.u2.finite();
  return out;
}

}  // namespace amot
