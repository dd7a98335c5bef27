#include <doctest.h>

#include <cmath>

#include "amot/dgspace.hpp"
#include "amot/quadrature.hpp"
#include "amot/sipg.hpp"
#include "test_utils.hpp"

using namespace amot;
using namespace amot::testing;

namespace {

std::shared_ptr<const Mesh> uniform(int n) {
  return std::make_shared<const Mesh>(build_uniform(n));
}

}  // namespace

TEST_CASE("f_cubic: roots and pointwise values") {
  for (double r : {0.0, 0.5, 1.0}) CHECK(f_cubic(r).first == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f_cubic(0.25).first == doctest::Approx(0.1875).epsilon(1e-15));
  CHECK(f_cubic(0.5).second == doctest::Approx(-1.0).epsilon(1e-15));
  // f' is the derivative of f (finite-difference spot check)
  const double h = 1e-6;
  for (double u : {-0.2, 0.3, 0.8}) {
    const double fd = (f_cubic(u + h).first - f_cubic(u - h).first) / (2 * h);
    CHECK(f_cubic(u).second == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("velocity presets carry their analytic divergence") {
  for (const auto& field : {VelocityField::sheering(), VelocityField::expanding()}) {
    for (double x : {-0.9, -0.1, 0.4})
      for (double y : {-0.5, 0.7}) {
        const double h = 1e-5;
        const double fd = (field.value({x + h, y}).x - field.value({x - h, y}).x +
                           field.value({x, y + h}).y - field.value({x, y - h}).y) /
                          (2 * h);
        CHECK(field.divergence({x, y}) == doctest::Approx(fd).epsilon(1e-10));
      }
  }
  CHECK(VelocityField::sheering().divergence({0.3, -0.2}) == 0.0);
  CHECK(VelocityField::expanding().divergence({0.3, -0.2}) == 20.0);
}

TEST_CASE("stiffness with V=0: symmetric, annihilates constants") {
  const auto mesh = uniform(4);
  const ModelParams params{0.01, 10.0};
  const BlockCsrMatrix a = assemble_stiffness(*mesh, params, VelocityField::zero());

  const auto dense = to_dense(a);
  const int n = a.rows();
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(dense[i][j]));

  SUBCASE("SIPG symmetry") {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        CHECK(std::abs(dense[i][j] - dense[j][i]) <= 1e-12 * scale);
  }

  SUBCASE("constants in the kernel") {
    const std::vector<double> ones(n, 1.0);
    for (double v : a.matvec(ones)) CHECK(std::abs(v) <= 1e-11 * scale);
  }
}

TEST_CASE("diffusion+penalty+consistency part stays symmetric with advection present") {
  const auto mesh = uniform(2);
  const ModelParams params{0.01, 10.0};
  const BlockCsrMatrix d = assemble_stiffness(*mesh, params, VelocityField::sheering(),
                                              StiffnessTerms::diffusion_only());
  const auto dense = to_dense(d);
  for (int i = 0; i < d.rows(); ++i)
    for (int j = i + 1; j < d.rows(); ++j)
      CHECK(dense[i][j] == doctest::Approx(dense[j][i]).epsilon(1e-12));
}

TEST_CASE("expanding advection block has nonnegative symmetric part") {
  const auto mesh = uniform(2);
  const ModelParams params{0.01, 10.0};
  const BlockCsrMatrix adv = assemble_stiffness(*mesh, params, VelocityField::expanding(),
                                                StiffnessTerms::advection_only());
  auto dense = to_dense(adv);
  const int n = adv.rows();
  std::vector<std::vector<double>> sym(n, std::vector<double>(n));
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      sym[i][j] = 0.5 * (dense[i][j] + dense[j][i]);
      scale = std::max(scale, std::abs(sym[i][j]));
    }
  for (double ev : symmetric_eigenvalues(sym)) CHECK(ev >= -1e-12 * scale);
}

TEST_CASE("nonlinear form") {
  const auto mesh = uniform(2);

  SUBCASE("zero at the roots of f") {
    for (double c : {0.0, 0.5}) {
      DgFunction u(mesh, c);
      for (double v : assemble_nonlinear(u, ModelParams{0.01, 10.0})) CHECK(v == 0.0);
    }
  }

  SUBCASE("constant u=0.25 at epsilon=0.01 integrates to 75") {
    DgFunction u(mesh, 0.25);
    const auto b = assemble_nonlinear(u, ModelParams{0.01, 10.0});
    double total = 0.0;
    for (double v : b) total += v;  // B(u).1 = (f(0.25)/eps)*|domain|
    CHECK(total == doctest::Approx(75.0).epsilon(1e-12));
  }

  SUBCASE("degree-4 assembly matches an independent degree-6 quadrature") {
    DgFunction u(mesh);
    u.coeff = random_vector(u.size(), 5, -0.5, 1.5);
    const auto b4 = assemble_nonlinear(u, ModelParams{0.02, 10.0});
    // independent oracle: direct degree-6 quadrature of f(u_h) phi_j / eps
    std::vector<double> b6(u.size(), 0.0);
    for (int i = 0; i < mesh->num_triangles(); ++i) {
      const double jac = 2.0 * mesh->area(i);
      for (const auto& q : tri_rule_deg6()) {
        const std::array<double, 3> bary = {q.l0, q.l1, q.l2};
        const double uv = evaluate(u, i, bary);
        const double fv = f_cubic(uv).first / 0.02;
        for (int j = 0; j < 3; ++j) b6[3 * i + j] += jac * q.w * fv * bary[j];
      }
    }
    double scale = 1e-30;
    for (double v : b6) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < u.size(); ++i) CHECK(std::abs(b4[i] - b6[i]) <= 1e-13 * scale);
  }
}

TEST_CASE("jacobian blocks at constant states") {
  const auto mesh = uniform(2);
  const ModelParams params{0.01, 10.0};
  const NonlinearReaction reaction = NonlinearReaction::allen_cahn(params.epsilon);
  const BlockCsrMatrix a = assemble_stiffness(*mesh, params, VelocityField::zero());

  const auto check_nprime = [&](double c, double fprime) {
    DgFunction u(mesh, c);
    const BlockCsrMatrix j = assemble_jacobian(u, a, reaction);
    // J = -A - (fprime/eps) M blockwise on the diagonal
    for (int i = 0; i < mesh->num_triangles(); ++i) {
      const Block3& jb = j.diagonal_block(i);
      const Block3& ab = a.diagonal_block(i);
      const Block3 mb = local_mass_block(mesh->area(i));
      for (int k = 0; k < 9; ++k)
        CHECK(jb[k] ==
              doctest::Approx(-ab[k] - (fprime / params.epsilon) * mb[k]).epsilon(1e-12));
    }
  };
  check_nprime(0.0, 2.0);   // f'(0) = 2
  check_nprime(0.5, -1.0);  // f'(1/2) = -1
}

TEST_CASE("jacobian matches finite differences of the full residual") {
  const auto mesh = uniform(4);
  const ModelParams params{0.01, 10.0};
  const NonlinearReaction reaction = NonlinearReaction::allen_cahn(params.epsilon);
  const BlockCsrMatrix a = assemble_stiffness(*mesh, params, VelocityField::expanding());

  DgFunction u(mesh);
  u.coeff = random_vector(u.size(), 42, 0.0, 1.0);
  const BlockCsrMatrix j = assemble_jacobian(u, a, reaction);

  const auto residual = [&](const DgFunction& w) {
    auto r = a.matvec(w.coeff);
    const auto b = assemble_nonlinear(w, reaction);
    for (int i = 0; i < static_cast<int>(r.size()); ++i) r[i] = -r[i] - b[i];
    return r;
  };
  const auto r0 = residual(u);

  const double h = 1e-6;
  for (unsigned seed : {101u, 202u, 303u}) {
    auto delta = random_vector(u.size(), seed);
    double dn = 0.0;
    for (double v : delta) dn += v * v;
    dn = std::sqrt(dn);
    for (double& v : delta) v /= dn;

    DgFunction up = u;
    for (int i = 0; i < u.size(); ++i) up.coeff[i] += h * delta[i];
    const auto rp = residual(up);
    const auto jd = j.matvec(delta);

    double err2 = 0.0, ref2 = 0.0;
    for (int i = 0; i < u.size(); ++i) {
      const double fd = (rp[i] - r0[i]) / h;
      err2 += (fd - jd[i]) * (fd - jd[i]);
      ref2 += jd[i] * jd[i];
    }
    CHECK(std::sqrt(err2) <= 1e-5 * std::sqrt(ref2));
  }
}

TEST_CASE("steady diffusion convergence on the manufactured cosine solution") {
  // -eps lap(u) = g with u = cos(pi x) cos(pi y) (homogeneous Neumann).
  const double eps = 1.0;
  const ModelParams params{eps, 10.0};
  const auto exact = [](Vec2 p) { return std::cos(M_PI * p.x) * std::cos(M_PI * p.y); };
  const auto source = [&](Vec2 p) { return eps * 2.0 * M_PI * M_PI * exact(p); };

  std::vector<double> hs, errs;
  for (int n : {4, 8, 16}) {
    const auto mesh = uniform(n);
    const BlockCsrMatrix a = assemble_stiffness(*mesh, params, VelocityField::zero());
    auto b = assemble_load(*mesh, source);
    double mean = 0.0;
    for (double v : b) mean += v;
    mean /= b.size();
    for (double& v : b) v -= mean;  // project out the constant kernel

    const BlockJacobiBicgstab solver(a, {1e-12, 20000});
    std::vector<double> x;
    REQUIRE(solver.solve(b, x).converged);

    DgFunction uh(mesh);
    uh.coeff = x;
    const BlockCsrMatrix m = mass_matrix(*mesh);
    const auto mu = m.matvec(x);
    double integral = 0.0;
    for (double v : mu) integral += v;
    for (double& v : uh.coeff) v -= integral / 4.0;  // match the zero-mean exact solution

    double err2 = 0.0;
    for (int i = 0; i < mesh->num_triangles(); ++i) {
      const Triangle2 tri = mesh->triangle(i);
      const double jac = 2.0 * tri.signed_area();
      for (const auto& q : tri_rule_deg6()) {
        const std::array<double, 3> bary = {q.l0, q.l1, q.l2};
        const double d = evaluate(uh, i, bary) - exact(tri.point(bary));
        err2 += jac * q.w * d * d;
      }
    }
    hs.push_back(2.0 / n);
    errs.push_back(std::sqrt(err2));
  }
  const double order = observed_order(hs, errs);
  CHECK(order > 1.6);
  CHECK(order < 2.4);
}

TEST_CASE("coercivity sanity check accepts the default penalty") {
  CHECK(check_coercivity(build_uniform(4), ModelParams{0.01, 10.0}));
}
