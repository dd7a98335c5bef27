#include <doctest.h>

#include <cmath>
#include <numeric>

#include "amot/dgspace.hpp"
#include "amot/mesh.hpp"
#include "test_utils.hpp"

using namespace amot;
using namespace amot::testing;

namespace {

std::shared_ptr<const Mesh> uniform(int n) {
  return std::make_shared<const Mesh>(build_uniform(n));
}

std::vector<int> all_ids(const Mesh& m) {
  std::vector<int> ids(m.num_triangles());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

TEST_CASE("mass matrix: local block, symmetry, positive definiteness") {
  const auto mesh = uniform(2);
  const BlockCsrMatrix m = mass_matrix(*mesh);

  SUBCASE("local block is (|E|/12)[[2,1,1],[1,2,1],[1,1,2]]") {
    for (int i = 0; i < mesh->num_triangles(); ++i) {
      const double s = mesh->area(i) / 12.0;
      const Block3& blk = m.diagonal_block(i);
      const Block3 expect{2 * s, s, s, s, 2 * s, s, s, s, 2 * s};
      for (int k = 0; k < 9; ++k) CHECK(blk[k] == doctest::Approx(expect[k]).epsilon(1e-14));
    }
  }

  SUBCASE("u = 1 gives u^T M u = |domain| = 4") {
    const std::vector<double> ones(m.rows(), 1.0);
    const auto mu = m.matvec(ones);
    double q = 0.0;
    for (int i = 0; i < m.rows(); ++i) q += ones[i] * mu[i];
    CHECK(q == doctest::Approx(4.0).epsilon(1e-13));
  }

  SUBCASE("blocks are positive definite") {
    for (int i = 0; i < mesh->num_triangles(); ++i) {
      std::vector<std::vector<double>> d(3, std::vector<double>(3));
      const Block3& blk = m.diagonal_block(i);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) d[r][c] = blk[3 * r + c];
      for (double ev : symmetric_eigenvalues(d)) CHECK(ev > 0.0);
    }
  }
}

TEST_CASE("l2 norms") {
  const auto mesh = uniform(1);

  SUBCASE("u = v gives zero everywhere") {
    DgFunction u(mesh, 0.37), v(mesh, 0.37);
    const L2Norms n = l2_norm_per_element(u, &v);
    CHECK(n.total == 0.0);
    for (double d : n.per_element) CHECK(d == 0.0);
  }

  SUBCASE("u = 1, v = 0 gives total 2") {
    DgFunction u(mesh, 1.0), v(mesh, 0.0);
    CHECK(l2_norm_per_element(u, &v).total == doctest::Approx(2.0).epsilon(1e-14));
  }

  SUBCASE("u = x gives sqrt(4/3)") {
    const DgFunction u = interpolate(mesh, [](Vec2 p) { return p.x; });
    CHECK(l2_norm(u) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-13));
  }

  SUBCASE("mismatched meshes rejected") {
    DgFunction u(mesh), v(uniform(2));
    CHECK_THROWS_AS(l2_norm_per_element(u, &v), std::invalid_argument);
  }
}

TEST_CASE("evaluate") {
  const auto mesh = uniform(1);
  DgFunction u(mesh);
  u(0, 0) = 1.0;
  u(0, 1) = 2.0;
  u(0, 2) = 4.0;

  CHECK(evaluate(u, 0, {1, 0, 0}) == 1.0);
  CHECK(evaluate(u, 0, {0, 1, 0}) == 2.0);
  CHECK(evaluate(u, 0, {0, 0, 1}) == 4.0);
  const double third = 1.0 / 3.0;
  CHECK(evaluate(u, 0, {third, third, third}) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(evaluate(u, 9, {1, 0, 0}), std::invalid_argument);

  DgFunction c(mesh, 0.8);
  CHECK(evaluate(c, 1, {0.2, 0.3, 0.5}) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("transfer") {
  const auto coarse = uniform(2);

  SUBCASE("refinement preserves the function exactly") {
    const DgFunction u = interpolate(coarse, [](Vec2 p) { return 0.3 * p.x - 0.7 * p.y + 0.1; });
    const auto fine = std::make_shared<const Mesh>(refine(*coarse, all_ids(*coarse)));
    const DgFunction uf = transfer(u, fine);
    CHECK(l2_norm(uf) == doctest::Approx(l2_norm(u)).epsilon(1e-13));
    // pointwise: the restriction of a linear function is the same function
    const DgFunction ref = interpolate(fine, [](Vec2 p) { return 0.3 * p.x - 0.7 * p.y + 0.1; });
    for (int i = 0; i < uf.size(); ++i)
      CHECK(uf.coeff[i] == doctest::Approx(ref.coeff[i]).epsilon(1e-13));
  }

  SUBCASE("constants survive any refine/coarsen path") {
    DgFunction u(coarse, 0.625);
    const auto fine = std::make_shared<const Mesh>(refine(*coarse, std::vector<int>{0, 5}));
    const DgFunction uf = transfer(u, fine);
    for (double c : uf.coeff) CHECK(c == doctest::Approx(0.625).epsilon(1e-14));
    const DgFunction ub = transfer(uf, coarse);
    for (double c : ub.coeff) CHECK(c == doctest::Approx(0.625).epsilon(1e-14));
  }

  SUBCASE("coarsen-transfer of parentwise-linear data is exact") {
    const auto fine = std::make_shared<const Mesh>(refine(*coarse, all_ids(*coarse)));
    const DgFunction ufine =
        interpolate(fine, [](Vec2 p) { return 1.5 * p.x + 0.25 * p.y - 0.4; });
    const DgFunction back = transfer(ufine, coarse);
    const DgFunction ref =
        interpolate(coarse, [](Vec2 p) { return 1.5 * p.x + 0.25 * p.y - 0.4; });
    for (int i = 0; i < back.size(); ++i)
      CHECK(back.coeff[i] == doctest::Approx(ref.coeff[i]).epsilon(1e-12));
  }

  SUBCASE("refine then transfer back is the identity") {
    DgFunction u(coarse);
    const auto rnd = random_vector(u.size(), 17);
    u.coeff = rnd;
    const auto fine = std::make_shared<const Mesh>(refine(*coarse, all_ids(*coarse)));
    const DgFunction round = transfer(transfer(u, fine), coarse);
    for (int i = 0; i < u.size(); ++i)
      CHECK(round.coeff[i] == doctest::Approx(u.coeff[i]).epsilon(1e-12));
  }

  SUBCASE("different hierarchies rejected") {
    DgFunction u(coarse);
    CHECK_THROWS_AS(transfer(u, uniform(2)), std::invalid_argument);
  }
}

TEST_CASE("projection reproduces P1 data and averages indicators") {
  const auto mesh = uniform(2);

  SUBCASE("projection of a linear function is its interpolant") {
    const auto f = [](Vec2 p) { return 2.0 * p.x - p.y + 0.3; };
    const DgFunction pu = project(mesh, f);
    const DgFunction iu = interpolate(mesh, f);
    for (int i = 0; i < pu.size(); ++i)
      CHECK(pu.coeff[i] == doctest::Approx(iu.coeff[i]).epsilon(1e-12));
  }

  SUBCASE("projection conserves the mean of discontinuous data") {
    const auto f = [](Vec2 p) { return p.x > 0.001 ? 1.0 : 0.0; };
    const DgFunction pu = project(mesh, f, [](int) { return 5; });
    const BlockCsrMatrix m = mass_matrix(*mesh);
    const auto mu = m.matvec(pu.coeff);
    double integral = 0.0;
    for (double v : mu) integral += v;
    CHECK(integral == doctest::Approx(2.0).epsilon(1e-6));  // half the domain
  }
}
