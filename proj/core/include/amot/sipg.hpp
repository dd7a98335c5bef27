#pragma once

#include <functional>
#include <string>
#include <utility>

#include "amot/dgspace.hpp"
#include "amot/mesh.hpp"
#include "amot/sparsela.hpp"

namespace amot {

/// Prescribed analytic velocity with its analytic divergence.
struct VelocityField {
  std::string name = "custom";
  std::function<Vec2(Vec2)> value;
  std::function<double(Vec2)> divergence;

  static VelocityField zero();
  static VelocityField sheering();           // V = (0, -100x), div V = 0
  static VelocityField expanding();          // V = (10x, 10y),  div V = 20
  static VelocityField constant(Vec2 v);
};

struct ModelParams {
  double epsilon = 0.01;  // surface tension
  double sigma = 10.0;    // SIPG penalty
};

/// Bistable cubic f(u) = 2u(1-u)(1-2u) and its derivative.
std::pair<double, double> f_cubic(double u);

/// Reaction term scale * f(u) entering the right-hand side as
/// -(scale) \int f(u) v. A null `f` disables the term.
struct NonlinearReaction {
  double scale = 0.0;
  std::pair<double, double> (*f)(double) = nullptr;

  static NonlinearReaction allen_cahn(double epsilon);
  static NonlinearReaction none() { return {}; }
};

/// Term toggles for assemble_stiffness, used to isolate sub-operators in
/// tests and verification runs.
struct StiffnessTerms {
  bool diffusion = true;
  bool advection = true;        // volume V.grad(u) v + (div V) u v
  bool upwind = true;           // interior inflow-edge jump term
  bool boundary_inflow = true;  // inflow-boundary term (zero exterior data)
  bool penalty = true;          // sigma*eps/h_e jump penalty, interior edges
  bool consistency = true;      // symmetric SIPG consistency terms, interior edges

  static StiffnessTerms all() { return {}; }
  static StiffnessTerms diffusion_only() {
    return {true, false, false, false, true, true};
  }
  static StiffnessTerms advection_only() {
    return {false, true, true, true, false, false};
  }
};

/// Full SIPG operator A with (A u, v) = a_h(u, v): element diffusion,
/// advection + reaction (div V) u, upwinded interior inflow edges, the inflow
/// boundary term, jump penalty and symmetric consistency terms.
BlockCsrMatrix assemble_stiffness(const Mesh& mesh, const ModelParams& params,
                                  const VelocityField& field,
                                  const StiffnessTerms& terms = {});

/// B(u) with B(u).v = scale * \int f(u_h) v_h, degree-4 quadrature (exact for
/// P1 u and cubic f).
std::vector<double> assemble_nonlinear(const DgFunction& u, const NonlinearReaction& reaction);
std::vector<double> assemble_nonlinear(const DgFunction& u, const ModelParams& params);

/// Load vector (g, v_h) for a scalar source g, degree-6 quadrature.
std::vector<double> assemble_load(const Mesh& mesh, const std::function<double(Vec2)>& g);

/// Jacobian J = -A - N'(u) of the spatial right-hand side -A u - B(u);
/// N'(u) is block diagonal with blocks scale * \int f'(u_h) phi_i phi_j.
BlockCsrMatrix assemble_jacobian(const DgFunction& u, const BlockCsrMatrix& A,
                                 const NonlinearReaction& reaction);

/// Cheap startup sanity check: estimates the smallest eigenvalue of the
/// symmetric diffusion+penalty+consistency operator by shifted power
/// iteration and reports whether it is nonnegative (up to roundoff).
bool check_coercivity(const Mesh& mesh, const ModelParams& params, int iterations = 200);

}  // namespace amot
