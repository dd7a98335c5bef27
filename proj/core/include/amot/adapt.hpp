#pragma once

#include <span>
#include <vector>

#include "amot/dgspace.hpp"
#include "amot/ros3p.hpp"
#include "amot/sipg.hpp"

namespace amot {

/// Run parameters of the adaptive loop. TOL is split exactly into
/// TOL_T = alpha*TOL (temporal) and TOL_S = (1-alpha)*TOL (spatial).
struct AmotConfig {
  double tol = 1e-3;
  double alpha = 0.5;
  double rho = 0.9;           // step-size safety factor
  double theta = 0.9;         // bulk-marking fraction
  double refine_frac = 0.005; // refine where (eps_S)_E > refine_frac * TOL_S
  double coarsen_abs = 5e-7;  // coarsen where (eps_S)_E < coarsen_abs
  double tau0 = 1e-4;
  double tau_min = 1e-8;
  double tau_max = 5e-4;      // driver clamps to min(tau_max, T/10)
  double growth_max = 5.0;
  bool squared_spatial_thresholds = false;  // compare (eps_S)_E^2 instead

  double tol_T() const { return alpha * tol; }
  double tol_S() const { return (1.0 - alpha) * tol; }
  void validate() const;  // throws std::invalid_argument
};

/// Per-step estimator telemetry.
struct EstimatorReport {
  double eps_T = 0.0;
  double eps_S_total = 0.0;
  double eta_total = 0.0;
  std::vector<double> eps_S;                      // per coarse element
  std::vector<double> eta_E, eta_R, eta_J, eta_B; // indicator and its parts
  std::vector<int> bulk_set;
  std::vector<int> marked_refine, marked_coarsen;
};

/// eps_T = L2 norm of u3 - u2 on their (shared) mesh.
double temporal_estimator(const DgFunction& u3, const DgFunction& u2);

/// Step-size proposal tau* = (rho TOL_T / eps_T)^{1/3} tau_k, with the growth
/// factor clamped to [1/growth_max, growth_max] and the result to
/// [tau_min, tau_max]. eps_T = 0 proposes maximal growth.
double propose_tau(double eps_T, double tau_k, const AmotConfig& cfg);

struct IndicatorResult {
  double total = 0.0;
  std::vector<double> eta_E;     // sqrt(cell^2 + jump^2 + boundary^2)
  std::vector<double> cell;      // weighted strong residual, exact quadrature
  std::vector<double> jump;      // interior-edge flux and solution jumps
  std::vector<double> boundary;  // Neumann boundary flux
};

/// Residual error indicator: per-element cell residual
///   lambda_E ||(u_new-u_old)/tau + div(V u_new) + (1/eps) f(u_new)||_{L2(E)}
/// (the P1 Laplacian vanishes) plus edge terms from the flux/solution jumps,
/// with weights lambda = min(h/sqrt(eps), 1).
IndicatorResult residual_indicator(const DgFunction& u_new, const DgFunction& u_old,
                                   double tau, const ModelParams& params,
                                   const VelocityField& field);

/// Minimal prefix (descending eta_E, ties by element id) whose squared sum
/// reaches theta * total squared sum.
std::vector<int> bulk_mark(std::span<const double> eta_E, double theta);

struct SpatialEstimate {
  bool ok = false;
  double total = 0.0;
  std::vector<double> per_element;  // per coarse element, root of summed squares
};

/// Per-coarse-element L2 differences of two functions living on a common
/// fine mesh, aggregated to their ancestors in `coarse`.
SpatialEstimate aggregate_fine_difference(const DgFunction& a, const DgFunction& b,
                                          const Mesh& coarse);

/// eps_S: builds the auxiliary fine mesh by refining the bulk set, advances
/// the transferred previous solution one order-3 step of size tau on it, and
/// aggregates the per-fine-element distance to the transferred coarse
/// solution back to the coarse elements.
SpatialEstimate spatial_estimator(const DgFunction& u3_coarse, const DgFunction& u_prev,
                                  double tau, std::span<const int> bulk_set,
                                  const Ros3pTableau& tableau, const ModelParams& params,
                                  const VelocityField& field, const NonlinearReaction& reaction,
                                  const SolverOptions& solver_opts = {});

/// Refine set {(eps_S)_E > refine_frac*TOL_S} and coarsen set
/// {(eps_S)_E < coarsen_abs}; disjoint by construction.
std::pair<std::vector<int>, std::vector<int>> mark_space(std::span<const double> eps_S,
                                                         const AmotConfig& cfg);

}  // namespace amot
