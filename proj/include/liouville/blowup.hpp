#pragma once

// Non-compactness probes: the concentrating test functions
//   phi_i = -2 (1 + alpha_i(x)) log max{1, lambda d(., x)}
// and their combinations u^lambda, concentration masses sigma_i(x) with the
// algebraic (Pohozaev) check, and a diagnostic blow-up set detector.

#include <optional>
#include <span>
#include <vector>

#include "liouville/energy.hpp"
#include "liouville/lambda.hpp"

namespace liouville {

/// Largest admissible lambda on a grid: the plateau B_{1/lambda} spans >= 8 cells.
double max_resolved_lambda(const TorusGrid& grid);

/// Throws InvalidInput unless 0 < lambda <= n/8.
void check_resolution(const TorusGrid& grid, double lambda);

ScalarField phi_component(const TorusGrid& grid, const Point& x, double lambda, double alpha_x);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_deviation = 0.0;  // largest |residual| of the fit
};

/// Ordinary least squares y ~ slope * x + intercept.
SlopeFit fit_line(std::span<const double> x, std::span<const double> y);

struct PhiAsymptotics {
  std::vector<double> lambdas;
  std::vector<double> dirichlet;  // <grad phi_i, grad phi_j>
  std::vector<double> mean_i;     // mean of phi_i
  std::vector<double> mean_j;
  SlopeFit dirichlet_fit;         // against log lambda
  SlopeFit mean_i_fit;
  SlopeFit mean_j_fit;
};

/// Regresses the Dirichlet pairing and the means of phi_i, phi_j on log lambda.
/// Needs at least three lambdas, all resolved on the grid.
PhiAsymptotics phi_asymptotics_check(const TorusGrid& grid, const Point& x, double alpha_i,
                                     double alpha_j, std::span<const double> lambdas);

/// u_i = sum_j theta[i][j] phi_j^{lambda,x}, phi_j built with alpha_j(x) from the model.
SystemField combine_test_functions(const SingularModel& model, const Point& x, double lambda,
                                   const std::vector<std::vector<double>>& theta);

/// u_i^lambda = sum_{j in I} a_ij rho_j / (4 pi (1 + alpha_j(x))) phi_j^{lambda,x}.
SystemField u_lambda_family(const SingularModel& model, const RhoVector& rho, Subset subset,
                            const Point& x, double lambda);

struct BlowupSlope {
  std::vector<double> lambdas;
  std::vector<double> energies;  // J(u^lambda)
  SlopeFit fit;                  // J against log lambda
  double lambda_ix = 0.0;        // Lambda_{I,x}(rho)
  double predicted_slope = 0.0;  // Lambda_{I,x}(rho) / (4 pi)
};

BlowupSlope blowup_slope(const SingularModel& model, const RhoVector& rho, Subset subset,
                         const Point& x, std::span<const double> lambdas);

/// Representative point for the generic (non-source) candidate: the node
/// farthest from every source, or (1/2, 1/2) without sources.
Point generic_point(const SingularModel& model);

struct ConcentrationReport {
  Point x;
  std::vector<double> radii;                // decreasing
  std::vector<std::vector<double>> masses;  // [component][radius]
  std::vector<double> sigma;                // finite-radius surrogate of sigma_i(x)
  std::vector<bool> sigma_converged;        // two smallest radii agree within 2%
  std::vector<double> sigma_threshold;      // sigma_i^0
  std::vector<double> sigma_prime;          // sigma_i'
  double pohozaev_residual = 0.0;
};

/// Masses of h~_i e^{v_i} on balls B_r(x). `v` must be normalised (masses = rho)
/// and the radii strictly decreasing with the smallest >= 4h.
ConcentrationReport estimate_sigma(const SingularModel& model, const RhoVector& rho,
                                   const SystemField& v, const Point& x,
                                   std::span<const double> radii);

/// Lambda_{{1..N},x}(sigma): vanishes on concentration values.
double pohozaev_check(const SingularModel& model, std::span<const double> sigma, const Point& x);

/// Per component, the points where the last field has grown by more than
/// `threshold` above the maximum of the first field. Hot nodes within 8h of each
/// other form one cluster, reported by its argmax; clusters come highest first.
std::vector<std::vector<Point>> detect_blowup_set(std::span<const SystemField> fields,
                                                  double threshold = 5.0);

/// log of the planar Liouville bubble 8 lambda^2 / (1 + lambda^2 d^2)^2 centred
/// at x, with the bubble's own value at `cutoff` subtracted so that the density
/// vanishes (up to a 1e-12 floor) beyond d = cutoff.
ScalarField synthetic_bubble(const TorusGrid& grid, const Point& x, double lambda,
                             double cutoff = 0.25);

}  // namespace liouville
