#pragma once

// Energy minimisation of J_rho on mean-free fields by Sobolev-preconditioned
// descent with Armijo backtracking, plus warm-started continuation in rho.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liouville/energy.hpp"
#include "liouville/lambda.hpp"

namespace liouville {

struct SolverOptions {
  int max_iters = 5000;
  double tol_h_minus_1 = 1e-8;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double initial_step = 1.0;
  bool record_trace = true;

  /// Throws InvalidInput on out-of-range settings.
  void validate() const;
};

enum class SolverStatus {
  converged,
  max_iterations,
  stalled,                 // line search could not decrease J any further
  expected_unboundedness,  // Lambda(rho) < 0: energy floor hit, or the run ended at a
                           // discrete critical point of an unbounded functional
};
std::string to_string(SolverStatus s);

struct MinimizeResult {
  SystemField u_star;              // mean-free per component
  std::vector<double> J_trace;     // accepted energies; first entry is J(init)
  double residual_h_minus_1 = 0.0; // re-evaluated on u_star after the run
  int iterations = 0;
  bool converged = false;
  SolverStatus status = SolverStatus::max_iterations;
  EnergyReport energy_report;
  LambdaReport lambda;
  std::string note;
};

/// Band-limited noise with modes 0 < |k| <= 4 and unit H^1 norm per component.
SystemField random_smooth_init(const TorusGrid& grid, int components, std::uint64_t seed);

/// Descent direction d_i = -(-Lap)^{-1} (A g)_i, where g is the L^2 gradient.
/// Stops when the H^{-1} norm of the Euler-Lagrange residual drops below
/// tol_h_minus_1. Throws NumericFailure if J falls below -1e6 (1 + |J(init)|)
/// while Lambda(rho) > 0.
MinimizeResult minimize(const SingularModel& model, const RhoVector& rho,
                        const SystemField& init, const SolverOptions& opts = {});
MinimizeResult minimize(const SingularModel& model, const RhoVector& rho,
                        const SolverOptions& opts = {});

struct ContinuationStep {
  RhoVector rho;
  std::optional<MinimizeResult> result;
  std::string error;  // set when the step threw; the sequence continues
};

/// Warm-started minimisations along a componentwise strictly increasing sequence.
std::vector<ContinuationStep> continuation(const SingularModel& model,
                                           const std::vector<RhoVector>& rho_sequence,
                                           const SolverOptions& opts,
                                           std::optional<SystemField> init = std::nullopt);

}  // namespace liouville
