#pragma once

// The Euler-Lagrange functional
//   J(u) = 1/2 sum_ij a^{ij} <grad u_i, grad u_j> - sum_i rho_i (log int h~_i e^{u_i} - mean u_i)
// with its L^2 gradient, the Euler-Lagrange residual and the normalisation u -> v.

#include <vector>

#include "liouville/lambda.hpp"
#include "liouville/singular_model.hpp"
#include "liouville/torus.hpp"

namespace liouville {

/// N components on one grid.
class SystemField {
 public:
  SystemField() = default;
  explicit SystemField(std::vector<ScalarField> components);
  static SystemField zero(const TorusGrid& grid, int components);

  int components() const { return static_cast<int>(comps_.size()); }
  const TorusGrid& grid() const { return comps_.front().grid(); }
  const ScalarField& operator[](int i) const { return comps_[i]; }
  ScalarField& operator[](int i) { return comps_[i]; }
  const std::vector<ScalarField>& fields() const { return comps_; }

  bool all_finite() const;
  /// this += s * other, componentwise.
  SystemField& axpy(double s, const SystemField& other);
  /// Subtracts the mean of every component.
  SystemField& remove_means();

 private:
  std::vector<ScalarField> comps_;
};

struct EnergyReport {
  double J = 0.0;
  double dirichlet_part = 0.0;
  std::vector<double> entropy_parts;  // rho_i (log mass_i - mean u_i)
  std::vector<double> masses;         // int h~_i e^{u_i}
  std::vector<double> log_masses;     // overflow-safe log of the masses
};

/// log int h~ e^u computed as s + log int h~ e^{u-s}, s = max(u).
double log_mass(const ScalarField& tilde_h, const ScalarField& u);

EnergyReport evaluate_J(const SingularModel& model, const RhoVector& rho, const SystemField& u);

/// g_i = sum_j a^{ij} (-Lap u_j) - rho_i (h~_i e^{u_i} / mass_i - 1).
SystemField l2_gradient(const SingularModel& model, const RhoVector& rho, const SystemField& u);

/// r_i = -Lap u_i - sum_j a_ij rho_j (h~_j e^{u_j} / mass_j - 1)  (= A g).
SystemField el_residual(const SingularModel& model, const RhoVector& rho, const SystemField& u);

struct ResidualNorms {
  double l2 = 0.0;
  double linf = 0.0;
  double h_minus_1 = 0.0;  // sqrt(sum_i ||r_i||_{H^-1}^2)
};
ResidualNorms residual_norms(const SystemField& r);

/// v_i = u_i - log int h~_i e^{u_i} + log rho_i, so that int h~_i e^{v_i} = rho_i.
SystemField normalize_v(const SingularModel& model, const RhoVector& rho, const SystemField& u);

}  // namespace liouville
