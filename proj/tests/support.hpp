#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "liouville/singular_model.hpp"
#include "liouville/torus.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

// Sum of a few random Fourier modes with |k_1|, |k_2| <= kmax, evaluated
// pointwise (no FFT involved).
inline liouville::ScalarField random_trig_field(const liouville::TorusGrid& grid, std::mt19937_64& rng,
                                                int kmax = 5, int modes = 8) {
  std::uniform_int_distribution<int> kd(-kmax, kmax);
  std::normal_distribution<double> amp(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  struct Mode { int k1, k2; double a, ph; };
  std::vector<Mode> ms;
  for (int m = 0; m < modes; ++m) ms.push_back({kd(rng), kd(rng), amp(rng), phase(rng)});
  const double c = amp(rng);
  return liouville::ScalarField::sample(grid, [&](const liouville::Point& p) {
    double v = c;
    for (const auto& m : ms) v += m.a * std::cos(2 * kPi * (m.k1 * p.x() + m.k2 * p.y()) + m.ph);
    return v;
  });
}

// Random symmetric positive definite matrix, eigenvalues in [lo, hi].
inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double lo = 0.2, double hi = 3.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> ev(lo, hi);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = ev(rng);
  Eigen::MatrixXd a = q * d.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

// Exhaustive min over subsets and candidate points, written without any of the
// library's Lambda code: two nested loops over bitmasks and a double sum.
inline double brute_force_lambda(const Eigen::MatrixXd& a, const std::vector<std::vector<double>>& alphas,
                                 const std::vector<double>& rho) {
  const int n = static_cast<int>(rho.size());
  std::vector<std::vector<double>> points = alphas;
  points.push_back(std::vector<double>(n, 0.0));
  double best = INFINITY;
  for (const auto& al : points) {
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      double lin = 0.0, quad = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!(mask >> i & 1u)) continue;
        lin += 8.0 * kPi * (1.0 + al[i]) * rho[i];
        for (int j = 0; j < n; ++j)
          if (mask >> j & 1u) quad += a(i, j) * rho[i] * rho[j];
      }
      best = std::min(best, lin - quad);
    }
  }
  return best;
}

}  // namespace testing
