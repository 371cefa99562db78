#pragma once

// Flat unit torus [0,1)^2 sampled at cell centres, with the exact-spectrum
// linear operators used everywhere else: Laplacian, its mean-free inverse,
// Dirichlet pairing, band-limited Green function and midpoint quadrature.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace liouville {

/// A point of the torus; coordinates are reduced into [0,1).
class Point {
 public:
  Point() = default;
  Point(double x, double y);

  double x() const { return x_; }
  double y() const { return y_; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
};

/// Periodic distance: minimum over the periodic images. Range [0, sqrt(2)/2].
double torus_distance(const Point& p, const Point& q);

/// n x n cell-centred grid on the unit torus. Node (i, j) sits at
/// ((i+1/2)h, (j+1/2)h) and is stored at flat index j*n + i (row-major in y).
class TorusGrid {
 public:
  explicit TorusGrid(int n);

  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  double cell_area() const { return spacing() * spacing(); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * n_ + i;
  }
  Point node(std::size_t idx) const;
  Point node(int i, int j) const;

  friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

 private:
  int n_;
};

/// One real component on a grid. All values finite when constructed from data.
class ScalarField {
 public:
  explicit ScalarField(TorusGrid grid);
  ScalarField(TorusGrid grid, std::vector<double> values);

  static ScalarField constant(TorusGrid grid, double c);
  static ScalarField sample(TorusGrid grid, const std::function<double(const Point&)>& f);

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  double mean() const;
  double max() const;
  double min() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double c);
  /// this += s * other
  ScalarField& axpy(double s, const ScalarField& other);

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Midpoint quadrature h^2 * sum(values); equals the mean since |T| = 1.
double integrate(const ScalarField& u);

/// Spectrally exact Laplacian: mode k is multiplied by -4 pi^2 |k|^2 with k in
/// the band (-n/2, n/2]^2. The result has zero mean.
ScalarField laplacian(const ScalarField& u);

/// Solves -Lap(u) = f - mean(f) with mean(u) = 0.
ScalarField inv_laplacian_zero_mean(const ScalarField& f);

/// Integral of grad(u) . grad(v) through the Parseval sum.
double dirichlet_inner(const ScalarField& u, const ScalarField& v);

/// ||grad (-Lap)^{-1} r||_{L^2}; the mean of r is ignored.
double h_minus_1_norm(const ScalarField& r);

/// Band-limited Green function of -Lap centred at p (zero mean):
/// G(x) = sum_{k != 0} exp(2 pi i k.(x-p)) / (4 pi^2 |k|^2).
ScalarField green_function(const TorusGrid& grid, const Point& p);

namespace spectral {

/// Half-spectrum (r2c layout, n x (n/2+1)) of a real field, unnormalised.
class Spectrum {
 public:
  Spectrum(TorusGrid grid, std::vector<std::complex<double>> coeffs);

  const TorusGrid& grid() const { return grid_; }
  std::span<const std::complex<double>> coeffs() const { return coeffs_; }

 private:
  TorusGrid grid_;
  std::vector<std::complex<double>> coeffs_;
};

Spectrum forward(const ScalarField& u);

/// Integral of grad(u) . grad(v) from precomputed spectra.
double dirichlet_pairing(const Spectrum& u, const Spectrum& v);

/// Band representative of a DFT index in (-n/2, n/2].
inline int wavenumber(int m, int n) { return m <= n / 2 ? m : m - n; }

}  // namespace spectral

}  // namespace liouville
