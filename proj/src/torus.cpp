#include "liouville/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "liouville/error.hpp"

namespace liouville {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

double reduce_unit(double t) {
  double r = t - std::floor(t);
  // floor can round x slightly below an integer up to exactly 1.0
  return r >= 1.0 ? 0.0 : r;
}

template <typename T>
struct FftwFree {
  void operator()(T* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree<double>>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree<fftw_complex>>;

RealBuffer alloc_real(std::size_t count) {
  return RealBuffer(fftw_alloc_real(count));
}
ComplexBuffer alloc_complex(std::size_t count) {
  return ComplexBuffer(fftw_alloc_complex(count));
}

// Plans are created once per grid size with FFTW_ESTIMATE (deterministic
// algorithm choice) and executed through the new-array interface, which is
// thread-safe on distinct fftw_malloc'd buffers.
struct PlanSet {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  fftw_plan c2c_backward = nullptr;

  explicit PlanSet(int n) {
    const std::size_t full = static_cast<std::size_t>(n) * n;
    const std::size_t half = static_cast<std::size_t>(n) * (n / 2 + 1);
    auto real = alloc_real(full);
    auto spec = alloc_complex(half);
    auto cfull = alloc_complex(full);
    r2c = fftw_plan_dft_r2c_2d(n, n, real.get(), spec.get(), FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_2d(n, n, spec.get(), real.get(), FFTW_ESTIMATE);
    c2c_backward = fftw_plan_dft_2d(n, n, cfull.get(), cfull.get(), FFTW_BACKWARD,
                                    FFTW_ESTIMATE);
  }
  PlanSet(const PlanSet&) = delete;
  PlanSet& operator=(const PlanSet&) = delete;
  ~PlanSet() {
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_destroy_plan(c2c_backward);
  }
};

const PlanSet& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<PlanSet>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<PlanSet>(n);
  return *slot;
}

void require_same_grid(const ScalarField& u, const ScalarField& v) {
  if (!(u.grid() == v.grid())) {
    throw InvalidInput(fmt::format("grid mismatch: n={} vs n={}", u.grid().n(),
                                   v.grid().n()));
  }
}

// Multiplies the half spectrum of u by symbol(k1, k2) and transforms back.
template <typename Symbol>
ScalarField apply_multiplier(const ScalarField& u, Symbol symbol) {
  const int n = u.grid().n();
  const int nh = n / 2 + 1;
  const std::size_t full = u.size();
  const auto& plans = plans_for(n);

  auto real = alloc_real(full);
  auto spec = alloc_complex(static_cast<std::size_t>(n) * nh);
  std::copy(u.values().begin(), u.values().end(), real.get());
  fftw_execute_dft_r2c(plans.r2c, real.get(), spec.get());

  const double scale = 1.0 / static_cast<double>(full);
  for (int j = 0; j < n; ++j) {
    const int k2 = spectral::wavenumber(j, n);
    for (int i = 0; i < nh; ++i) {
      const int k1 = spectral::wavenumber(i, n);
      const double s = symbol(k1, k2) * scale;
      auto& c = spec[static_cast<std::size_t>(j) * nh + i];
      c[0] *= s;
      c[1] *= s;
    }
  }
  fftw_execute_dft_c2r(plans.c2r, spec.get(), real.get());

  ScalarField out(u.grid());
  std::copy(real.get(), real.get() + full, out.values().begin());
  return out;
}

double ksq(int k1, int k2) {
  return static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
}

}  // namespace

Point::Point(double x, double y) : x_(reduce_unit(x)), y_(reduce_unit(y)) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw InvalidInput("point coordinates must be finite");
  }
}

double torus_distance(const Point& p, const Point& q) {
  double dx = std::abs(p.x() - q.x());
  double dy = std::abs(p.y() - q.y());
  dx = std::min(dx, 1.0 - dx);
  dy = std::min(dy, 1.0 - dy);
  return std::hypot(dx, dy);
}

TorusGrid::TorusGrid(int n) : n_(n) {
  if (n < 32 || (n & (n - 1)) != 0) {
    throw InvalidInput(
        fmt::format("grid_n must be a power of two and at least 32 (got {})", n));
  }
}

Point TorusGrid::node(std::size_t idx) const {
  const auto n = static_cast<std::size_t>(n_);
  return node(static_cast<int>(idx % n), static_cast<int>(idx / n));
}

Point TorusGrid::node(int i, int j) const {
  const double h = spacing();
  return Point((i + 0.5) * h, (j + 0.5) * h);
}

ScalarField::ScalarField(TorusGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(TorusGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidInput(fmt::format("field has {} values, grid needs {}",
                                   values_.size(), grid_.size()));
  }
  if (!all_finite()) throw InvalidInput("field contains non-finite values");
}

ScalarField ScalarField::constant(TorusGrid grid, double c) {
  return ScalarField(grid, std::vector<double>(grid.size(), c));
}

ScalarField ScalarField::sample(TorusGrid grid,
                                const std::function<double(const Point&)>& f) {
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(grid.node(k));
  return ScalarField(grid, std::move(v));
}

double ScalarField::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

double ScalarField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}

double ScalarField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  return axpy(1.0, other);
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  return axpy(-1.0, other);
}

ScalarField& ScalarField::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double c) {
  for (auto& v : values_) v += c;
  return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * other.values_[k];
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

double integrate(const ScalarField& u) {
  const auto v = u.values();
  return u.grid().cell_area() * std::accumulate(v.begin(), v.end(), 0.0);
}

ScalarField laplacian(const ScalarField& u) {
  return apply_multiplier(u, [](int k1, int k2) { return -kFourPiSq * ksq(k1, k2); });
}

ScalarField inv_laplacian_zero_mean(const ScalarField& f) {
  return apply_multiplier(f, [](int k1, int k2) {
    const double k = ksq(k1, k2);
    return k == 0.0 ? 0.0 : 1.0 / (kFourPiSq * k);
  });
}

double dirichlet_inner(const ScalarField& u, const ScalarField& v) {
  require_same_grid(u, v);
  if (&u == &v) {
    const auto s = spectral::forward(u);
    return spectral::dirichlet_pairing(s, s);
  }
  return spectral::dirichlet_pairing(spectral::forward(u), spectral::forward(v));
}

double h_minus_1_norm(const ScalarField& r) {
  const auto s = spectral::forward(r);
  const int n = r.grid().n();
  const int nh = n / 2 + 1;
  const auto c = s.coeffs();
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const int k2 = spectral::wavenumber(j, n);
    for (int i = 0; i < nh; ++i) {
      const int k1 = spectral::wavenumber(i, n);
      const double k = ksq(k1, k2);
      if (k == 0.0) continue;
      const double weight = (i == 0 || i == n / 2) ? 1.0 : 2.0;
      sum += weight * std::norm(c[static_cast<std::size_t>(j) * nh + i]) / (kFourPiSq * k);
    }
  }
  const double nn = static_cast<double>(r.size());
  return std::sqrt(sum / (nn * nn));
}

ScalarField green_function(const TorusGrid& grid, const Point& p) {
  const int n = grid.n();
  const std::size_t full = grid.size();
  const auto& plans = plans_for(n);
  auto buf = alloc_complex(full);

  // Node (i, j) = x0 + (i, j) h, so exp(2 pi i k.(x - p)) factors into a
  // fixed phase exp(2 pi i k.(x0 - p)) times the inverse DFT kernel.
  const double h = grid.spacing();
  const double ox = 0.5 * h - p.x();
  const double oy = 0.5 * h - p.y();
  for (int j = 0; j < n; ++j) {
    const int k2 = spectral::wavenumber(j, n);
    for (int i = 0; i < n; ++i) {
      const int k1 = spectral::wavenumber(i, n);
      auto& c = buf[static_cast<std::size_t>(j) * n + i];
      const double k = ksq(k1, k2);
      if (k == 0.0) {
        c[0] = c[1] = 0.0;
        continue;
      }
      const double phase = kTwoPi * (k1 * ox + k2 * oy);
      const double amp = 1.0 / (kFourPiSq * k);
      c[0] = amp * std::cos(phase);
      c[1] = amp * std::sin(phase);
    }
  }
  fftw_execute_dft(plans.c2c_backward, buf.get(), buf.get());

  ScalarField g(grid);
  for (std::size_t k = 0; k < full; ++k) g[k] = buf[k][0];
  return g;
}

namespace spectral {

Spectrum::Spectrum(TorusGrid grid, std::vector<std::complex<double>> coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {}

Spectrum forward(const ScalarField& u) {
  const int n = u.grid().n();
  const std::size_t half = static_cast<std::size_t>(n) * (n / 2 + 1);
  const auto& plans = plans_for(n);
  auto real = alloc_real(u.size());
  auto spec = alloc_complex(half);
  std::copy(u.values().begin(), u.values().end(), real.get());
  fftw_execute_dft_r2c(plans.r2c, real.get(), spec.get());
  std::vector<std::complex<double>> coeffs(half);
  for (std::size_t k = 0; k < half; ++k) coeffs[k] = {spec[k][0], spec[k][1]};
  return Spectrum(u.grid(), std::move(coeffs));
}

double dirichlet_pairing(const Spectrum& u, const Spectrum& v) {
  if (!(u.grid() == v.grid())) throw InvalidInput("grid mismatch in Dirichlet pairing");
  const int n = u.grid().n();
  const int nh = n / 2 + 1;
  const auto a = u.coeffs();
  const auto b = v.coeffs();
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const int k2 = wavenumber(j, n);
    for (int i = 0; i < nh; ++i) {
      const int k1 = wavenumber(i, n);
      const double k = ksq(k1, k2);
      if (k == 0.0) continue;
      // columns i = 0 and i = n/2 are their own conjugate partners
      const double weight = (i == 0 || i == n / 2) ? 1.0 : 2.0;
      const std::size_t idx = static_cast<std::size_t>(j) * nh + i;
      sum += weight * k * (a[idx].real() * b[idx].real() + a[idx].imag() * b[idx].imag());
    }
  }
  const double nn = static_cast<double>(u.grid().size());
  return kFourPiSq * sum / (nn * nn);
}

}  // namespace spectral

}  // namespace liouville
