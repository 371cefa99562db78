#include "liouville/energy.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "liouville/error.hpp"

namespace liouville {

namespace {

void check_shapes(const SingularModel& model, const RhoVector& rho, const SystemField& u) {
  const int n = model.components();
  if (u.components() != n || static_cast<int>(rho.size()) != n) {
    throw InvalidInput(fmt::format("expected {} components (field has {}, rho has {})", n,
                                   u.components(), rho.size()));
  }
  if (!(u.grid() == model.grid())) throw InvalidInput("field and model live on different grids");
}

// h~ e^{u - log mass}, i.e. the density normalised to unit integral.
ScalarField normalized_density(const ScalarField& tilde_h, const ScalarField& u, double log_m) {
  ScalarField out(u.grid());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = tilde_h[k] * std::exp(u[k] - log_m);
  return out;
}

}  // namespace

SystemField::SystemField(std::vector<ScalarField> components) : comps_(std::move(components)) {
  if (comps_.empty()) throw InvalidInput("system field needs at least one component");
  for (const auto& c : comps_) {
    if (!(c.grid() == comps_.front().grid())) {
      throw InvalidInput("system field components live on different grids");
    }
  }
}

SystemField SystemField::zero(const TorusGrid& grid, int components) {
  return SystemField(std::vector<ScalarField>(components, ScalarField(grid)));
}

bool SystemField::all_finite() const {
  return std::all_of(comps_.begin(), comps_.end(),
                     [](const ScalarField& c) { return c.all_finite(); });
}

SystemField& SystemField::axpy(double s, const SystemField& other) {
  if (other.components() != components()) throw InvalidInput("component count mismatch");
  for (int i = 0; i < components(); ++i) comps_[i].axpy(s, other.comps_[i]);
  return *this;
}

SystemField& SystemField::remove_means() {
  for (auto& c : comps_) c += -c.mean();
  return *this;
}

double log_mass(const ScalarField& tilde_h, const ScalarField& u) {
  const double s = u.max();
  double acc = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) acc += tilde_h[k] * std::exp(u[k] - s);
  const double shifted = acc * u.grid().cell_area();
  const double lm = s + std::log(shifted);
  if (!std::isfinite(lm) || !(shifted > 0.0)) {
    throw NumericFailure("non-finite mass: the field is corrupt");
  }
  return lm;
}

EnergyReport evaluate_J(const SingularModel& model, const RhoVector& rho, const SystemField& u) {
  check_shapes(model, rho, u);
  const int n = model.components();
  const auto& a = model.coupling();

  std::vector<spectral::Spectrum> spectra;
  spectra.reserve(n);
  for (int i = 0; i < n; ++i) spectra.push_back(spectral::forward(u[i]));

  EnergyReport rep;
  double dir = 0.0;
  for (int i = 0; i < n; ++i) {
    dir += a.inverse(i, i) * spectral::dirichlet_pairing(spectra[i], spectra[i]);
    for (int j = i + 1; j < n; ++j) {
      dir += 2.0 * a.inverse(i, j) * spectral::dirichlet_pairing(spectra[i], spectra[j]);
    }
  }
  rep.dirichlet_part = 0.5 * dir;

  double entropy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lm = log_mass(model.tilde_h(i), u[i]);
    rep.log_masses.push_back(lm);
    rep.masses.push_back(std::exp(lm));
    rep.entropy_parts.push_back(rho[i] * (lm - u[i].mean()));
    entropy += rep.entropy_parts.back();
  }
  rep.J = rep.dirichlet_part - entropy;
  if (!std::isfinite(rep.J)) throw NumericFailure("energy evaluated to a non-finite value");
  return rep;
}

SystemField l2_gradient(const SingularModel& model, const RhoVector& rho, const SystemField& u) {
  check_shapes(model, rho, u);
  const int n = model.components();
  const auto& a = model.coupling();
  std::vector<ScalarField> stiff;
  stiff.reserve(n);
  for (int j = 0; j < n; ++j) stiff.push_back(-1.0 * laplacian(u[j]));

  std::vector<ScalarField> g;
  g.reserve(n);
  for (int i = 0; i < n; ++i) {
    ScalarField gi(u.grid());
    for (int j = 0; j < n; ++j) gi.axpy(a.inverse(i, j), stiff[j]);
    const double lm = log_mass(model.tilde_h(i), u[i]);
    const ScalarField dens = normalized_density(model.tilde_h(i), u[i], lm);
    for (std::size_t k = 0; k < gi.size(); ++k) gi[k] -= rho[i] * (dens[k] - 1.0);
    g.push_back(std::move(gi));
  }
  return SystemField(std::move(g));
}

SystemField el_residual(const SingularModel& model, const RhoVector& rho, const SystemField& u) {
  check_shapes(model, rho, u);
  const int n = model.components();
  const auto& a = model.coupling();
  std::vector<ScalarField> source;
  source.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double lm = log_mass(model.tilde_h(j), u[j]);
    ScalarField s = normalized_density(model.tilde_h(j), u[j], lm);
    s += -1.0;
    s *= rho[j];
    source.push_back(std::move(s));
  }
  std::vector<ScalarField> r;
  r.reserve(n);
  for (int i = 0; i < n; ++i) {
    ScalarField ri = -1.0 * laplacian(u[i]);
    for (int j = 0; j < n; ++j) ri.axpy(-a(i, j), source[j]);
    r.push_back(std::move(ri));
  }
  return SystemField(std::move(r));
}

ResidualNorms residual_norms(const SystemField& r) {
  ResidualNorms out;
  double l2sq = 0.0;
  double hsq = 0.0;
  for (int i = 0; i < r.components(); ++i) {
    for (double v : r[i].values()) {
      l2sq += v * v;
      out.linf = std::max(out.linf, std::abs(v));
    }
    const double h = h_minus_1_norm(r[i]);
    hsq += h * h;
  }
  out.l2 = std::sqrt(l2sq * r.grid().cell_area());
  out.h_minus_1 = std::sqrt(hsq);
  return out;
}

SystemField normalize_v(const SingularModel& model, const RhoVector& rho, const SystemField& u) {
  check_shapes(model, rho, u);
  SystemField v = u;
  for (int i = 0; i < model.components(); ++i) {
    v[i] += std::log(rho[i]) - log_mass(model.tilde_h(i), u[i]);
  }
  return v;
}

}  // namespace liouville
