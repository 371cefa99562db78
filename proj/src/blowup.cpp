#include "liouville/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "liouville/error.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStabilization = 0.02;
constexpr double kNormalizationTol = 1e-8;

}  // namespace

double max_resolved_lambda(const TorusGrid& grid) { return grid.n() / 8.0; }

void check_resolution(const TorusGrid& grid, double lambda) {
  if (!(lambda > 0.0) || lambda > max_resolved_lambda(grid)) {
    throw InvalidInput(fmt::format("lambda = {} violates the resolution rule 0 < lambda <= n/8 = {}",
                                   lambda, max_resolved_lambda(grid)));
  }
}

ScalarField phi_component(const TorusGrid& grid, const Point& x, double lambda, double alpha_x) {
  check_resolution(grid, lambda);
  const double coef = -2.0 * (1.0 + alpha_x);
  return ScalarField::sample(grid, [&](const Point& p) {
    return coef * std::log(std::max(1.0, lambda * torus_distance(p, x)));
  });
}

SlopeFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidInput("line fit needs at least two (x, y) pairs");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("line fit needs distinct abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t k = 0; k < x.size(); ++k) {
    fit.max_deviation =
        std::max(fit.max_deviation, std::abs(y[k] - (fit.slope * x[k] + fit.intercept)));
  }
  return fit;
}

PhiAsymptotics phi_asymptotics_check(const TorusGrid& grid, const Point& x, double alpha_i,
                                     double alpha_j, std::span<const double> lambdas) {
  if (lambdas.size() < 3) throw InvalidInput("phi asymptotics need at least three lambda values");
  PhiAsymptotics out;
  std::vector<double> logs;
  for (double lambda : lambdas) {
    check_resolution(grid, lambda);
    const ScalarField pi = phi_component(grid, x, lambda, alpha_i);
    const ScalarField pj = phi_component(grid, x, lambda, alpha_j);
    out.lambdas.push_back(lambda);
    logs.push_back(std::log(lambda));
    out.dirichlet.push_back(dirichlet_inner(pi, pj));
    out.mean_i.push_back(integrate(pi));
    out.mean_j.push_back(integrate(pj));
  }
  out.dirichlet_fit = fit_line(logs, out.dirichlet);
  out.mean_i_fit = fit_line(logs, out.mean_i);
  out.mean_j_fit = fit_line(logs, out.mean_j);
  return out;
}

SystemField combine_test_functions(const SingularModel& model, const Point& x, double lambda,
                                   const std::vector<std::vector<double>>& theta) {
  const int n = model.components();
  if (static_cast<int>(theta.size()) != n) throw InvalidInput("theta must have N rows");
  std::vector<ScalarField> phi;
  phi.reserve(n);
  for (int j = 0; j < n; ++j) {
    phi.push_back(phi_component(model.grid(), x, lambda, model.alpha_at(j, x)));
  }
  std::vector<ScalarField> u;
  u.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(theta[i].size()) != n) throw InvalidInput("theta must be N x N");
    ScalarField ui(model.grid());
    for (int j = 0; j < n; ++j) {
      if (theta[i][j] != 0.0) ui.axpy(theta[i][j], phi[j]);
    }
    u.push_back(std::move(ui));
  }
  return SystemField(std::move(u));
}

SystemField u_lambda_family(const SingularModel& model, const RhoVector& rho, Subset subset,
                            const Point& x, double lambda) {
  const int n = model.components();
  if (subset.empty()) throw InvalidInput("u^lambda needs a nonempty subset");
  if (static_cast<int>(rho.size()) != n) throw InvalidInput("rho dimension mismatch");
  std::vector<std::vector<double>> theta(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!subset.contains(j)) continue;
      theta[i][j] = model.coupling()(i, j) * rho[j] / (4.0 * kPi * (1.0 + model.alpha_at(j, x)));
    }
  }
  return combine_test_functions(model, x, lambda, theta);
}

BlowupSlope blowup_slope(const SingularModel& model, const RhoVector& rho, Subset subset,
                         const Point& x, std::span<const double> lambdas) {
  if (lambdas.size() < 2) throw InvalidInput("blow-up slope needs at least two lambda values");
  for (double lambda : lambdas) check_resolution(model.grid(), lambda);
  BlowupSlope out;
  std::vector<double> logs;
  for (double lambda : lambdas) {
    const SystemField u = u_lambda_family(model, rho, subset, x, lambda);
    out.lambdas.push_back(lambda);
    logs.push_back(std::log(lambda));
    out.energies.push_back(evaluate_J(model, rho, u).J);
  }
  out.fit = fit_line(logs, out.energies);
  out.lambda_ix = lambda_subset_at(model, rho, subset, x);
  out.predicted_slope = out.lambda_ix / (4.0 * kPi);
  return out;
}

Point generic_point(const SingularModel& model) {
  const auto& sources = model.sources();
  if (sources.empty()) return Point(0.5, 0.5);
  const auto& grid = model.grid();
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double d = 1.0;
    for (const auto& s : sources) d = std::min(d, torus_distance(grid.node(k), s.p));
    if (d > best_d) {
      best_d = d;
      best = k;
    }
  }
  return grid.node(best);
}

ConcentrationReport estimate_sigma(const SingularModel& model, const RhoVector& rho,
                                   const SystemField& v, const Point& x,
                                   std::span<const double> radii) {
  const int n = model.components();
  const auto& grid = model.grid();
  if (v.components() != n || static_cast<int>(rho.size()) != n) {
    throw InvalidInput("estimate_sigma: component count mismatch");
  }
  if (radii.empty()) throw InvalidInput("estimate_sigma needs at least one radius");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0 && !(radii[k] < radii[k - 1])) {
      throw InvalidInput("estimate_sigma radii must be strictly decreasing");
    }
  }
  if (radii.back() < 4.0 * grid.spacing()) {
    throw InvalidInput(fmt::format("radius {} is below 4h = {}", radii.back(), 4.0 * grid.spacing()));
  }

  ConcentrationReport rep;
  rep.x = x;
  rep.radii.assign(radii.begin(), radii.end());

  std::vector<double> dist(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) dist[k] = torus_distance(grid.node(k), x);

  const double area = grid.cell_area();
  for (int i = 0; i < n; ++i) {
    const auto& th = model.tilde_h(i);
    std::vector<double> density(grid.size());
    double total = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      density[k] = th[k] * std::exp(v[i][k]);
      total += density[k];
    }
    total *= area;
    if (std::abs(total - rho[i]) > kNormalizationTol * rho[i]) {
      throw InvalidInput(fmt::format(
          "estimate_sigma: component {} is not normalised (mass {} vs rho {})", i + 1, total, rho[i]));
    }
    std::vector<double> masses;
    for (double r : radii) {
      double m = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k)
        if (dist[k] < r) m += density[k];
      masses.push_back(m * area);
    }
    const double smallest = masses.back();
    bool converged = false;
    if (masses.size() >= 2) {
      const double prev = masses[masses.size() - 2];
      converged = prev == 0.0 || std::abs(smallest - prev) < kStabilization * prev;
    }
    rep.masses.push_back(std::move(masses));
    rep.sigma.push_back(smallest);
    rep.sigma_converged.push_back(converged);
  }

  // Thresholds sigma_i^0 and sigma_i'.
  const auto& a = model.coupling();
  double min_alpha_all = 0.0;
  for (const auto& s : model.sources())
    for (double al : s.alpha) min_alpha_all = std::min(min_alpha_all, al);
  for (int i = 0; i < n; ++i) {
    double pos_row = 0.0;
    for (int j = 0; j < n; ++j) pos_row += std::max(0.0, a(i, j));
    rep.sigma_threshold.push_back(4.0 * kPi * std::min(1.0, 1.0 + min_alpha_all) / pos_row);
    double min_alpha_i = 0.0;
    for (const auto& s : model.sources()) min_alpha_i = std::min(min_alpha_i, s.alpha[i]);
    rep.sigma_prime.push_back(4.0 * kPi * std::min(1.0, 1.0 + min_alpha_i) / a(i, i));
  }
  rep.pohozaev_residual = pohozaev_check(model, rep.sigma, x);
  return rep;
}

double pohozaev_check(const SingularModel& model, std::span<const double> sigma, const Point& x) {
  return lambda_subset_at(model, sigma, Subset::full(model.components()), x);
}

std::vector<std::vector<Point>> detect_blowup_set(std::span<const SystemField> fields,
                                                  double threshold) {
  if (fields.size() < 2) throw InvalidInput("blow-up detection needs at least two fields");
  const SystemField& first = fields.front();
  const SystemField& last = fields.back();
  if (first.components() != last.components() || !(first.grid() == last.grid())) {
    throw InvalidInput("blow-up detection: fields differ in shape");
  }
  const auto& grid = last.grid();
  const double merge_radius = 8.0 * grid.spacing();

  // Offsets of all nodes within the merge radius.
  const int n = grid.n();
  const int reach = static_cast<int>(std::floor(merge_radius / grid.spacing()));
  std::vector<std::pair<int, int>> offsets;
  for (int dj = -reach; dj <= reach; ++dj)
    for (int di = -reach; di <= reach; ++di)
      if ((di || dj) && std::hypot(di, dj) * grid.spacing() <= merge_radius) offsets.emplace_back(di, dj);

  std::vector<std::vector<Point>> out;
  for (int i = 0; i < last.components(); ++i) {
    const double level = first[i].max() + threshold;
    std::vector<char> hot(grid.size(), 0);
    for (std::size_t k = 0; k < grid.size(); ++k) hot[k] = last[i][k] > level;

    // Single linkage: hot nodes closer than the merge radius share a cluster,
    // represented by its argmax.
    std::vector<std::pair<double, std::size_t>> peaks;
    std::vector<char> seen(grid.size(), 0);
    for (std::size_t start = 0; start < grid.size(); ++start) {
      if (!hot[start] || seen[start]) continue;
      std::vector<std::size_t> stack{start};
      seen[start] = 1;
      std::size_t best = start;
      while (!stack.empty()) {
        const std::size_t k = stack.back();
        stack.pop_back();
        if (last[i][k] > last[i][best]) best = k;
        const int ki = static_cast<int>(k % n), kj = static_cast<int>(k / n);
        for (auto [di, dj] : offsets) {
          const std::size_t q = grid.index((ki + di + n) % n, (kj + dj + n) % n);
          if (hot[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
      peaks.emplace_back(last[i][best], best);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Point> reps;
    for (const auto& pk : peaks) reps.push_back(grid.node(pk.second));
    out.push_back(std::move(reps));
  }
  return out;
}

ScalarField synthetic_bubble(const TorusGrid& grid, const Point& x, double lambda, double cutoff) {
  auto bubble = [lambda](double d) {
    const double q = 1.0 + lambda * lambda * d * d;
    return 8.0 * lambda * lambda / (q * q);
  };
  const double edge = bubble(cutoff);
  const double floor = 1e-12 * edge;
  return ScalarField::sample(grid, [&](const Point& p) {
    const double d = torus_distance(p, x);
    return std::log(std::max(bubble(d) - edge, 0.0) + floor);
  });
}

}  // namespace liouville
