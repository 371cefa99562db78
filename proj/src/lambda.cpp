#include "liouville/lambda.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "liouville/error.hpp"

namespace liouville {

namespace {

constexpr double kEightPi = 8.0 * std::numbers::pi;

std::vector<double> alpha_vector(const SingularModel& model, std::optional<std::size_t> source) {
  const int n = model.components();
  if (!source) return std::vector<double>(n, 0.0);
  return model.sources().at(*source).alpha;
}

}  // namespace

RhoVector::RhoVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidInput("rho must have at least one component");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
      throw InvalidInput(fmt::format("rho[{}] = {} must be finite and > 0", i + 1, values_[i]));
    }
  }
}

RhoVector RhoVector::scaled(double t) const {
  std::vector<double> v = values_;
  for (auto& x : v) x *= t;
  return RhoVector(std::move(v));
}

Subset Subset::of(std::initializer_list<int> members) {
  std::uint32_t mask = 0;
  for (int i : members) mask |= 1u << i;
  return Subset(mask);
}

int Subset::size() const { return std::popcount(mask_); }

std::vector<int> Subset::members() const {
  std::vector<int> out;
  for (int i = 0; i < 32; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

std::string Subset::to_string() const {
  std::vector<int> one_based = members();
  for (auto& i : one_based) ++i;
  return fmt::format("{{{}}}", fmt::join(one_based, ","));
}

std::vector<Subset> ordered_subsets(int n) {
  if (n < 1 || n > kMaxComponents) {
    throw InvalidInput(fmt::format("subset enumeration needs 1 <= N <= {}", kMaxComponents));
  }
  std::vector<Subset> subsets;
  subsets.reserve((1u << n) - 1u);
  for (std::uint32_t m = 1; m < (1u << n); ++m) subsets.emplace_back(m);
  std::sort(subsets.begin(), subsets.end(), [](Subset a, Subset b) {
    if (a.size() != b.size()) return a.size() < b.size();
    // lexicographic on the sorted member lists
    return a.members() < b.members();
  });
  return subsets;
}

std::string to_string(Coercivity c) {
  switch (c) {
    case Coercivity::coercive:
      return "coercive";
    case Coercivity::critical:
      return "critical";
    case Coercivity::unbounded:
      return "unbounded";
  }
  return "unknown";
}

double lambda_quadratic(const CouplingMatrix& a, std::span<const double> alpha_x,
                        std::span<const double> values, Subset subset) {
  if (subset.empty()) throw InvalidInput("Lambda_{I,x} needs a nonempty subset I");
  const int n = a.size();
  if (static_cast<int>(values.size()) != n || static_cast<int>(alpha_x.size()) != n) {
    throw InvalidInput("Lambda_{I,x}: dimension mismatch");
  }
  double linear = 0.0;
  double quadratic = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!subset.contains(i)) continue;
    linear += (1.0 + alpha_x[i]) * values[i];
    for (int j = 0; j < n; ++j) {
      if (subset.contains(j)) quadratic += a(i, j) * values[i] * values[j];
    }
  }
  return kEightPi * linear - quadratic;
}

double lambda_subset_at(const SingularModel& model, std::span<const double> values,
                        Subset subset, const Point& x) {
  std::vector<double> alpha(model.components());
  for (int i = 0; i < model.components(); ++i) alpha[i] = model.alpha_at(i, x);
  return lambda_quadratic(model.coupling(), alpha, values, subset);
}

double lambda_subset_at(const SingularModel& model, const RhoVector& rho, Subset subset,
                        const Point& x) {
  return lambda_subset_at(model, rho.values(), subset, x);
}

double lambda_tolerance(const SingularModel& model, const RhoVector& rho) {
  double sq = 0.0;
  double l1 = 0.0;
  for (double r : rho.values()) {
    sq += r * r;
    l1 += std::abs(r);
  }
  return 1e-9 * (1.0 + model.coupling().inf_norm() * sq +
                 kEightPi * (1.0 + model.max_abs_alpha()) * l1);
}

LambdaReport lambda_min(const SingularModel& model, const RhoVector& rho, bool with_table) {
  const int n = model.components();
  if (static_cast<int>(rho.size()) != n) {
    throw InvalidInput(fmt::format("rho has {} components, model has {}", rho.size(), n));
  }
  const auto subsets = ordered_subsets(n);
  const std::size_t m = model.sources().size();

  std::vector<std::vector<double>> alphas;
  std::vector<std::optional<std::size_t>> candidates;
  for (std::size_t s = 0; s < m; ++s) {
    candidates.emplace_back(s);
    alphas.push_back(alpha_vector(model, s));
  }
  candidates.emplace_back(std::nullopt);
  alphas.push_back(alpha_vector(model, std::nullopt));

  LambdaReport report;
  bool first = true;
  for (const Subset subset : subsets) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double value = lambda_quadratic(model.coupling(), alphas[c], rho.values(), subset);
      if (with_table) report.table.push_back({subset, candidates[c], value});
      if (first || value < report.lambda) {
        report.lambda = value;
        report.argmin_subset = subset;
        report.argmin_source = candidates[c];
        first = false;
      }
    }
  }
  report.tolerance = lambda_tolerance(model, rho);
  if (report.lambda > report.tolerance) {
    report.classification = Coercivity::coercive;
  } else if (report.lambda < -report.tolerance) {
    report.classification = Coercivity::unbounded;
  } else {
    report.classification = Coercivity::critical;
  }
  return report;
}

RhoVector rho_critical(const SingularModel& model) {
  const auto& a = model.coupling();
  const int n = a.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && a(i, j) > 0.0) {
        throw InvalidInput(fmt::format(
            "critical vector needs a_ij <= 0 off the diagonal; a[{}][{}] = {}", i + 1, j + 1,
            a(i, j)));
      }
    }
  }
  std::vector<double> rho(n);
  for (int i = 0; i < n; ++i) rho[i] = kEightPi * (1.0 + model.tilde_alpha(i)) / a(i, i);
  return RhoVector(std::move(rho));
}

std::vector<LambdaReport> classify_region_sweep(const SingularModel& model,
                                                const std::vector<RhoVector>& rho_grid) {
  std::vector<LambdaReport> out;
  out.reserve(rho_grid.size());
  for (const auto& rho : rho_grid) out.push_back(lambda_min(model, rho));
  return out;
}

}  // namespace liouville
