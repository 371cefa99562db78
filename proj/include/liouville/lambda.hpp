#pragma once

// Coercivity criterion for J_rho: the quadratic forms
//   Lambda_{I,x}(rho) = 8 pi sum_{i in I} (1 + alpha_i(x)) rho_i - sum_{i,j in I} a_ij rho_i rho_j
// and their minimum over nonempty subsets I and points x.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liouville/singular_model.hpp"

namespace liouville {

/// Strictly positive parameter vector.
class RhoVector {
 public:
  explicit RhoVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  RhoVector scaled(double t) const;

 private:
  std::vector<double> values_;
};

/// Nonempty-or-empty subset of component indices {0..N-1}, stored as a bitmask.
class Subset {
 public:
  constexpr Subset() = default;
  constexpr explicit Subset(std::uint32_t mask) : mask_(mask) {}
  static Subset full(int n) { return Subset(n >= 32 ? ~0u : ((1u << n) - 1u)); }
  static Subset of(std::initializer_list<int> members);

  std::uint32_t mask() const { return mask_; }
  bool contains(int i) const { return (mask_ >> i) & 1u; }
  bool empty() const { return mask_ == 0; }
  int size() const;
  std::vector<int> members() const;
  /// One-based display form, e.g. "{1,2}".
  std::string to_string() const;

  friend bool operator==(Subset, Subset) = default;

 private:
  std::uint32_t mask_ = 0;
};

/// All nonempty subsets of {0..n-1} ordered by cardinality, then lexicographically.
std::vector<Subset> ordered_subsets(int n);

enum class Coercivity { coercive, critical, unbounded };
std::string to_string(Coercivity c);

struct SubsetEntry {
  Subset subset;
  std::optional<std::size_t> source;  // nullopt: generic point (all alpha_i = 0)
  double value;
};

struct LambdaReport {
  double lambda = 0.0;
  Subset argmin_subset;
  std::optional<std::size_t> argmin_source;  // nullopt: generic point
  Coercivity classification = Coercivity::critical;
  double tolerance = 0.0;  // width of the critical band
  std::vector<SubsetEntry> table;  // filled only on request
};

/// Lambda_{I,x} evaluated with the coefficient vector alpha(x) given explicitly.
/// `values` need not be positive (concentration values may vanish).
double lambda_quadratic(const CouplingMatrix& a, std::span<const double> alpha_x,
                        std::span<const double> values, Subset subset);

/// Lambda_{I,x}(values); alpha_i(x) taken from the model's sources.
double lambda_subset_at(const SingularModel& model, std::span<const double> values,
                        Subset subset, const Point& x);
double lambda_subset_at(const SingularModel& model, const RhoVector& rho, Subset subset,
                        const Point& x);

/// Critical-band half-width 1e-9 (1 + |A|_inf |rho|^2 + 8 pi (1 + max|alpha|) |rho|_1).
double lambda_tolerance(const SingularModel& model, const RhoVector& rho);

/// Minimum over all nonempty subsets and the candidate points {p_1..p_M, generic}.
/// Ties go to the smaller subset, then the lexicographically first, then the
/// lower source index (generic last).
LambdaReport lambda_min(const SingularModel& model, const RhoVector& rho,
                        bool with_table = false);

/// (8 pi (1 + alpha~_i) / a_ii)_i. Requires a_ij <= 0 off the diagonal.
RhoVector rho_critical(const SingularModel& model);

/// One report per rho, in input order.
std::vector<LambdaReport> classify_region_sweep(const SingularModel& model,
                                                const std::vector<RhoVector>& rho_grid);

}  // namespace liouville
