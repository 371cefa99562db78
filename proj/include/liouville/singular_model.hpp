#pragma once

// Problem data of a singular Liouville system: the coupling matrix, the
// conical sources (p_m, alpha_im) and the smooth weights h_i, together with
// the singular weights h~_i = h_i exp(-4 pi sum_m alpha_im G_{p_m}).

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "liouville/torus.hpp"

namespace liouville {

inline constexpr int kMaxComponents = 16;

/// Symmetric positive definite N x N matrix with its inverse, 1 <= N <= 16.
class CouplingMatrix {
 public:
  explicit CouplingMatrix(Eigen::MatrixXd a);
  static CouplingMatrix from_rows(const std::vector<std::vector<double>>& rows);

  int size() const { return static_cast<int>(a_.rows()); }
  double operator()(int i, int j) const { return a_(i, j); }
  double inverse(int i, int j) const { return a_inv_(i, j); }
  const Eigen::MatrixXd& matrix() const { return a_; }
  const Eigen::MatrixXd& inverse() const { return a_inv_; }
  double min_eigenvalue() const { return min_eig_; }
  /// Maximum absolute row sum.
  double inf_norm() const;
  /// a_ij <= 0 for every i != j.
  bool off_diagonal_nonpositive() const;

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd a_inv_;
  double min_eig_;
};

struct SingularSource {
  Point p;
  std::vector<double> alpha;  // one coefficient per component, each > -1
};

/// Builds h~_i nodewise. Throws NumericFailure naming the dominant source if
/// an exponent exceeds 700.
std::vector<ScalarField> build_tilde_h(const TorusGrid& grid,
                                       const std::vector<SingularSource>& sources,
                                       const std::vector<ScalarField>& h);

/// Immutable after construction; h~ is computed once and cached.
class SingularModel {
 public:
  /// `h` empty means h_i = 1 for every component.
  SingularModel(TorusGrid grid, CouplingMatrix a, std::vector<SingularSource> sources,
                std::vector<ScalarField> h = {});

  const TorusGrid& grid() const { return grid_; }
  const CouplingMatrix& coupling() const { return a_; }
  int components() const { return a_.size(); }
  const std::vector<SingularSource>& sources() const { return sources_; }
  const ScalarField& h(int i) const { return h_.at(i); }
  const ScalarField& tilde_h(int i) const { return tilde_h_.at(i); }
  const std::vector<ScalarField>& tilde_h() const { return tilde_h_; }

  /// alpha_im if x is source m (torus distance < 1e-12), else 0.
  double alpha_at(int i, const Point& x) const;
  /// min{0, min_m alpha_im}.
  double tilde_alpha(int i) const;
  /// Largest |alpha_im| over all components and sources (0 without sources).
  double max_abs_alpha() const;

 private:
  TorusGrid grid_;
  CouplingMatrix a_;
  std::vector<SingularSource> sources_;
  std::vector<ScalarField> h_;
  std::vector<ScalarField> tilde_h_;
};

}  // namespace liouville
