#include "liouville/singular_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "liouville/error.hpp"

namespace liouville {

namespace {

constexpr double kCoincidence = 1e-12;
constexpr double kMaxExponent = 700.0;

}  // namespace

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd a) : a_(std::move(a)) {
  const auto n = a_.rows();
  if (n < 1 || n > kMaxComponents || a_.cols() != n) {
    throw InvalidInput(fmt::format(
        "coupling matrix must be square with 1 <= N <= {} (got {}x{})", kMaxComponents,
        a_.rows(), a_.cols()));
  }
  if (!a_.allFinite()) throw InvalidInput("coupling matrix has non-finite entries");
  const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(a_(i, j) - a_(j, i)) > 1e-12 * scale) {
        throw InvalidInput(fmt::format("coupling matrix is not symmetric: a[{}][{}]={} vs a[{}][{}]={}",
                                       i + 1, j + 1, a_(i, j), j + 1, i + 1, a_(j, i)));
      }
    }
  }
  a_ = 0.5 * (a_ + a_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a_, Eigen::EigenvaluesOnly);
  min_eig_ = eig.eigenvalues().minCoeff();
  if (!(min_eig_ > 0.0)) {
    throw InvalidInput(fmt::format(
        "coupling matrix is not positive definite (smallest eigenvalue {:.6g})", min_eig_));
  }
  a_inv_ = a_.llt().solve(Eigen::MatrixXd::Identity(n, n));
  const double err = (a_ * a_inv_ - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (err > 1e-10) {
    throw InvalidInput(fmt::format("coupling matrix is too ill-conditioned (|A A^-1 - I| = {:.3g})", err));
  }
}

CouplingMatrix CouplingMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) {
      throw InvalidInput(fmt::format("coupling matrix row {} has {} entries, expected {}",
                                     i + 1, rows[i].size(), n));
    }
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rows[i][j];
  }
  return CouplingMatrix(std::move(a));
}

double CouplingMatrix::inf_norm() const {
  return a_.cwiseAbs().rowwise().sum().maxCoeff();
}

bool CouplingMatrix::off_diagonal_nonpositive() const {
  for (Eigen::Index i = 0; i < a_.rows(); ++i)
    for (Eigen::Index j = 0; j < a_.cols(); ++j)
      if (i != j && a_(i, j) > 0.0) return false;
  return true;
}

std::vector<ScalarField> build_tilde_h(const TorusGrid& grid,
                                       const std::vector<SingularSource>& sources,
                                       const std::vector<ScalarField>& h) {
  std::vector<ScalarField> greens;
  greens.reserve(sources.size());
  for (const auto& s : sources) greens.push_back(green_function(grid, s.p));

  std::vector<ScalarField> out;
  out.reserve(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    ScalarField th(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double exponent = 0.0;
      double worst = 0.0;
      std::size_t worst_m = 0;
      for (std::size_t m = 0; m < sources.size(); ++m) {
        const double term = -4.0 * std::numbers::pi * sources[m].alpha[i] * greens[m][k];
        exponent += term;
        if (term > worst) {
          worst = term;
          worst_m = m;
        }
      }
      if (exponent > kMaxExponent) {
        throw NumericFailure(fmt::format(
            "singular weight overflow for component {}: exponent {:.4g} at node ({:.6g}, {:.6g}); "
            "dominant source {} at ({:.6g}, {:.6g})",
            i + 1, exponent, grid.node(k).x(), grid.node(k).y(), worst_m + 1,
            sources[worst_m].p.x(), sources[worst_m].p.y()));
      }
      th[k] = h[i][k] * std::exp(exponent);
    }
    out.push_back(std::move(th));
  }
  return out;
}

SingularModel::SingularModel(TorusGrid grid, CouplingMatrix a,
                             std::vector<SingularSource> sources, std::vector<ScalarField> h)
    : grid_(grid), a_(std::move(a)), sources_(std::move(sources)), h_(std::move(h)) {
  const int n = a_.size();
  for (std::size_t m = 0; m < sources_.size(); ++m) {
    const auto& s = sources_[m];
    if (static_cast<int>(s.alpha.size()) != n) {
      throw InvalidInput(fmt::format("source {} has {} alpha coefficients, expected {}", m + 1,
                                     s.alpha.size(), n));
    }
    for (int i = 0; i < n; ++i) {
      if (!(s.alpha[i] > -1.0) || !std::isfinite(s.alpha[i])) {
        throw InvalidInput(fmt::format("source {} alpha[{}] = {} must be finite and > -1", m + 1,
                                       i + 1, s.alpha[i]));
      }
    }
    for (std::size_t q = 0; q < m; ++q) {
      if (torus_distance(s.p, sources_[q].p) < kCoincidence) {
        throw InvalidInput(fmt::format("sources {} and {} coincide", q + 1, m + 1));
      }
    }
  }
  if (h_.empty()) {
    h_.assign(n, ScalarField::constant(grid_, 1.0));
  }
  if (static_cast<int>(h_.size()) != n) {
    throw InvalidInput(fmt::format("expected {} weight fields h_i, got {}", n, h_.size()));
  }
  for (int i = 0; i < n; ++i) {
    if (!(h_[i].grid() == grid_)) throw InvalidInput("weight field h_i lives on a different grid");
    if (!(h_[i].min() > 0.0) || !h_[i].all_finite()) {
      throw InvalidInput(fmt::format("weight field h_{} must be finite and positive", i + 1));
    }
  }
  tilde_h_ = build_tilde_h(grid_, sources_, h_);
}

double SingularModel::alpha_at(int i, const Point& x) const {
  for (const auto& s : sources_) {
    if (torus_distance(s.p, x) < kCoincidence) return s.alpha.at(i);
  }
  return 0.0;
}

double SingularModel::tilde_alpha(int i) const {
  double t = 0.0;
  for (const auto& s : sources_) t = std::min(t, s.alpha.at(i));
  return t;
}

double SingularModel::max_abs_alpha() const {
  double m = 0.0;
  for (const auto& s : sources_)
    for (double a : s.alpha) m = std::max(m, std::abs(a));
  return m;
}

}  // namespace liouville
