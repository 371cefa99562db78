#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "liouville/blowup.hpp"
#include "liouville/error.hpp"
#include "liouville/minimizer.hpp"
#include "support.hpp"

using namespace liouville;
using testing::kPi;

namespace {

SingularModel scalar_source(int n, double alpha = -0.5) {
  return SingularModel(TorusGrid(n), CouplingMatrix::from_rows({{1.0}}), {{{0.5, 0.5}, {alpha}}});
}

double total_dirichlet(const SystemField& u) {
  double s = 0.0;
  for (int i = 0; i < u.components(); ++i) s += dirichlet_inner(u[i], u[i]);
  return s;
}

void check_trace(const MinimizeResult& r) {
  for (std::size_t k = 1; k < r.J_trace.size(); ++k) CHECK(r.J_trace[k] <= r.J_trace[k - 1]);
  for (int i = 0; i < r.u_star.components(); ++i) CHECK(std::abs(r.u_star[i].mean()) < 1e-12);
}

}  // namespace

TEST_CASE("solver options are validated") {
  SolverOptions o;
  CHECK_NOTHROW(o.validate());
  o.backtrack_factor = 1.0;
  CHECK_THROWS_AS(o.validate(), InvalidInput);
  o = {};
  o.armijo_c = 0.0;
  CHECK_THROWS_AS(o.validate(), InvalidInput);
  o = {};
  o.tol_h_minus_1 = -1.0;
  CHECK_THROWS_AS(o.validate(), InvalidInput);
  o = {};
  o.max_iters = -1;
  CHECK_THROWS_AS(o.validate(), InvalidInput);
}

TEST_CASE("regular scalar case: zero is the minimiser") {
  SingularModel m(TorusGrid(64), CouplingMatrix::from_rows({{1.0}}), {});
  auto r = minimize(m, RhoVector({0.9 * 8 * kPi}));
  CHECK(r.converged);
  CHECK(r.status == SolverStatus::converged);
  CHECK(std::abs(r.energy_report.J) < 1e-14);
  CHECK(r.residual_h_minus_1 < 1e-14);
}

TEST_CASE("singular scalar case: certified minimiser, independent of the start") {
  auto m = scalar_source(128);
  const RhoVector rho({0.5 * 4 * kPi});
  auto r0 = minimize(m, rho);
  REQUIRE(r0.converged);
  check_trace(r0);
  CHECK(residual_norms(el_residual(m, rho, r0.u_star)).h_minus_1 <= 1e-8);
  CHECK(r0.J_trace.back() == doctest::Approx(r0.energy_report.J).epsilon(1e-12));

  for (std::uint64_t seed : {1u, 2u}) {
    auto r = minimize(m, rho, random_smooth_init(m.grid(), 1, seed));
    REQUIRE(r.converged);
    check_trace(r);
    CHECK(residual_norms(el_residual(m, rho, r.u_star)).h_minus_1 <= 1e-8);
    CHECK(std::abs(r.energy_report.J - r0.energy_report.J) < 1e-6);
  }
}

TEST_CASE("random smooth init is band limited with unit H1 norm") {
  TorusGrid g(64);
  auto u = random_smooth_init(g, 2, 9);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(u[i].mean()) < 1e-14);
    double l2 = 0.0;
    for (double v : u[i].values()) l2 += v * v;
    l2 *= g.cell_area();
    CHECK(dirichlet_inner(u[i], u[i]) + l2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto again = random_smooth_init(g, 2, 9);
  CHECK(std::equal(u[1].values().begin(), u[1].values().end(), again[1].values().begin()));
}

TEST_CASE("Toda system below the threshold is grid stable") {
  auto run = [](int n) {
    SingularModel m(TorusGrid(n), CouplingMatrix::from_rows({{2, -1}, {-1, 2}}), {});
    auto init = random_smooth_init(m.grid(), 2, 3);
    auto r = minimize(m, RhoVector({0.9 * 4 * kPi, 0.9 * 4 * kPi}), init);
    CHECK(r.converged);
    check_trace(r);
    return r.energy_report.J;
  };
  const double j128 = run(128), j256 = run(256);
  CHECK(std::abs(j128 - j256) < 1e-4);
}

TEST_CASE("coercivity witnesses") {
  auto m = scalar_source(64);
  const RhoVector rho({0.7 * 4 * kPi});

  // Final Dirichlet energy barely depends on the start.
  std::vector<double> dir;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto init = random_smooth_init(m.grid(), 1, seed);
    init[0] *= 3.0;
    auto r = minimize(m, rho, init);
    REQUIRE(r.converged);
    dir.push_back(total_dirichlet(r.u_star));
  }
  const auto [lo, hi] = std::minmax_element(dir.begin(), dir.end());
  CHECK(*hi - *lo < 0.1 * *hi);

  // J grows at least linearly with the Dirichlet energy along rays.
  std::vector<double> d, j;
  auto w = random_smooth_init(m.grid(), 1, 77);
  for (int s = 1; s <= 10; ++s) {
    SystemField u = w;
    u[0] *= 2.0 * s;
    d.push_back(total_dirichlet(u));
    j.push_back(evaluate_J(m, rho, u).J);
  }
  CHECK(fit_line(d, j).slope > 0.0);
}

TEST_CASE("negative Lambda is tagged as expected unboundedness") {
  SingularModel m(TorusGrid(64), CouplingMatrix::from_rows({{1.0}}), {});
  SolverOptions o;
  o.max_iters = 200;
  auto r = minimize(m, RhoVector({1.5 * 8 * kPi}), random_smooth_init(m.grid(), 1, 5), o);
  CHECK(r.status == SolverStatus::expected_unboundedness);
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.note.empty());
  check_trace(r);
}

TEST_CASE("continuation") {
  auto m = scalar_source(64);
  const double rho0 = 4 * kPi;
  SolverOptions o;

  auto single = continuation(m, {RhoVector({0.5 * rho0})}, o);
  REQUIRE(single.size() == 1);
  REQUIRE(single[0].result.has_value());
  auto direct = minimize(m, RhoVector({0.5 * rho0}), o);
  CHECK(single[0].result->energy_report.J == direct.energy_report.J);

  CHECK_THROWS_AS(continuation(m, {RhoVector({2.0}), RhoVector({2.0})}, o), InvalidInput);

  std::vector<RhoVector> seq;
  for (int k = 1; k <= 8; ++k) seq.push_back(RhoVector({(1 - std::ldexp(1.0, -k)) * rho0}));
  auto steps = continuation(m, seq, o);
  int warm_iters = 0, cold_iters = 0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    REQUIRE(steps[k].result.has_value());
    CHECK(steps[k].result->converged);
    CHECK(std::isfinite(steps[k].result->energy_report.J));
    if (k > 0) CHECK(steps[k].result->energy_report.J <= steps[k - 1].result->energy_report.J + 1e-12);
    warm_iters += steps[k].result->iterations;
    cold_iters += minimize(m, seq[k], o).iterations;
  }
  CHECK(warm_iters < cold_iters);
}
