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

SingularModel scalar(int n, std::vector<SingularSource> src = {}) {
  return SingularModel(TorusGrid(n), CouplingMatrix::from_rows({{1.0}}), std::move(src));
}

SystemField bubble_v(const SingularModel& m, const Point& c, double lambda, double rho) {
  return normalize_v(m, RhoVector({rho}), SystemField({synthetic_bubble(m.grid(), c, lambda)}));
}

}  // namespace

TEST_CASE("resolution rule") {
  TorusGrid g(128);
  CHECK(max_resolved_lambda(g) == 16.0);
  CHECK_NOTHROW(check_resolution(g, 16.0));
  CHECK_THROWS_AS(check_resolution(g, 16.5), InvalidInput);
  CHECK_THROWS_AS(check_resolution(g, 0.0), InvalidInput);
  CHECK_THROWS_AS(phi_component(g, {0.5, 0.5}, 32.0, 0.0), InvalidInput);
}

TEST_CASE("phi: plateau, values and minimum") {
  TorusGrid g(256);
  const double lambda = 16.0, alpha = -0.3;
  const Point x = g.node(0, 0);
  auto phi = phi_component(g, x, lambda, alpha);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double d = torus_distance(g.node(k), x);
    CHECK(phi[k] <= 0.0);
    if (lambda * d < 1.0) CHECK(phi[k] == 0.0);
    else CHECK(phi[k] == doctest::Approx(-2 * (1 + alpha) * std::log(lambda * d)).epsilon(1e-14));
  }
  CHECK(phi.min() == doctest::Approx(-2 * (1 + alpha) * std::log(lambda * std::sqrt(2.0) / 2)).epsilon(1e-13));
}

TEST_CASE("phi depends on x only through the distance") {
  TorusGrid g(64);
  const int si = 5, sj = 11;
  auto a = phi_component(g, g.node(3, 7), 8.0, 0.2);
  auto b = phi_component(g, g.node(3 + si, 7 + sj), 8.0, 0.2);
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i)
      CHECK(b[g.index((i + si) % 64, (j + sj) % 64)] == a[g.index(i, j)]);
}

TEST_CASE("line fit") {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.max_deviation < 1e-12);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidInput);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1, 1}, std::vector<double>{1, 2}), InvalidInput);
}

TEST_CASE("phi asymptotics needs three lambdas") {
  TorusGrid g(128);
  std::vector<double> two{8, 16};
  CHECK_THROWS_AS(phi_asymptotics_check(g, {0.5, 0.5}, 0, 0, two), InvalidInput);
}

TEST_CASE("u^lambda: collapse and linearity") {
  auto m = scalar(128);
  const Point x(0.5, 0.5);
  const double rho = 20.0;
  auto u = u_lambda_family(m, RhoVector({rho}), Subset::of({0}), x, 8.0);
  auto phi = phi_component(m.grid(), x, 8.0, 0.0);
  for (std::size_t k = 0; k < phi.size(); ++k) CHECK(u[0][k] == doctest::Approx(rho / (4 * kPi) * phi[k]));

  SingularModel toda(TorusGrid(128), CouplingMatrix::from_rows({{2, -1}, {-1, 2}}), {{x, {-0.5, 0.2}}});
  auto u1 = u_lambda_family(toda, RhoVector({3.0, 5.0}), Subset::of({0, 1}), x, 8.0);
  auto u2 = u_lambda_family(toda, RhoVector({6.0, 10.0}), Subset::of({0, 1}), x, 8.0);
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < phi.size(); ++k)
      CHECK(u2[i][k] == doctest::Approx(2 * u1[i][k]).epsilon(1e-14).scale(1e-14));

  std::vector<std::vector<double>> t1{{1, 2}, {0, -1}}, t2{{0.5, -1}, {3, 0.25}}, ts{{1.5, 1}, {3, -0.75}};
  auto c1 = combine_test_functions(toda, x, 8.0, t1);
  auto c2 = combine_test_functions(toda, x, 8.0, t2);
  auto cs = combine_test_functions(toda, x, 8.0, ts);
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < phi.size(); ++k)
      CHECK(cs[i][k] == doctest::Approx(c1[i][k] + c2[i][k]).scale(1.0));
}

TEST_CASE("energy slope of the test family: positive when Lambda > 0") {
  auto m = scalar(256);
  std::vector<double> lambdas{8, 16, 32};
  auto bs = blowup_slope(m, RhoVector({0.9 * 8 * kPi}), Subset::of({0}), {0.5, 0.5}, lambdas);
  CHECK(bs.lambda_ix > 0.0);
  CHECK(bs.fit.slope > 0.0);
  CHECK(bs.predicted_slope == doctest::Approx(bs.lambda_ix / (4 * kPi)));
  for (std::size_t k = 1; k < bs.energies.size(); ++k) CHECK(bs.energies[k] >= bs.energies[k - 1]);
}

TEST_CASE("generic point") {
  CHECK(generic_point(scalar(64)) == Point(0.5, 0.5));
  auto m = scalar(64, {{{0.5, 0.5}, {-0.5}}});
  CHECK(torus_distance(generic_point(m), {0.5, 0.5}) > 0.69);
}

TEST_CASE("sigma: input checks") {
  auto m = scalar(128);
  const RhoVector rho({8 * kPi});
  auto v = bubble_v(m, {0.5, 0.5}, 16.0, 8 * kPi);
  std::vector<double> up{0.1, 0.2}, tiny{0.2, 0.01};
  CHECK_THROWS_AS(estimate_sigma(m, rho, v, {0.5, 0.5}, up), InvalidInput);
  CHECK_THROWS_AS(estimate_sigma(m, rho, v, {0.5, 0.5}, tiny), InvalidInput);
  std::vector<double> ok{0.2, 0.1};
  CHECK_THROWS_AS(estimate_sigma(m, RhoVector({2.0}), v, {0.5, 0.5}, ok), InvalidInput);
}

TEST_CASE("sigma of a bubble, away from it, and of a flat field") {
  auto m = scalar(512);
  const double rho = 8 * kPi;
  auto v = bubble_v(m, {0.5, 0.5}, 32.0, rho);
  std::vector<double> radii{0.3, 0.25, 0.2, 0.16, 0.125};
  auto rep = estimate_sigma(m, RhoVector({rho}), v, {0.5, 0.5}, radii);
  for (std::size_t k = 1; k < radii.size(); ++k) CHECK(rep.masses[0][k] <= rep.masses[0][k - 1]);
  CHECK(rep.sigma[0] <= rho * (1 + 1e-12));
  CHECK(rep.sigma[0] == doctest::Approx(rho).epsilon(0.05));
  CHECK(rep.sigma_threshold[0] == doctest::Approx(4 * kPi));
  CHECK(rep.sigma_prime[0] == doctest::Approx(4 * kPi));

  auto far = estimate_sigma(m, RhoVector({rho}), v, {0.0, 0.0}, std::vector<double>{0.2, 0.1});
  CHECK(far.sigma[0] < 1e-9);

  auto flat = normalize_v(m, RhoVector({rho}), SystemField::zero(m.grid(), 1));
  auto fr = estimate_sigma(m, RhoVector({rho}), flat, {0.5, 0.5}, std::vector<double>{0.1, 0.05});
  CHECK(fr.sigma[0] < 0.1 * rep.sigma_threshold[0]);
  CHECK_FALSE(fr.sigma_converged[0]);
}

TEST_CASE("sigma thresholds with coupling and singular coefficients") {
  SingularModel m(TorusGrid(64), CouplingMatrix::from_rows({{2, 0.5}, {0.5, 3}}), {{{0.2, 0.2}, {-0.5, 0.4}}});
  const RhoVector rho({1.0, 1.0});
  auto v = normalize_v(m, rho, SystemField::zero(m.grid(), 2));
  auto rep = estimate_sigma(m, rho, v, {0.7, 0.7}, std::vector<double>{0.2, 0.1});
  // sigma0_i = 4 pi min{1, 1 + min alpha} / sum_j a_ij^+ ; sigma'_i = 4 pi min{1, 1 + min_m alpha_im} / a_ii
  CHECK(rep.sigma_threshold[0] == doctest::Approx(4 * kPi * 0.5 / 2.5));
  CHECK(rep.sigma_threshold[1] == doctest::Approx(4 * kPi * 0.5 / 3.5));
  CHECK(rep.sigma_prime[0] == doctest::Approx(4 * kPi * 0.5 / 2));
  CHECK(rep.sigma_prime[1] == doctest::Approx(4 * kPi / 3));
}

TEST_CASE("Pohozaev check") {
  auto m = scalar(64);
  std::vector<double> zero{0.0}, s{8 * kPi};
  CHECK(pohozaev_check(m, zero, {0.5, 0.5}) == 0.0);
  CHECK(std::abs(pohozaev_check(m, s, {0.5, 0.5})) < 1e-12 * 64 * kPi * kPi);

  SingularModel toda(TorusGrid(64), CouplingMatrix::from_rows({{2, -1}, {-1, 2}}), {{{0.5, 0.5}, {-0.5, 0.2}}});
  std::vector<double> sig{3.0, 7.0};
  for (Point x : {Point(0.5, 0.5), Point(0.1, 0.1)})
    CHECK(pohozaev_check(toda, sig, x) == lambda_subset_at(toda, sig, Subset::full(2), x));
}

TEST_CASE("blow-up detector on synthetic sequences") {
  TorusGrid g(128);
  SystemField flat({ScalarField::constant(g, 0.3)});
  std::vector<SystemField> constant{flat, flat, flat};
  auto none = detect_blowup_set(constant);
  REQUIRE(none.size() == 1);
  CHECK(none[0].empty());
  CHECK_THROWS_AS(detect_blowup_set(std::vector<SystemField>{flat}), InvalidInput);

  // Two components concentrating at distinct points.
  const Point p(0.25, 0.3), q(0.7, 0.65);
  std::vector<SystemField> seq;
  for (double lambda : {2.0, 4.0, 8.0, 16.0})
    seq.push_back(SystemField({synthetic_bubble(g, p, lambda), synthetic_bubble(g, q, lambda)}));
  auto found = detect_blowup_set(seq);
  REQUIRE(found[0].size() == 1);
  REQUIRE(found[1].size() == 1);
  CHECK(torus_distance(found[0][0], p) <= 8.0 / 128);
  CHECK(torus_distance(found[1][0], q) <= 8.0 / 128);
  CHECK(torus_distance(found[0][0], found[1][0]) > 8.0 / 128);
}

TEST_CASE("continuation towards the critical parameter peaks at the source") {
  const Point p(0.5, 0.5);
  auto m = scalar(128, {{p, {-0.5}}});
  const double rho0 = rho_critical(m)[0];
  std::vector<RhoVector> seq;
  for (int k = 1; k <= 12; ++k) seq.push_back(RhoVector({(1 - std::ldexp(1.0, -k)) * rho0}));
  auto steps = continuation(m, seq, SolverOptions{});
  std::vector<SystemField> vs;
  for (const auto& s : steps) {
    REQUIRE(s.result.has_value());
    vs.push_back(normalize_v(m, s.rho, s.result->u_star));
  }
  const auto vals = vs.back()[0].values();
  const auto top = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  CHECK(torus_distance(m.grid().node(top), p) <= 8.0 / 128);
  // The growth stays far below the default threshold on a desk-scale grid; a
  // lower threshold isolates the source.
  CHECK(detect_blowup_set(vs)[0].empty());
  auto low = detect_blowup_set(vs, 1.0);
  REQUIRE(low[0].size() == 1);
  CHECK(torus_distance(low[0][0], p) <= 8.0 / 128);
}
