// One line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <fstream>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

#include "liouville/app.hpp"
#include "liouville/blowup.hpp"
#include "liouville/minimizer.hpp"
#include "random_instance.hpp"

using namespace liouville;
using testing::kPi;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v{false, ""};
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    v.pass = false;
    v.detail += fmt::format("; over the {:.0f} s budget", budget_s);
  }
  if (!v.pass) ++failures;
  std::cout << fmt::format("[{}] criterion {:>2}: {} -- {} ({:.2f} s)\n", v.pass ? "PASS" : "FAIL", id, name,
                           v.detail, secs)
            << std::flush;
}

SystemField random_system(const TorusGrid& g, int n, std::mt19937_64& rng, double scale) {
  std::vector<ScalarField> comps;
  for (int i = 0; i < n; ++i) comps.push_back(scale * testing::random_trig_field(g, rng, 4, 6));
  return SystemField(std::move(comps));
}

double pair(const SystemField& a, const SystemField& b) {
  double s = 0.0;
  for (int i = 0; i < a.components(); ++i)
    for (std::size_t k = 0; k < a[i].size(); ++k) s += a[i][k] * b[i][k];
  return s * a.grid().cell_area();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

int main() {
  // Sweeps touch unbounded nodes on purpose; keep their warnings off the report.
  ::setenv("LIOUVILLE_LOG", "error", 0);
  criterion(1, "Lambda equals an exhaustive oracle on 1000 random instances", 5.0, [] {
    std::mt19937_64 rng(20240601);
    int bad = 0;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      auto in = testing::random_instance(rng);
      const double got = lambda_min(testing::make_model(in), RhoVector(in.rho)).lambda;
      const double want = testing::brute_force_lambda(in.a, in.alphas, in.rho);
      const double rel = std::abs(got - want) / std::max(1.0, std::abs(want));
      worst = std::max(worst, rel);
      if (rel > 1e-12) ++bad;
    }
    return Verdict{bad == 0, fmt::format("{} mismatches, worst relative difference {:.2e}", bad, worst)};
  });

  criterion(2, "scalar threshold 8 pi", 5.0, [] {
    SingularModel m(TorusGrid(32), CouplingMatrix::from_rows({{1.0}}), {});
    const double rc = rho_critical(m)[0];
    const auto c7 = lambda_min(m, RhoVector({7.0})).classification;
    const auto c26 = lambda_min(m, RhoVector({26.0})).classification;
    const bool ok = std::abs(rc - 8 * kPi) <= 4 * std::numeric_limits<double>::epsilon() * 8 * kPi &&
                    c7 == Coercivity::coercive && c26 == Coercivity::unbounded;
    return Verdict{ok, fmt::format("rho0 = {:.17g}, rho=7: {}, rho=26: {}", rc, to_string(c7), to_string(c26))};
  });

  criterion(3, "Toda threshold with one singular source", 5.0, [] {
    SingularModel m(TorusGrid(32), CouplingMatrix::from_rows({{2, -1}, {-1, 2}}), {{{0.5, 0.5}, {-0.5, 0.0}}});
    const auto rc = rho_critical(m);
    const double tol = 4 * std::numeric_limits<double>::epsilon() * 4 * kPi;
    const bool ok = std::abs(rc[0] - 2 * kPi) <= tol && std::abs(rc[1] - 4 * kPi) <= tol;
    return Verdict{ok, fmt::format("rho0 = ({:.17g}, {:.17g})", rc[0], rc[1])};
  });

  criterion(4, "L2 gradient vs central differences (N=2, n=64, 20 directions)", 10.0, [] {
    SingularModel m(TorusGrid(64), CouplingMatrix::from_rows({{2, -1}, {-1, 2}}),
                    {{{0.3, 0.4}, {-0.4, 0.3}}, {{0.75, 0.8}, {0.6, -0.2}}});
    const RhoVector rho({5.0, 7.0});
    std::mt19937_64 rng(4242);
    auto u = random_system(m.grid(), 2, rng, 0.5);
    auto g = l2_gradient(m, rho, u);
    const double eps = 1e-4;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      auto w = random_system(m.grid(), 2, rng, 1.0);
      auto up = u, um = u;
      up.axpy(eps, w);
      um.axpy(-eps, w);
      const double fd = (evaluate_J(m, rho, up).J - evaluate_J(m, rho, um).J) / (2 * eps);
      const double an = pair(g, w);
      worst = std::max(worst, std::abs(fd - an) / std::abs(an));
    }
    return Verdict{worst < 1e-5, fmt::format("worst relative error {:.2e}", worst)};
  });

  criterion(5, "minimiser certificate (N=1, alpha=-0.5, rho=rho0/2, n=128)", 60.0, [] {
    SingularModel m(TorusGrid(128), CouplingMatrix::from_rows({{1.0}}), {{{0.5, 0.5}, {-0.5}}});
    const RhoVector rho({0.5 * rho_critical(m)[0]});
    auto r = minimize(m, rho);
    const double res = residual_norms(el_residual(m, rho, r.u_star)).h_minus_1;
    auto r1 = minimize(m, rho, random_smooth_init(m.grid(), 1, 1));
    auto r2 = minimize(m, rho, random_smooth_init(m.grid(), 1, 2));
    const double spread = std::abs(r1.energy_report.J - r2.energy_report.J);
    const bool ok = r.converged && res <= 1e-8 && r1.converged && r2.converged && spread <= 1e-6;
    return Verdict{ok, fmt::format("J = {:.12g}, re-evaluated H^-1 residual {:.2e}, two random starts differ by {:.2e}",
                                   r.energy_report.J, res, spread)};
  });

  criterion(6, "monotonicity of Lambda > 0 under shrinking rho (1000 pairs)", 5.0, [] {
    std::mt19937_64 rng(6006);
    std::uniform_real_distribution<double> shrink(0.0, 1.0);
    int pairs = 0, violations = 0;
    while (pairs < 1000) {
      auto in = testing::random_instance(rng);
      for (auto& r : in.rho) r *= 0.3;
      auto m = testing::make_model(in);
      if (!(lambda_min(m, RhoVector(in.rho)).lambda > 0.0)) continue;
      ++pairs;
      auto smaller = in.rho;
      for (auto& r : smaller) r *= std::max(1e-12, shrink(rng));
      if (!(lambda_min(m, RhoVector(smaller)).lambda > 0.0)) ++violations;
    }
    return Verdict{violations == 0, fmt::format("{} pairs, {} violations", pairs, violations)};
  });

  criterion(7, "test-function asymptotics (n=512, lambda in {8,16,32})", 120.0, [] {
    TorusGrid g(512);
    std::vector<double> lambdas{8, 16, 32};
    bool ok = true;
    std::string detail;
    for (auto [ai, aj] : {std::pair{0.0, 0.0}, std::pair{-0.5, 0.0}, std::pair{-0.5, -0.5}}) {
      auto pa = phi_asymptotics_check(g, {0.5, 0.5}, ai, aj, lambdas);
      const double want = 8 * kPi * (1 + ai) * (1 + aj);
      const double d_err = std::abs(pa.dirichlet_fit.slope - want) / want;
      const double m_err = std::abs(pa.mean_i_fit.slope + 2 * (1 + ai)) / (2 * (1 + ai));
      ok = ok && d_err < 0.10 && m_err < 0.05;
      detail += fmt::format("{}({:g},{:g}): slope {:.4g}/{:.4g}, mean {:.4g}/{:.4g}", detail.empty() ? "" : "; ",
                            ai, aj, pa.dirichlet_fit.slope, want, pa.mean_i_fit.slope, -2 * (1 + ai));
    }
    return Verdict{ok, detail};
  });

  criterion(8, "energy slope of the concentrating family (n=512)", 120.0, [] {
    // Expanding J(u^lambda) gives slope +Lambda_{I,x}/(4 pi) in log lambda, so J -> -inf
    // exactly when Lambda < 0; that is the reference used here.
    SingularModel m(TorusGrid(512), CouplingMatrix::from_rows({{1.0}}), {});
    std::vector<double> lambdas{8, 16, 32, 64};
    const Point x(0.5, 0.5);
    auto neg = blowup_slope(m, RhoVector({1.5 * 8 * kPi}), Subset::of({0}), x, lambdas);
    auto pos = blowup_slope(m, RhoVector({0.9 * 8 * kPi}), Subset::of({0}), x, lambdas);
    const double rel = std::abs(neg.fit.slope - neg.predicted_slope) / std::abs(neg.predicted_slope);
    const bool ok = rel < 0.15 && pos.fit.slope > 0.0;
    return Verdict{ok, fmt::format("rho=1.5*8pi: slope {:.4g} vs Lambda/(4pi) = {:.4g} ({:.1f}%); rho=0.9*8pi: slope {:.4g}",
                                   neg.fit.slope, neg.predicted_slope, 100 * rel, pos.fit.slope)};
  });

  criterion(9, "Pohozaev identity on a transplanted bubble (lambda=64, n=1024)", 120.0, [] {
    SingularModel m(TorusGrid(1024), CouplingMatrix::from_rows({{1.0}}), {});
    const double rho = 8 * kPi;
    const Point x(0.5, 0.5);
    auto v = normalize_v(m, RhoVector({rho}), SystemField({synthetic_bubble(m.grid(), x, 64.0)}));
    std::vector<double> radii{0.2, 0.16, 0.125};
    auto rep = estimate_sigma(m, RhoVector({rho}), v, x, radii);
    const double sig_err = std::abs(rep.sigma[0] - rho) / rho;
    const bool ok = sig_err < 0.02 && std::abs(rep.pohozaev_residual) <= 0.05 * rho * rho;
    return Verdict{ok, fmt::format("sigma/8pi = {:.5f}, residual {:.4g} (limit {:.4g})", rep.sigma[0] / rho,
                                   rep.pohozaev_residual, 0.05 * rho * rho)};
  });

  criterion(10, "boundary continuation is bounded below and grid stable (256 -> 512)", 600.0, [] {
    auto run = [](int n) {
      SingularModel m(TorusGrid(n), CouplingMatrix::from_rows({{1.0}}), {{{0.5, 0.5}, {-0.5}}});
      const double rho0 = rho_critical(m)[0];
      std::vector<RhoVector> seq;
      for (int k = 1; k <= 6; ++k) seq.push_back(RhoVector({(1 - std::ldexp(1.0, -k)) * rho0}));
      auto steps = continuation(m, seq, SolverOptions{});
      double lowest = INFINITY;
      bool finite = true;
      for (const auto& s : steps) {
        if (!s.result || !std::isfinite(s.result->energy_report.J)) {
          finite = false;
          continue;
        }
        lowest = std::min(lowest, s.result->energy_report.J);
      }
      return std::pair{finite, lowest};
    };
    const auto [f256, j256] = run(256);
    const auto [f512, j512] = run(512);
    const double change = std::abs(j512 - j256) / std::abs(j512);
    return Verdict{f256 && f512 && change < 0.10,
                   fmt::format("min J: {:.6g} (n=256), {:.6g} (n=512), change {:.2f}%", j256, j512, 100 * change)};
  });

  criterion(11, "sweep output is byte identical across runs", 60.0, [] {
    const auto dir = std::filesystem::temp_directory_path() / fmt::format("liouville_accept_{}", ::getpid());
    std::filesystem::create_directories(dir);
    nlohmann::json cfg = {{"grid_n", 32}, {"A", {{2, -1}, {-1, 2}}}, {"rho", {1, 1}}, {"init", "random"},
                          {"seed", 11}, {"solver", {{"max_iters", 300}}},
                          {"sweep", {{"axes", {{{"component", 1}, {"min", 2.0}, {"max", 16.0}, {"steps", 4}},
                                               {{"component", 2}, {"min", 2.0}, {"max", 16.0}, {"steps", 4}}}},
                                     {"minimize", true}}}};
    std::ofstream(dir / "sweep.json") << cfg.dump();
    std::ostringstream out, err;
    const auto cfg_path = (dir / "sweep.json").string();
    const int c1 = app::run({"liouville", "sweep", "--config", cfg_path, "--out", (dir / "a").string(), "--jobs", "2"}, out, err);
    const int c2 = app::run({"liouville", "sweep", "--config", cfg_path, "--out", (dir / "b").string(), "--jobs", "2"}, out, err);
    const auto a = slurp(dir / "a" / "sweep.csv"), b = slurp(dir / "b" / "sweep.csv");
    std::filesystem::remove_all(dir);
    const bool ok = c1 == 0 && c2 == 0 && !a.empty() && a == b;
    return Verdict{ok, fmt::format("exit codes {}/{}, {} bytes, identical: {}", c1, c2, a.size(), a == b)};
  });

  return failures;
}
