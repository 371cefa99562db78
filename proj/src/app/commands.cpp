#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "liouville/app.hpp"
#include "liouville/blowup.hpp"
#include "liouville/error.hpp"
#include "liouville/field_io.hpp"

namespace liouville::app {
namespace {

using nlohmann::json;

std::string num(double v) { return fmt::format("{:.17g}", v); }

// nlohmann writes NaN as null; catch it before anything hits the disk.
void ensure_finite(const json& j, const std::string& path) {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>())) throw NumericFailure(fmt::format("non-finite value in report field '{}'", path));
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) ensure_finite(j[k], fmt::format("{}[{}]", path, k));
  } else if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) ensure_finite(it.value(), path + "." + it.key());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  f << text;
  if (!f) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

void write_json(const std::filesystem::path& path, const json& j) {
  ensure_finite(j, "");
  write_text(path, j.dump(2) + "\n");
}

std::filesystem::path prepare_out(const RunOptions& run) {
  std::filesystem::create_directories(run.out_dir);
  return run.out_dir;
}

json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

json subset_json(Subset s) {
  json out = json::array();
  for (int i : s.members()) out.push_back(i + 1);
  return out;
}

Point argmin_point(const SingularModel& model, const LambdaReport& rep) {
  return rep.argmin_source ? model.sources()[*rep.argmin_source].p : generic_point(model);
}

json lambda_json(const SingularModel& model, const LambdaReport& rep) {
  json j;
  j["lambda"] = rep.lambda;
  j["tolerance"] = rep.tolerance;
  j["classification"] = to_string(rep.classification);
  j["argmin_subset"] = subset_json(rep.argmin_subset);
  j["argmin_point"] = {
      {"kind", rep.argmin_source ? "source" : "generic"},
      {"source", rep.argmin_source ? json(*rep.argmin_source + 1) : json(nullptr)},
      {"point", point_json(argmin_point(model, rep))}};
  if (!rep.table.empty()) {
    json table = json::array();
    for (const auto& e : rep.table) {
      table.push_back({{"subset", subset_json(e.subset)},
                       {"source", e.source ? json(*e.source + 1) : json(nullptr)},
                       {"value", e.value}});
    }
    j["table"] = std::move(table);
  }
  return j;
}

std::string point_text(const SingularModel& model, const LambdaReport& rep) {
  const Point p = argmin_point(model, rep);
  if (rep.argmin_source) return fmt::format("source {} at ({}, {})", *rep.argmin_source + 1, p.x(), p.y());
  return fmt::format("generic point, e.g. ({}, {})", p.x(), p.y());
}

std::uint64_t effective_seed(const ExperimentConfig& cfg, const RunOptions& run) {
  return run.seed ? *run.seed : cfg.seed;
}

json base_report(const char* command, const ExperimentConfig& cfg, const RunOptions& run) {
  auto c = to_json(cfg);
  c["seed"] = effective_seed(cfg, run);
  return {{"command", command}, {"config", c}};
}

SystemField initial_field(const ExperimentConfig& cfg, const SingularModel& model, std::uint64_t seed) {
  if (cfg.init == "random") return random_smooth_init(model.grid(), model.components(), seed);
  return SystemField::zero(model.grid(), model.components());
}

int exit_for(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return kSuccess;
    case SolverStatus::expected_unboundedness: return kExpectedUnboundedness;
    default: return kNotConverged;
  }
}

json minimize_json(const MinimizeResult& r, const SystemField& residual) {
  const auto norms = residual_norms(residual);
  return {{"status", to_string(r.status)},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"J", r.energy_report.J},
          {"dirichlet_part", r.energy_report.dirichlet_part},
          {"entropy_parts", r.energy_report.entropy_parts},
          {"masses", r.energy_report.masses},
          {"residual", {{"h_minus_1", r.residual_h_minus_1}, {"l2", norms.l2}, {"linf", norms.linf}}},
          {"note", r.note}};
}

}  // namespace

int cmd_classify(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out) {
  const auto model = build_model(cfg);
  const RhoVector rho(cfg.rho);
  const auto rep = lambda_min(model, rho, true);

  json j = base_report("classify", cfg, run);
  j["report"] = lambda_json(model, rep);

  out << fmt::format("Lambda(rho) = {:.17g}\n", rep.lambda);
  out << fmt::format("argmin: I = {}, x = {}\n", rep.argmin_subset.to_string(), point_text(model, rep));
  out << fmt::format("classification: {} (critical band +-{:.3g})\n", to_string(rep.classification),
                     rep.tolerance);

  json sharp = {{"applies", model.coupling().off_diagonal_nonpositive()}};
  if (model.coupling().off_diagonal_nonpositive()) {
    const auto rc = rho_critical(model);
    bool bounded = true;
    bool boundary = false;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double slack = 1e-12 * rc[i];
      if (rho[i] > rc[i] + slack) bounded = false;
      if (std::abs(rho[i] - rc[i]) <= slack) boundary = true;
    }
    std::vector<double> rcv(rc.values().begin(), rc.values().end());
    sharp["rho_critical"] = rcv;
    sharp["verdict"] = bounded ? "bounded_below" : "unbounded_below";
    sharp["on_boundary"] = bounded && boundary;
    out << "rho_critical = (";
    for (std::size_t i = 0; i < rcv.size(); ++i) out << (i ? ", " : "") << num(rcv[i]);
    out << ")\n";
    out << fmt::format("off-diagonal entries <= 0: J_rho is {}{}\n",
                       bounded ? "bounded below" : "unbounded below",
                       bounded && boundary ? " (boundary case, not coercive)" : "");
  } else {
    out << "off-diagonal entries not all <= 0: only the sufficient condition Lambda > 0 applies\n";
  }
  j["sharp"] = std::move(sharp);
  write_json(prepare_out(run) / "classify.json", j);
  return kSuccess;
}

int cmd_minimize(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out) {
  const auto model = build_model(cfg);
  const RhoVector rho(cfg.rho);
  const auto init = initial_field(cfg, model, effective_seed(cfg, run));
  const auto r = minimize(model, rho, init, cfg.solver);
  if (!r.u_star.all_finite()) throw NumericFailure("minimiser produced a non-finite field");
  const auto residual = el_residual(model, rho, r.u_star);

  json j = base_report("minimize", cfg, run);
  j["lambda"] = lambda_json(model, r.lambda);
  j["result"] = minimize_json(r, residual);

  std::string csv = "iteration,J\n";
  for (std::size_t k = 0; k < r.J_trace.size(); ++k) {
    if (!std::isfinite(r.J_trace[k])) throw NumericFailure("non-finite energy in the trace");
    csv += fmt::format("{},{}\n", k, num(r.J_trace[k]));
  }
  const auto dir = prepare_out(run);
  write_json(dir / "minimize.json", j);
  write_text(dir / "trace.csv", csv);
  write_field_dump(dir / "field.bin", r.u_star);

  out << fmt::format("status: {} after {} iterations\n", to_string(r.status), r.iterations);
  out << fmt::format("J = {:.17g}, H^-1 residual = {:.3g}\n", r.energy_report.J, r.residual_h_minus_1);
  if (!r.note.empty()) out << r.note << "\n";
  return exit_for(r.status);
}

int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out) {
  const auto model = build_model(cfg);
  const int n = model.components();

  // Row-major over the axes: the first axis varies slowest.
  std::vector<std::vector<double>> axis_values;
  for (const auto& ax : cfg.sweep.axes) {
    std::vector<double> vals;
    for (int k = 0; k < ax.steps; ++k)
      vals.push_back(ax.steps == 1 ? ax.min : ax.min + (ax.max - ax.min) * k / (ax.steps - 1));
    axis_values.push_back(std::move(vals));
  }
  std::vector<std::vector<double>> nodes;
  const std::size_t n0 = axis_values.size() > 0 ? axis_values[0].size() : 1;
  const std::size_t n1 = axis_values.size() > 1 ? axis_values[1].size() : 1;
  for (std::size_t a = 0; a < n0; ++a) {
    for (std::size_t b = 0; b < n1; ++b) {
      auto rho = cfg.rho;
      if (axis_values.size() > 0) rho[cfg.sweep.axes[0].component - 1] = axis_values[0][a];
      if (axis_values.size() > 1) rho[cfg.sweep.axes[1].component - 1] = axis_values[1][b];
      nodes.push_back(std::move(rho));
    }
  }

  struct Row {
    LambdaReport lambda;
    bool minimized = false;
    std::string status;
    double J = 0.0;
    int iterations = 0;
    double residual = 0.0;
  };
  std::vector<Row> rows(nodes.size());
  const std::uint64_t seed = effective_seed(cfg, run);

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t k = next++; k < nodes.size(); k = next++) {
      try {
        const RhoVector rho(nodes[k]);
        Row row;
        row.lambda = lambda_min(model, rho);
        if (cfg.sweep.minimize) {
          row.minimized = true;
          try {
            const auto init = initial_field(cfg, model, seed + k);
            const auto r = minimize(model, rho, init, cfg.solver);
            row.status = to_string(r.status);
            row.J = r.energy_report.J;
            row.iterations = r.iterations;
            row.residual = r.residual_h_minus_1;
          } catch (const NumericFailure& e) {
            row.status = "numeric_failure";
            spdlog::warn("sweep node {}: {}", k, e.what());
          }
        }
        rows[k] = std::move(row);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(run.jobs, static_cast<int>(nodes.size())));
  std::vector<std::jthread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);

  std::string csv;
  for (int i = 0; i < n; ++i) csv += fmt::format("rho_{},", i + 1);
  csv += "lambda,classification";
  if (cfg.sweep.minimize) csv += ",status,J,iterations,residual_h_minus_1";
  csv += "\n";
  std::size_t coercive = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& row = rows[k];
    if (!std::isfinite(row.lambda.lambda)) throw NumericFailure("non-finite Lambda in sweep");
    for (double r : nodes[k]) csv += num(r) + ",";
    csv += num(row.lambda.lambda) + "," + to_string(row.lambda.classification);
    if (row.lambda.classification == Coercivity::coercive) ++coercive;
    if (row.minimized) {
      if (row.status == "numeric_failure") {
        csv += ",numeric_failure,,,";
      } else {
        if (!std::isfinite(row.J) || !std::isfinite(row.residual))
          throw NumericFailure("non-finite energy in sweep");
        csv += fmt::format(",{},{},{},{}", row.status, num(row.J), row.iterations, num(row.residual));
      }
    }
    csv += "\n";
  }
  const auto dir = prepare_out(run);
  write_text(dir / "sweep.csv", csv);
  json j = base_report("sweep", cfg, run);
  j["rows"] = nodes.size();
  j["coercive_rows"] = coercive;
  write_json(dir / "sweep.json", j);
  out << fmt::format("{} rows ({} coercive) written to {}\n", nodes.size(), coercive,
                     (dir / "sweep.csv").string());
  return kSuccess;
}

int cmd_blowup_slope(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out) {
  const auto model = build_model(cfg);
  const RhoVector rho(cfg.rho);
  for (double l : cfg.blowup.lambda_list) {
    try {
      check_resolution(model.grid(), l);
    } catch (const InvalidInput& e) {
      throw InvalidInput(fmt::format("config field 'blowup.lambda_list': {}", e.what()));
    }
  }
  const auto rep = lambda_min(model, rho);

  Subset subset = rep.argmin_subset;
  if (!cfg.blowup.subset.empty()) {
    std::uint32_t mask = 0;
    for (int c : cfg.blowup.subset) mask |= 1u << (c - 1);
    subset = Subset(mask);
  }
  const Point x = cfg.blowup.point ? Point((*cfg.blowup.point)[0], (*cfg.blowup.point)[1])
                                   : argmin_point(model, rep);
  const auto bs = blowup_slope(model, rho, subset, x, cfg.blowup.lambda_list);

  std::string csv = "lambda,log_lambda,J\n";
  for (std::size_t k = 0; k < bs.lambdas.size(); ++k) {
    if (!std::isfinite(bs.energies[k])) throw NumericFailure("non-finite energy on the test family");
    csv += fmt::format("{},{},{}\n", num(bs.lambdas[k]), num(std::log(bs.lambdas[k])), num(bs.energies[k]));
  }
  const double rel = bs.predicted_slope != 0.0
                         ? std::abs(bs.fit.slope - bs.predicted_slope) / std::abs(bs.predicted_slope)
                         : std::abs(bs.fit.slope);
  json j = base_report("blowup-slope", cfg, run);
  j["subset"] = subset_json(subset);
  j["point"] = point_json(x);
  j["lambdas"] = bs.lambdas;
  j["energies"] = bs.energies;
  j["slope"] = bs.fit.slope;
  j["intercept"] = bs.fit.intercept;
  j["max_fit_deviation"] = bs.fit.max_deviation;
  j["lambda_ix"] = bs.lambda_ix;
  j["predicted_slope"] = bs.predicted_slope;
  j["relative_slope_error"] = rel;
  j["lambda_min"] = lambda_json(model, rep);

  const auto dir = prepare_out(run);
  write_text(dir / "blowup_slope.csv", csv);
  write_json(dir / "blowup_slope.json", j);
  out << fmt::format("I = {}, x = ({}, {}), Lambda_I,x(rho) = {:.17g}\n", subset.to_string(), x.x(), x.y(),
                     bs.lambda_ix);
  out << fmt::format("slope of J(u^lambda) vs log lambda: {:.6g}; Lambda_I,x / (4 pi) = {:.6g} "
                     "(relative difference {:.3g})\n",
                     bs.fit.slope, bs.predicted_slope, rel);
  return kSuccess;
}

int cmd_pohozaev(const ExperimentConfig& cfg, const RunOptions& run, std::ostream& out) {
  const auto model = build_model(cfg);
  const RhoVector rho(cfg.rho);
  const auto& grid = model.grid();
  const auto& pc = cfg.pohozaev;
  const int n = model.components();
  const Point center(pc.center[0], pc.center[1]);

  SystemField u;
  std::optional<Point> x;
  json extra;
  if (pc.field == "bubble") {
    try {
      check_resolution(grid, pc.bubble_lambda);
    } catch (const InvalidInput& e) {
      throw InvalidInput(fmt::format("config field 'pohozaev.bubble_lambda': {}", e.what()));
    }
    std::vector<ScalarField> comps(n, synthetic_bubble(grid, center, pc.bubble_lambda));
    u = SystemField(std::move(comps));
    x = center;
  } else if (pc.field == "zero") {
    u = SystemField::zero(grid, n);
    x = center;
  } else if (pc.field == "file") {
    u = read_field_dump(pc.path);
    if (!(u.grid() == grid) || u.components() != n) {
      throw InvalidInput(fmt::format("config field 'pohozaev.path': dump '{}' does not match grid_n / component count", pc.path));
    }
    x = center;
  } else {
    std::vector<RhoVector> seq;
    for (int k = 1; k <= pc.continuation_steps; ++k) seq.push_back(rho.scaled(1.0 - std::ldexp(1.0, -k)));
    const auto steps = continuation(model, seq, cfg.solver);
    std::vector<SystemField> vs;
    json summary = json::array();
    for (const auto& s : steps) {
      json e = {{"rho", std::vector<double>(s.rho.values().begin(), s.rho.values().end())}};
      if (s.result) {
        e["status"] = to_string(s.result->status);
        e["J"] = s.result->energy_report.J;
        e["iterations"] = s.result->iterations;
        u = s.result->u_star;
        vs.push_back(normalize_v(model, s.rho, u));
      } else {
        e["status"] = "error";
        e["error"] = s.error;
      }
      summary.push_back(std::move(e));
    }
    if (vs.empty()) throw NumericFailure("every continuation step failed");
    extra["continuation"] = std::move(summary);
    // u is the endpoint at the last successful step; normalize_v below rescales it to rho.
    json detected = json::array();
    if (vs.size() >= 2) {
      for (const auto& comp : detect_blowup_set(vs)) {
        json pts = json::array();
        for (const auto& p : comp) pts.push_back(point_json(p));
        detected.push_back(std::move(pts));
      }
    }
    extra["blowup_set"] = std::move(detected);
    if (!pc.point) {
      const auto& v1 = vs.back()[0];
      const auto vals = v1.values();
      const auto k = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
      x = grid.node(k);
    }
  }
  if (pc.point) x = Point((*pc.point)[0], (*pc.point)[1]);

  if (!u.all_finite()) throw NumericFailure("field to analyse is not finite");
  const auto v = normalize_v(model, rho, u);
  const auto rep = estimate_sigma(model, rho, v, *x, pc.radii);

  std::vector<double> sigma_limit(n);
  for (int i = 0; i < n; ++i) sigma_limit[i] = rep.sigma_converged[i] ? rep.sigma[i] : 0.0;
  const double residual_limit = pohozaev_check(model, sigma_limit, *x);

  json j = base_report("pohozaev", cfg, run);
  j["point"] = point_json(rep.x);
  j["radii"] = rep.radii;
  j["masses"] = rep.masses;
  j["sigma"] = rep.sigma;
  j["sigma_converged"] = rep.sigma_converged;
  j["sigma_threshold"] = rep.sigma_threshold;
  j["sigma_prime"] = rep.sigma_prime;
  j["pohozaev_residual"] = rep.pohozaev_residual;
  j["sigma_limit"] = sigma_limit;
  j["pohozaev_residual_limit"] = residual_limit;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_json(prepare_out(run) / "pohozaev.json", j);

  out << fmt::format("x = ({}, {})\n", rep.x.x(), rep.x.y());
  for (int i = 0; i < n; ++i) {
    out << fmt::format("sigma_{} = {:.10g} ({}), sigma0 = {:.6g}, sigma' = {:.6g}\n", i + 1, rep.sigma[i],
                       rep.sigma_converged[i] ? "stable" : "not stable across radii",
                       rep.sigma_threshold[i], rep.sigma_prime[i]);
  }
  out << fmt::format("Pohozaev residual Lambda_full,x(sigma) = {:.6g}\n", rep.pohozaev_residual);
  return kSuccess;
}

namespace {

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_mt("liouville");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("LIOUVILLE_LOG")) {
      spdlog::set_level(spdlog::level::from_str(env));
    }
  });
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Variational experiments for singular Liouville systems on the flat torus", "liouville"};
  app.require_subcommand(1, 1);

  std::string config_path;
  RunOptions opts;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--jobs", opts.jobs, "parallel sweep nodes")->check(CLI::Range(1, 1024));
    sub->add_option("--seed", seed, "overrides the config seed");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const ExperimentConfig&, const RunOptions&, std::ostream&);
  };
  const Command commands[] = {
      {"classify", "Lambda(rho), its argmin and the coercivity verdict", cmd_classify},
      {"minimize", "minimise J_rho; writes minimize.json, trace.csv, field.bin", cmd_minimize},
      {"sweep", "classification (and optional minimisation) over a rho grid", cmd_sweep},
      {"blowup-slope", "energy of concentrating test functions against log lambda", cmd_blowup_slope},
      {"pohozaev", "concentration masses and the Pohozaev residual", cmd_pohozaev},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    for (auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      if (sub->get_option("--seed")->count() > 0) opts.seed = seed;
      const auto cfg = load_config(config_path);
      return cmd->fn(cfg, opts, out);
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericCorruption;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kConfigError;
}

}  // namespace liouville::app
