#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "liouville/app.hpp"
#include "liouville/error.hpp"
#include "liouville/field_io.hpp"

namespace liouville::app {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InvalidInput(fmt::format("config field '{}': {}", path, what));
}

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string item(const std::string& path, std::size_t k) {
  return fmt::format("{}[{}]", path, k);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) fail(child(path, it.key()), "unknown field");
  }
}

double get_real(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

long long get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected an integer");
  return v.get<long long>();
}

std::vector<double> get_reals(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(get_real(v[k], item(path, k)));
  return out;
}

std::array<double, 2> get_point(const json& v, const std::string& path) {
  auto xy = get_reals(v, path);
  if (xy.size() != 2) fail(path, "expected [x, y]");
  return {xy[0], xy[1]};
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::vector<std::vector<double>> parse_matrix(const json& v, std::size_t n) {
  if (!v.is_array() || v.empty()) fail("A", "expected a non-empty array");
  std::vector<std::vector<double>> rows;
  if (v[0].is_array()) {
    for (std::size_t r = 0; r < v.size(); ++r) rows.push_back(get_reals(v[r], item("A", r)));
  } else {
    auto flat = get_reals(v, "A");
    if (flat.size() != n * n) {
      fail("A", fmt::format("flat row-major form needs {} entries for {} components, got {}",
                            n * n, n, flat.size()));
    }
    for (std::size_t r = 0; r < n; ++r)
      rows.emplace_back(flat.begin() + r * n, flat.begin() + (r + 1) * n);
  }
  if (rows.size() != n) {
    fail("A", fmt::format("{} rows for {} components (length of rho)", rows.size(), n));
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != n) fail(item("A", r), fmt::format("expected {} entries", n));
  }
  return rows;
}

void parse_solver(const json& v, SolverOptions& s) {
  reject_unknown(v, "solver",
                 {"max_iters", "tol_h_minus_1", "armijo_c", "backtrack_factor", "initial_step",
                  "record_trace"});
  if (v.contains("max_iters")) {
    auto m = get_int(v["max_iters"], "solver.max_iters");
    if (m < 0 || m > 100000000) fail("solver.max_iters", "must be in [0, 1e8]");
    s.max_iters = static_cast<int>(m);
  }
  if (v.contains("tol_h_minus_1")) s.tol_h_minus_1 = get_real(v["tol_h_minus_1"], "solver.tol_h_minus_1");
  if (v.contains("armijo_c")) s.armijo_c = get_real(v["armijo_c"], "solver.armijo_c");
  if (v.contains("backtrack_factor"))
    s.backtrack_factor = get_real(v["backtrack_factor"], "solver.backtrack_factor");
  if (v.contains("initial_step")) s.initial_step = get_real(v["initial_step"], "solver.initial_step");
  if (v.contains("record_trace")) s.record_trace = get_bool(v["record_trace"], "solver.record_trace");
  try {
    s.validate();
  } catch (const InvalidInput& e) {
    fail("solver", e.what());
  }
}

void parse_sweep(const json& v, SweepBlock& s, int n) {
  reject_unknown(v, "sweep", {"axes", "minimize"});
  if (v.contains("minimize")) s.minimize = get_bool(v["minimize"], "sweep.minimize");
  if (!v.contains("axes")) return;
  const auto& axes = v["axes"];
  if (!axes.is_array()) fail("sweep.axes", "expected an array");
  if (axes.size() > 2) fail("sweep.axes", "at most two components may vary");
  std::set<int> seen;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const std::string p = item("sweep.axes", k);
    reject_unknown(axes[k], p, {"component", "min", "max", "steps"});
    for (const char* key : {"component", "min", "max", "steps"})
      if (!axes[k].contains(key)) fail(child(p, key), "missing");
    SweepAxis ax;
    auto c = get_int(axes[k]["component"], child(p, "component"));
    if (c < 1 || c > n) fail(child(p, "component"), fmt::format("must be in 1..{}", n));
    ax.component = static_cast<int>(c);
    if (!seen.insert(ax.component).second) fail(child(p, "component"), "component repeated");
    ax.min = get_real(axes[k]["min"], child(p, "min"));
    ax.max = get_real(axes[k]["max"], child(p, "max"));
    auto steps = get_int(axes[k]["steps"], child(p, "steps"));
    if (steps < 1 || steps > 100000) fail(child(p, "steps"), "must be in [1, 1e5]");
    ax.steps = static_cast<int>(steps);
    if (!(ax.min > 0.0)) fail(child(p, "min"), "rho must stay positive");
    if (ax.max < ax.min) fail(child(p, "max"), "must be >= min");
    if (ax.steps == 1 && ax.max != ax.min) fail(child(p, "steps"), "one step needs min == max");
    s.axes.push_back(ax);
  }
}

std::vector<int> parse_subset(const json& v, const std::string& path, int n) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of component numbers");
  std::vector<int> out;
  std::set<int> seen;
  for (std::size_t k = 0; k < v.size(); ++k) {
    auto c = get_int(v[k], item(path, k));
    if (c < 1 || c > n) fail(item(path, k), fmt::format("must be in 1..{}", n));
    if (!seen.insert(static_cast<int>(c)).second) fail(item(path, k), "component repeated");
    out.push_back(static_cast<int>(c));
  }
  return out;
}

void parse_blowup(const json& v, BlowupBlock& b, int n, int grid_n) {
  reject_unknown(v, "blowup", {"lambda_list", "subset", "point"});
  if (v.contains("lambda_list")) b.lambda_list = get_reals(v["lambda_list"], "blowup.lambda_list");
  if (b.lambda_list.size() < 2) fail("blowup.lambda_list", "needs at least two values");
  for (std::size_t k = 0; k < b.lambda_list.size(); ++k) {
    const double l = b.lambda_list[k];
    if (!(l > 0.0)) fail(item("blowup.lambda_list", k), "must be positive");
    if (l > grid_n / 8.0) {
      fail(item("blowup.lambda_list", k),
           fmt::format("lambda {} is not resolved on an n = {} grid (limit n/8 = {})", l, grid_n,
                       grid_n / 8.0));
    }
    if (k > 0 && !(l > b.lambda_list[k - 1])) fail(item("blowup.lambda_list", k), "must increase");
  }
  if (v.contains("subset")) b.subset = parse_subset(v["subset"], "blowup.subset", n);
  if (v.contains("point") && !v["point"].is_null()) b.point = get_point(v["point"], "blowup.point");
}

void parse_pohozaev(const json& v, PohozaevBlock& p, int grid_n) {
  reject_unknown(v, "pohozaev",
                 {"field", "path", "bubble_lambda", "center", "point", "radii", "continuation_steps"});
  if (v.contains("field")) p.field = get_string(v["field"], "pohozaev.field");
  if (p.field != "bubble" && p.field != "zero" && p.field != "continuation" && p.field != "file") {
    fail("pohozaev.field", "expected one of bubble, zero, continuation, file");
  }
  if (v.contains("path")) p.path = get_string(v["path"], "pohozaev.path");
  if (p.field == "file" && p.path.empty()) fail("pohozaev.path", "required when field = file");
  if (v.contains("bubble_lambda")) p.bubble_lambda = get_real(v["bubble_lambda"], "pohozaev.bubble_lambda");
  if (!(p.bubble_lambda > 0.0)) fail("pohozaev.bubble_lambda", "must be positive");
  if (p.field == "bubble" && p.bubble_lambda > grid_n / 8.0) {
    fail("pohozaev.bubble_lambda",
         fmt::format("lambda {} is not resolved on an n = {} grid (limit n/8)", p.bubble_lambda, grid_n));
  }
  if (v.contains("center")) p.center = get_point(v["center"], "pohozaev.center");
  if (v.contains("point") && !v["point"].is_null()) p.point = get_point(v["point"], "pohozaev.point");
  if (v.contains("radii")) p.radii = get_reals(v["radii"], "pohozaev.radii");
  if (p.radii.empty()) fail("pohozaev.radii", "needs at least one radius");
  for (std::size_t k = 0; k < p.radii.size(); ++k) {
    if (k > 0 && !(p.radii[k] < p.radii[k - 1])) fail(item("pohozaev.radii", k), "must decrease strictly");
    if (p.radii[k] < 4.0 / grid_n) {
      fail(item("pohozaev.radii", k), fmt::format("below 4h = {}", 4.0 / grid_n));
    }
  }
  if (v.contains("continuation_steps")) {
    auto s = get_int(v["continuation_steps"], "pohozaev.continuation_steps");
    if (s < 1 || s > 50) fail("pohozaev.continuation_steps", "must be in 1..50");
    p.continuation_steps = static_cast<int>(s);
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc, "", {"grid_n", "A", "rho", "sources", "h_spec", "init", "seed", "solver",
                           "sweep", "blowup", "pohozaev"});
  ExperimentConfig cfg;
  for (const char* key : {"grid_n", "A", "rho"})
    if (!doc.contains(key)) fail(key, "missing");

  auto gn = get_int(doc["grid_n"], "grid_n");
  if (gn < 32 || gn > 8192 || (gn & (gn - 1)) != 0) fail("grid_n", "must be a power of two in [32, 8192]");
  cfg.grid_n = static_cast<int>(gn);

  cfg.rho = get_reals(doc["rho"], "rho");
  if (cfg.rho.empty() || cfg.rho.size() > static_cast<std::size_t>(kMaxComponents)) {
    fail("rho", fmt::format("needs 1..{} entries", kMaxComponents));
  }
  for (std::size_t k = 0; k < cfg.rho.size(); ++k)
    if (!(cfg.rho[k] > 0.0)) fail(item("rho", k), "must be positive");
  const auto n = cfg.rho.size();

  cfg.A = parse_matrix(doc["A"], n);
  try {
    (void)CouplingMatrix::from_rows(cfg.A);
  } catch (const InvalidInput& e) {
    fail("A", e.what());
  }

  if (doc.contains("sources")) {
    const auto& src = doc["sources"];
    if (!src.is_array()) fail("sources", "expected an array");
    for (std::size_t m = 0; m < src.size(); ++m) {
      const std::string p = item("sources", m);
      reject_unknown(src[m], p, {"point", "alpha"});
      if (!src[m].contains("point")) fail(child(p, "point"), "missing");
      if (!src[m].contains("alpha")) fail(child(p, "alpha"), "missing");
      SourceSpec s;
      auto xy = get_point(src[m]["point"], child(p, "point"));
      s.x = xy[0];
      s.y = xy[1];
      s.alpha = get_reals(src[m]["alpha"], child(p, "alpha"));
      if (s.alpha.size() != n) fail(child(p, "alpha"), fmt::format("expected {} entries", n));
      for (std::size_t i = 0; i < n; ++i)
        if (!(s.alpha[i] > -1.0)) fail(item(child(p, "alpha"), i), "must be > -1");
      cfg.sources.push_back(std::move(s));
    }
  }

  if (doc.contains("h_spec")) cfg.h_spec = get_string(doc["h_spec"], "h_spec");
  if (doc.contains("init")) cfg.init = get_string(doc["init"], "init");
  if (cfg.init != "zero" && cfg.init != "random") fail("init", "expected zero or random");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
      fail("seed", "expected a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("solver")) parse_solver(doc["solver"], cfg.solver);
  if (doc.contains("sweep")) parse_sweep(doc["sweep"], cfg.sweep, static_cast<int>(n));
  if (doc.contains("blowup")) parse_blowup(doc["blowup"], cfg.blowup, static_cast<int>(n), cfg.grid_n);
  if (doc.contains("pohozaev")) parse_pohozaev(doc["pohozaev"], cfg.pohozaev, cfg.grid_n);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open config file '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["grid_n"] = cfg.grid_n;
  j["A"] = cfg.A;
  j["rho"] = cfg.rho;
  j["sources"] = json::array();
  for (const auto& s : cfg.sources) j["sources"].push_back({{"point", {s.x, s.y}}, {"alpha", s.alpha}});
  j["h_spec"] = cfg.h_spec;
  j["init"] = cfg.init;
  j["seed"] = cfg.seed;
  j["solver"] = {{"max_iters", cfg.solver.max_iters},
                 {"tol_h_minus_1", cfg.solver.tol_h_minus_1},
                 {"armijo_c", cfg.solver.armijo_c},
                 {"backtrack_factor", cfg.solver.backtrack_factor},
                 {"initial_step", cfg.solver.initial_step},
                 {"record_trace", cfg.solver.record_trace}};
  json axes = json::array();
  for (const auto& a : cfg.sweep.axes)
    axes.push_back({{"component", a.component}, {"min", a.min}, {"max", a.max}, {"steps", a.steps}});
  j["sweep"] = {{"axes", axes}, {"minimize", cfg.sweep.minimize}};
  j["blowup"] = {{"lambda_list", cfg.blowup.lambda_list},
                 {"subset", cfg.blowup.subset},
                 {"point", cfg.blowup.point ? json(*cfg.blowup.point) : json(nullptr)}};
  j["pohozaev"] = {{"field", cfg.pohozaev.field},
                   {"path", cfg.pohozaev.path},
                   {"bubble_lambda", cfg.pohozaev.bubble_lambda},
                   {"center", cfg.pohozaev.center},
                   {"point", cfg.pohozaev.point ? json(*cfg.pohozaev.point) : json(nullptr)},
                   {"radii", cfg.pohozaev.radii},
                   {"continuation_steps", cfg.pohozaev.continuation_steps}};
  return j;
}

SingularModel build_model(const ExperimentConfig& cfg) {
  TorusGrid grid(cfg.grid_n);
  auto a = CouplingMatrix::from_rows(cfg.A);
  std::vector<SingularSource> sources;
  for (const auto& s : cfg.sources) sources.push_back({Point(s.x, s.y), s.alpha});

  std::vector<ScalarField> h;
  if (cfg.h_spec != "constant") {
    SystemField dump;
    try {
      dump = read_field_dump(cfg.h_spec);
    } catch (const std::exception& e) {
      fail("h_spec", e.what());
    }
    if (dump.grid().n() != cfg.grid_n) {
      fail("h_spec", fmt::format("dump grid n = {} but grid_n = {}", dump.grid().n(), cfg.grid_n));
    }
    const int n = a.size();
    if (dump.components() != 1 && dump.components() != n) {
      fail("h_spec", fmt::format("dump has {} components, expected 1 or {}", dump.components(), n));
    }
    for (int i = 0; i < n; ++i) h.push_back(dump[dump.components() == 1 ? 0 : i]);
  }
  try {
    return SingularModel(grid, std::move(a), std::move(sources), std::move(h));
  } catch (const InvalidInput& e) {
    fail(cfg.h_spec != "constant" ? "h_spec/sources" : "sources", e.what());
  }
}

}  // namespace liouville::app
