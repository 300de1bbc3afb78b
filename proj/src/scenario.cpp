#include "etm/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "etm/analysis.hpp"
#include "etm/errors.hpp"
#include "etm/model.hpp"
#include "etm/simulate.hpp"
#include "etm/steady.hpp"
#include "etm/volterra.hpp"

namespace etm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

// ------------------------------------------------------------- json plumbing

const json& field(const json& j, const char* key, const char* where) {
  require(j.is_object(),
          std::string("config: ") + where + " must be an object");
  const auto it = j.find(key);
  require(it != j.end(), std::string("config: ") + where + " is missing '" +
                             key + "'");
  return *it;
}

// Unknown keys are typos until proven otherwise.
void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  require(j.is_object(),
          std::string("config: ") + where + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    require(known, std::string("config: unknown key '") + item.key() +
                       "' in " + where);
  }
}

double number(const json& j, const char* key, const char* where) {
  const json& v = field(j, key, where);
  require(v.is_number(), std::string("config: ") + where + "." + key +
                             " must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double dflt,
                 const char* where) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return number(j, key, where);
}

std::int64_t integer(const json& j, const char* key, const char* where) {
  const json& v = field(j, key, where);
  require(v.is_number_integer(), std::string("config: ") + where + "." + key +
                                     " must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t integer_or(const json& j, const char* key, std::int64_t dflt,
                        const char* where) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return integer(j, key, where);
}

std::string text(const json& j, const char* key, const char* where) {
  const json& v = field(j, key, where);
  require(v.is_string(), std::string("config: ") + where + "." + key +
                             " must be a string");
  return v.get<std::string>();
}

// ------------------------------------------------------------ parsed pieces

FiringCoefficient parse_coefficient(const json& j) {
  const std::string kind = text(j, "kind", "model.coefficient");
  if (kind == "constant") {
    check_keys(j, {"kind", "s0"}, "model.coefficient");
    return FiringCoefficient::constant(number(j, "s0", "model.coefficient"));
  }
  if (kind == "step") {
    check_keys(j, {"kind", "sigma"}, "model.coefficient");
    return FiringCoefficient::step(number(j, "sigma", "model.coefficient"));
  }
  if (kind == "step_sigmoid") {
    check_keys(j, {"kind", "sigma", "base", "ell_scale"}, "model.coefficient");
    return FiringCoefficient::step_sigmoid(
        number(j, "sigma", "model.coefficient"),
        number(j, "base", "model.coefficient"),
        number(j, "ell_scale", "model.coefficient"));
  }
  if (kind == "step_linear") {
    check_keys(j, {"kind", "sigma", "base", "slope", "x_cap"},
               "model.coefficient");
    return FiringCoefficient::step_linear(
        number(j, "sigma", "model.coefficient"),
        number(j, "base", "model.coefficient"),
        number(j, "slope", "model.coefficient"),
        number(j, "x_cap", "model.coefficient"));
  }
  throw ValidationError("config: unknown coefficient kind '" + kind + "'");
}

DelayKernel parse_kernel(const json& j, const char* where) {
  const std::string kind = text(j, "kind", where);
  const double tail_tol = number_or(j, "tail_tol", 1e-6, where);
  if (kind == "exponential") {
    check_keys(j, {"kind", "beta", "tail_tol"}, where);
    return DelayKernel::exponential(number(j, "beta", where), tail_tol);
  }
  if (kind == "algebraic") {
    check_keys(j, {"kind", "beta", "tail_tol"}, where);
    return DelayKernel::algebraic(number(j, "beta", where), tail_tol);
  }
  throw ValidationError(std::string("config: unknown kernel kind '") + kind +
                        "' in " + where + " (expected exponential|algebraic)");
}

struct ModelSpec {
  FiringCoefficient s;
  Interaction interaction = Interaction::instantaneous;
  std::optional<DelayKernel> kernel;  // discrete_delay / distributed
  double frozen_activity = 0;         // linear_frozen
  AgeGrid grid;
  double t_end = 0;
  std::int64_t record_every = 1;
};

ModelSpec parse_model(const json& j) {
  check_keys(j,
             {"coefficient", "interaction", "dt", "extent", "cells", "t_end",
              "record_every"},
             "model");
  FiringCoefficient s = parse_coefficient(field(j, "coefficient", "model"));

  const double dt = number(j, "dt", "model");
  require(std::isfinite(dt) && dt > 0, "config: model.dt must be positive");
  AgeGrid grid;
  if (j.contains("cells")) {
    require(!j.contains("extent"),
            "config: model takes either 'cells' or 'extent', not both");
    grid = AgeGrid(dt, integer(j, "cells", "model"));
  } else {
    grid = AgeGrid::covering(
        dt, number_or(j, "extent", s.suggested_extent(), "model"));
  }

  ModelSpec m{std::move(s), Interaction::instantaneous, std::nullopt,
              0.0,          grid,
              number_or(j, "t_end", 0.0, "model"),
              integer_or(j, "record_every", 1, "model")};
  require(m.record_every >= 1, "config: model.record_every must be >= 1");

  const json& ij = field(j, "interaction", "model");
  const std::string kind = text(ij, "kind", "model.interaction");
  if (kind == "instantaneous") {
    check_keys(ij, {"kind"}, "model.interaction");
    m.interaction = Interaction::instantaneous;
  } else if (kind == "discrete_delay") {
    check_keys(ij, {"kind", "delay"}, "model.interaction");
    m.interaction = Interaction::discrete_delay;
    m.kernel = DelayKernel::point_mass(number(ij, "delay", "model.interaction"));
  } else if (kind == "distributed") {
    check_keys(ij, {"kind", "kernel"}, "model.interaction");
    m.interaction = Interaction::distributed;
    m.kernel = parse_kernel(field(ij, "kernel", "model.interaction"),
                            "model.interaction.kernel");
  } else if (kind == "linear_frozen") {
    check_keys(ij, {"kind", "activity"}, "model.interaction");
    m.interaction = Interaction::linear_frozen;
    m.frozen_activity = number(ij, "activity", "model.interaction");
    require(std::isfinite(m.frozen_activity) && m.frozen_activity >= 0,
            "config: model.interaction.activity must be >= 0");
  } else {
    throw ValidationError("config: unknown interaction kind '" + kind + "'");
  }
  return m;
}

struct SteadyTask {};
struct SimulateTask {
  bool tv = true;
};
struct LinearGapTask {
  double r_bar = 0, t_end = 0;
  std::int64_t probes = 0;
};
struct RateFitTask {
  std::string series;  // tv | rate-gap | activity-gap
  FitKind kind = FitKind::exponential;
  double t_lo = 0, t_hi = 0;
};
struct CertificateTask {
  SupersolutionCertificate cert;
};
struct VolterraCheckTask {
  SupersolutionCertificate cert;
  double t_end = 0;
  std::optional<double> dt;
};
using Task = std::variant<SteadyTask, SimulateTask, LinearGapTask, RateFitTask,
                          CertificateTask, VolterraCheckTask>;

SupersolutionCertificate parse_certificate(const json& j, const char* where) {
  const std::string kind = text(j, "kind", where);
  CertificateConstants c;
  c.ell = number(j, "ell", where);
  c.lambda = number(j, "lambda", where);
  c.c1 = number(j, "c1", where);
  c.c2 = number(j, "c2", where);
  c.c3 = number(j, "c3", where);
  if (kind == "discrete_delay") {
    check_keys(j, {"kind", "ell", "lambda", "c1", "c2", "c3", "d"}, where);
    c.d = number(j, "d", where);
    return build_exponential_certificate(CertificateKind::discrete_delay, c);
  }
  if (kind == "distributed_exp") {
    check_keys(j, {"kind", "ell", "lambda", "c1", "c2", "c3", "c_alpha", "beta"},
               where);
    c.c_alpha = number(j, "c_alpha", where);
    c.beta = number(j, "beta", where);
    return build_exponential_certificate(CertificateKind::distributed_exp, c);
  }
  if (kind == "distributed_algebraic") {
    check_keys(j,
               {"kind", "ell", "lambda", "c1", "c2", "c3", "c_alpha", "beta",
                "net_points"},
               where);
    c.c_alpha = number(j, "c_alpha", where);
    c.beta = number(j, "beta", where);
    return build_algebraic_certificate(
        c, integer_or(j, "net_points", 16384, where));
  }
  throw ValidationError(std::string("config: unknown certificate kind '") +
                        kind + "' in " + where);
}

Task parse_task(const json& j, std::size_t index) {
  const std::string where = "tasks[" + std::to_string(index) + "]";
  const std::string kind = text(j, "kind", where.c_str());
  if (kind == "steady") {
    check_keys(j, {"kind"}, where.c_str());
    return SteadyTask{};
  }
  if (kind == "simulate") {
    check_keys(j, {"kind", "tv"}, where.c_str());
    SimulateTask t;
    if (j.contains("tv")) {
      require(j["tv"].is_boolean(),
              "config: " + where + ".tv must be a boolean");
      t.tv = j["tv"].get<bool>();
    }
    return t;
  }
  if (kind == "linear-gap") {
    check_keys(j, {"kind", "r_bar", "t_end", "probes"}, where.c_str());
    LinearGapTask t;
    t.r_bar = number(j, "r_bar", where.c_str());
    t.t_end = number(j, "t_end", where.c_str());
    t.probes = integer(j, "probes", where.c_str());
    return t;
  }
  if (kind == "rate-fit") {
    check_keys(j, {"kind", "series", "fit", "window"}, where.c_str());
    RateFitTask t;
    t.series = text(j, "series", where.c_str());
    require(t.series == "tv" || t.series == "rate-gap" ||
                t.series == "activity-gap",
            "config: " + where +
                ".series must be tv|rate-gap|activity-gap");
    const std::string fit = text(j, "fit", where.c_str());
    require(fit == "exponential" || fit == "algebraic",
            "config: " + where + ".fit must be exponential|algebraic");
    t.kind = fit == "exponential" ? FitKind::exponential : FitKind::algebraic;
    const json& w = field(j, "window", where.c_str());
    require(w.is_array() && w.size() == 2 && w[0].is_number() &&
                w[1].is_number(),
            "config: " + where + ".window must be [t_lo, t_hi]");
    t.t_lo = w[0].get<double>();
    t.t_hi = w[1].get<double>();
    return t;
  }
  if (kind == "certificate") {
    check_keys(j, {"kind", "certificate"}, where.c_str());
    return CertificateTask{parse_certificate(
        field(j, "certificate", where.c_str()), (where + ".certificate").c_str())};
  }
  if (kind == "volterra-check") {
    check_keys(j, {"kind", "certificate", "t_end", "dt"}, where.c_str());
    VolterraCheckTask t{parse_certificate(field(j, "certificate", where.c_str()),
                                          (where + ".certificate").c_str()),
                        number(j, "t_end", where.c_str()),
                        std::nullopt};
    if (j.contains("dt")) t.dt = number(j, "dt", where.c_str());
    require(t.cert.kind == CertificateKind::discrete_delay || t.dt.has_value(),
            "config: " + where + " needs an explicit dt for distributed kinds");
    return t;
  }
  throw ValidationError("config: unknown task kind '" + kind + "'");
}

struct ScenarioSpec {
  std::string name;
  std::uint64_t seed = 1;
  fs::path config_dir;
  fs::path output_dir;
  ModelSpec model;
  std::optional<json> initial_density;
  std::optional<json> rate_history;
  std::vector<Task> tasks;
  std::string raw_bytes;
};

// Checks the blocks that tasks consume lazily, so `validate` fails where
// `run` would.
void check_initial_specs(const ScenarioSpec& spec) {
  if (spec.initial_density) {
    const json& j = *spec.initial_density;
    const std::string kind = text(j, "kind", "initial.density");
    if (kind == "uniform") {
      check_keys(j, {"kind"}, "initial.density");
    } else if (kind == "equilibrium_perturbed") {
      check_keys(j, {"kind", "relative_amplitude"}, "initial.density");
      const double amp = number(j, "relative_amplitude", "initial.density");
      require(amp >= 0 && amp < 1,
              "config: initial.density.relative_amplitude must be in [0, 1)");
    } else if (kind == "tabulated") {
      check_keys(j, {"kind", "path"}, "initial.density");
      const fs::path p =
          spec.config_dir / text(j, "path", "initial.density");
      require(fs::exists(p),
              "config: initial.density.path does not exist: " + p.string());
    } else {
      throw ValidationError("config: unknown initial.density kind '" + kind +
                            "'");
    }
  }
  if (spec.rate_history) {
    const json& j = *spec.rate_history;
    const std::string kind = text(j, "kind", "initial.rate_history");
    if (kind == "constant") {
      check_keys(j, {"kind", "value"}, "initial.rate_history");
      require(number(j, "value", "initial.rate_history") >= 0,
              "config: initial.rate_history.value must be >= 0");
    } else if (kind == "scaled_equilibrium") {
      check_keys(j, {"kind", "factor"}, "initial.rate_history");
      require(number(j, "factor", "initial.rate_history") >= 0,
              "config: initial.rate_history.factor must be >= 0");
    } else if (kind == "tabulated") {
      check_keys(j, {"kind", "path"}, "initial.rate_history");
      const fs::path p =
          spec.config_dir / text(j, "path", "initial.rate_history");
      require(fs::exists(p),
              "config: initial.rate_history.path does not exist: " +
                  p.string());
    } else {
      throw ValidationError("config: unknown initial.rate_history kind '" +
                            kind + "'");
    }
  }
}

ScenarioSpec parse_spec(const json& root, const fs::path& config_dir,
                        std::string raw_bytes) {
  check_keys(root, {"name", "seed", "output_dir", "model", "initial", "tasks"},
             "the scenario");
  ScenarioSpec spec{text(root, "name", "the scenario"),
                    1,
                    config_dir,
                    config_dir / text(root, "output_dir", "the scenario"),
                    parse_model(field(root, "model", "the scenario")),
                    std::nullopt,
                    std::nullopt,
                    {},
                    std::move(raw_bytes)};
  require(!spec.name.empty(), "config: name must not be empty");
  const std::int64_t seed = integer_or(root, "seed", 1, "the scenario");
  require(seed >= 0, "config: seed must be a nonnegative integer");
  spec.seed = static_cast<std::uint64_t>(seed);

  if (root.contains("initial")) {
    const json& init = root["initial"];
    check_keys(init, {"density", "rate_history"}, "initial");
    if (init.contains("density")) spec.initial_density = init["density"];
    if (init.contains("rate_history")) spec.rate_history = init["rate_history"];
  }
  check_initial_specs(spec);

  const json& tasks = field(root, "tasks", "the scenario");
  require(tasks.is_array() && !tasks.empty(),
          "config: tasks must be a non-empty array");
  for (std::size_t i = 0; i < tasks.size(); ++i)
    spec.tasks.push_back(parse_task(tasks[i], i));

  const bool simulates =
      std::any_of(spec.tasks.begin(), spec.tasks.end(), [](const Task& t) {
        return std::holds_alternative<SimulateTask>(t);
      });
  if (simulates) {
    require(spec.initial_density.has_value(),
            "config: simulate tasks need initial.density");
    const bool needs_past =
        spec.model.interaction == Interaction::discrete_delay ||
        spec.model.interaction == Interaction::distributed;
    require(!needs_past || spec.rate_history.has_value(),
            "config: delay interactions need initial.rate_history");
  }
  return spec;
}

// -------------------------------------------------------------- run support

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NumericalError("cannot open " + path.string());
  out << body;
  if (!out.flush())
    throw NumericalError("short write to " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

// Scratch shared by the tasks of one run: equilibria and traces are computed
// once and consumed by later tasks.
struct RunState {
  const ScenarioSpec& spec;
  std::mt19937_64 rng;
  std::optional<Equilibrium> equilibrium;
  std::optional<DiscreteAnchor> anchor;
  std::optional<AgeDensity> anchor_profile;
  std::optional<SimResult> run;
  bool tv_enabled = false;

  explicit RunState(const ScenarioSpec& s) : spec(s), rng(s.seed) {}
};

const Equilibrium& ensure_equilibrium(RunState& st) {
  if (!st.equilibrium)
    st.equilibrium = solve_equilibrium(st.spec.model.s, st.spec.model.grid);
  return *st.equilibrium;
}

// Stationary rate/activity pair of the configured interaction, in the
// discrete observable the traces record; decay fits measure distances to it.
void ensure_anchor(RunState& st) {
  if (st.anchor) return;
  const ModelSpec& m = st.spec.model;
  switch (m.interaction) {
    case Interaction::linear_frozen: {
      DiscreteAnchor a;
      a.x = m.frozen_activity;
      a.r = stationary_quadrature_rate(m.s, a.x, m.grid);
      st.anchor = a;
      break;
    }
    case Interaction::distributed: {
      const ActivityTable table(*m.kernel, m.grid.delta);
      st.anchor = discrete_anchor(m.s, m.grid, table.anchor_weight());
      break;
    }
    default:
      st.anchor = discrete_anchor(m.s, m.grid, 1.0);
  }
  st.anchor_profile = stationary_profile(m.s, st.anchor->x, m.grid);
}

AgeDensity build_initial(RunState& st) {
  const json& j = *st.spec.initial_density;
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "uniform") {
    AgeDensity d(st.spec.model.grid);
    for (double& c : d.cells) c = 1.0;
    d.normalize();
    return d;
  }
  if (kind == "equilibrium_perturbed") {
    ensure_anchor(st);
    const double amp = j["relative_amplitude"].get<double>();
    AgeDensity d = *st.anchor_profile;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& c : d.cells) c *= 1.0 + amp * (2.0 * unit(st.rng) - 1.0);
    d.normalize();
    return d;
  }
  // tabulated
  const fs::path p = st.spec.config_dir / j["path"].get<std::string>();
  std::ifstream in(p);
  require(static_cast<bool>(in), "config: cannot read " + p.string());
  AgeDensity d = read_density_csv(in);
  require(d.grid == st.spec.model.grid,
          "config: tabulated density grid does not match the model grid");
  return d;
}

HistoryFunction build_history(RunState& st) {
  const double dt = st.spec.model.grid.delta;
  if (!st.spec.rate_history) return HistoryFunction::constant_past(0.0, dt);
  const json& j = *st.spec.rate_history;
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "constant")
    return HistoryFunction::constant_past(j["value"].get<double>(), dt);
  if (kind == "scaled_equilibrium") {
    ensure_anchor(st);
    return HistoryFunction::constant_past(
        j["factor"].get<double>() * st.anchor->r, dt);
  }
  // tabulated: rows "t,r" with t <= 0 ascending, optional header
  const fs::path p = st.spec.config_dir / j["path"].get<std::string>();
  std::ifstream in(p);
  require(static_cast<bool>(in), "config: cannot read " + p.string());
  std::vector<double> t, r;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (t.empty() && line.rfind("t", 0) == 0) continue;
    double ti = 0, ri = 0;
    require(std::sscanf(line.c_str(), "%lf,%lf", &ti, &ri) == 2,
            "config: malformed rate history row: " + line);
    t.push_back(ti);
    r.push_back(ri);
  }
  return HistoryFunction::tabulated_past(std::move(t), std::move(r), dt);
}

std::string artifact_name(std::size_t index, const std::string& stem) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu-", index + 1);
  return buf + stem;
}

struct TaskRunner {
  RunState& st;
  std::size_t index;
  std::vector<std::string>& artifacts;

  void emit(const std::string& stem, const std::string& body) const {
    const std::string name = artifact_name(index, stem);
    write_file(st.spec.output_dir / name, body);
    artifacts.push_back(name);
  }
  void emit_json(const std::string& stem, const json& j) const {
    const std::string name = artifact_name(index, stem);
    write_json(st.spec.output_dir / name, j);
    artifacts.push_back(name);
  }

  void operator()(const SteadyTask&) const {
    const Equilibrium& eq = ensure_equilibrium(st);
    json j;
    j["r_star"] = eq.r_star;
    j["x_star"] = eq.x_star;
    j["rescale_factor"] = eq.rescale_factor;
    j["grid"] = {{"delta", st.spec.model.grid.delta},
                 {"cells", st.spec.model.grid.n_cells}};
    emit_json("steady.json", j);
  }

  void operator()(const SimulateTask& t) const {
    const ModelSpec& m = st.spec.model;
    SimConfig cfg;
    cfg.interaction = m.interaction;
    cfg.t_end = m.t_end;
    cfg.record_every = m.record_every;
    if (m.interaction == Interaction::discrete_delay ||
        m.interaction == Interaction::distributed)
      cfg.kernel = m.kernel;
    if (m.interaction == Interaction::linear_frozen)
      cfg.frozen_activity = m.frozen_activity;
    if (t.tv) {
      ensure_anchor(st);
      cfg.tv_reference = st.anchor_profile;
    }

    const AgeDensity initial = build_initial(st);
    const HistoryFunction past = build_history(st);
    SimResult res = simulate(m.s, initial, past, cfg);

    std::string csv = "t,r,X,mass,tv\n";
    for (const TraceRow& row : res.trace) {
      csv += g17(row.t) + "," + g17(row.r) + "," + g17(row.x) + "," +
             g17(row.mass) + ",";
      if (t.tv) csv += g17(row.tv);
      csv += "\n";
    }
    emit("trace.csv", csv);

    std::ostringstream density;
    write_density_csv(density, res.final_density);
    emit("density.csv", density.str());

    st.run = std::move(res);
    st.tv_enabled = t.tv;
  }

  void operator()(const LinearGapTask& t) const {
    const LinearGapReport rep =
        measure_linear_gap(st.spec.model.s, t.r_bar, st.spec.model.grid,
                           t.t_end, t.probes, st.spec.seed);
    emit("linear-gap.json", rep.to_json() + "\n");
  }

  void operator()(const RateFitTask& t) const {
    require(st.run.has_value(),
            "config: rate-fit tasks need an earlier simulate task");
    ensure_anchor(st);
    std::vector<double> ts, vs;
    for (const TraceRow& row : st.run->trace) {
      ts.push_back(row.t);
      if (t.series == "tv") {
        require(st.tv_enabled,
                "config: rate-fit over tv needs the simulate tv column");
        vs.push_back(row.tv);
      } else if (t.series == "rate-gap") {
        vs.push_back(std::abs(row.r - st.anchor->r));
      } else {
        vs.push_back(std::abs(row.x - st.anchor->x));
      }
    }
    const RateFit fit = fit_decay(ts, vs, t.kind, t.t_lo, t.t_hi);
    json j = json::parse(fit.to_json());
    j["series"] = t.series;
    emit_json("rate-fit-" + t.series + ".json", j);
  }

  void operator()(const CertificateTask& t) const {
    emit("certificate.json", t.cert.to_json() + "\n");
  }

  void operator()(const VolterraCheckTask& t) const {
    json j;
    j["certificate"] = json::parse(t.cert.to_json());
    if (!t.cert.admissible) {
      // Inadmissible draws are reported as-is; there is nothing to check.
      j["check"] = nullptr;
    } else {
      const double dt = t.dt ? *t.dt : certificate_check_dt(t.cert);
      const Series cand = certificate_candidate(t.cert, t.t_end, dt);
      const ComparisonCheck chk =
          t.cert.kind == CertificateKind::discrete_delay
              ? check_comparison_discrete(
                    certificate_problem_delay(t.cert, t.t_end, dt), cand,
                    Side::upper)
              : check_comparison_convolution(
                    certificate_problem_distributed(t.cert, t.t_end, dt), cand,
                    Side::upper);
      j["check"] = {{"pass", chk.pass},
                    {"margin", chk.margin},
                    {"dt", dt},
                    {"t_end", t.t_end}};
    }
    emit_json("volterra-check.json", j);
  }
};

std::string config_hash(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(bytes));
  return buf;
}

void log_error(const std::optional<fs::path>& out_dir, const fs::path& config,
               const char* stage, const std::string& what) {
  fs::path dir = out_dir ? *out_dir : config.parent_path();
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream log(dir / "errors.log", std::ios::app);
  if (log) log << stage << ": " << what << "\n";
  std::cerr << config.string() << ": " << stage << ": " << what << "\n";
}

ScenarioSpec load_spec(const fs::path& config_path,
                       std::optional<fs::path>& out_dir) {
  std::ifstream in(config_path, std::ios::binary);
  require(static_cast<bool>(in),
          "config: cannot read " + config_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string bytes = buf.str();

  json root;
  try {
    root = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: not valid JSON: ") + e.what());
  }
  const fs::path dir = config_path.parent_path();
  // Resolve the output directory first so later failures can still land in
  // errors.log there.
  if (root.is_object() && root.contains("output_dir") &&
      root["output_dir"].is_string())
    out_dir = dir / root["output_dir"].get<std::string>();
  return parse_spec(root, dir, std::move(bytes));
}

}  // namespace

std::string version_string() { return kVersion; }

int run_scenario(const std::string& config_path) {
  const fs::path path(config_path);
  std::optional<fs::path> out_dir;
  try {
    const auto wall_start = std::chrono::steady_clock::now();
    const ScenarioSpec spec = load_spec(path, out_dir);
    fs::create_directories(spec.output_dir);

    RunState st(spec);
    std::vector<std::string> artifacts;
    for (std::size_t i = 0; i < spec.tasks.size(); ++i)
      std::visit(TaskRunner{st, i, artifacts}, spec.tasks[i]);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
            .count();
    json manifest;
    manifest["name"] = spec.name;
    manifest["seed"] = spec.seed;
    manifest["config_hash"] = config_hash(spec.raw_bytes);
    manifest["artifacts"] = artifacts;
    manifest["versions"] = {
        {"etm", kVersion},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                              "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"compiler", __VERSION__}};
    manifest["wall_clock_seconds"] = wall;
    write_json(spec.output_dir / "manifest.json", manifest);
    return 0;
  } catch (const ValidationError& e) {
    log_error(out_dir, path, "validation", e.what());
    return 2;
  } catch (const NumericalError& e) {
    log_error(out_dir, path, "numerical", e.what());
    return 3;
  } catch (const std::exception& e) {
    log_error(out_dir, path, "internal", e.what());
    return 3;
  }
}

int validate_scenario(const std::string& config_path) {
  std::optional<fs::path> out_dir;
  try {
    load_spec(config_path, out_dir);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return 2;
  }
}

}  // namespace etm
