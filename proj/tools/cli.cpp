#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "mvsde/analysis.hpp"
#include "mvsde/model.hpp"

#ifndef MVSDE_VERSION
#define MVSDE_VERSION "0.1.0"
#endif

namespace mvsde::cli {
namespace {

const std::vector<std::pair<Command, std::string>> kCommands = {
    {Command::kSimulateWea, "simulate-wea"},
    {Command::kSimulateAwea, "simulate-awea"},
    {Command::kConvergence, "convergence"},
    {Command::kInvariantTest, "invariant-test"},
    {Command::kCost, "cost"},
    {Command::kCheckAssumptions, "check-assumptions"},
};

enum Scope : unsigned {
  kGlobal = 0,
  kSim = 1u << 0,  // simulate-wea, simulate-awea, invariant-test
  kConv = 1u << 1,
  kInv = 1u << 2,
  kCostCmd = 1u << 3,
  kCheck = 1u << 4,
};

unsigned scope_of(Command c) {
  switch (c) {
    case Command::kSimulateWea:
    case Command::kSimulateAwea:
      return kSim;
    case Command::kConvergence:
      return kConv;
    case Command::kInvariantTest:
      return kSim | kInv;
    case Command::kCost:
      return kCostCmd;
    case Command::kCheckAssumptions:
      return kCheck;
  }
  return 0;
}

struct KeySpec {
  std::string name;
  std::string fallback;  // empty: unset unless given
  unsigned scope;
  bool list;
  std::string help;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> keys = {
      {"workers", "1", kGlobal, false, "worker threads (outputs do not depend on it)"},
      {"out-dir", ".", kGlobal, false, "output directory"},
      {"seed", "0", kGlobal, false, "random seed"},
      {"model", "example2", kSim | kConv | kCheck, false, "built-in model name"},
      {"tau", "1", kSim | kConv | kCostCmd, false, "anchor period"},
      {"delta", "", kSim | kCostCmd, false, "inner step size, decimal or 2^-q (2^-8 unless M is given)"},
      {"M", "", kSim | kCostCmd, false, "inner steps per anchor block"},
      {"t", "100", kSim | kCostCmd, false, "horizon (multiple of tau)"},
      {"n", "1", kSim | kCostCmd, false, "number of particles N"},
      {"snapshots", "", kSim, true, "explicit snapshot times"},
      {"snapshot-first", "", kSim, false, "first time of a geometric snapshot schedule"},
      {"snapshot-ratio", "", kSim, false, "ratio of a geometric snapshot schedule"},
      {"oracle", "true", kSim, false, "compare against the model's known invariant law"},
      {"x0", "", kSim | kConv, true, "initial point (default origin)"},
      {"init-var", "0", kSim | kConv, false, "variance of a Gaussian initial law around x0"},
      {"fine-delta", "2^-13", kConv, false, "reference step size"},
      {"coarse-q", "5,6,7,8,9,10,11", kConv, true, "coarse step sizes 2^-q"},
      {"t-eval", "10,20", kConv, true, "evaluation times"},
      {"paths", "100", kConv, false, "number of coupled paths"},
      {"slope-min", "-0.65", kConv, false, "acceptance window lower end"},
      {"slope-max", "-0.35", kConv, false, "acceptance window upper end"},
      {"r2-min", "0.9", kConv, false, "minimum r^2 of the fit"},
      {"w2-threshold", "0.15", kInv, false, "maximum final W2 to the invariant law"},
      {"alpha", "0.05", kInv, false, "Jarque-Bera significance level"},
      {"kde-points", "200", kInv, false, "density grid size"},
      {"scheme", "wea", kCostCmd, false, "wea or awea"},
      {"epsilon", "", kCostCmd, false, "target accuracy for parameter selection"},
      {"rho", "", kCostCmd | kCheck, false, "moment exponent rho (cost: 1; check-assumptions: model value)"},
      {"rate-delta", "0.2", kCostCmd, false, "rate exponent delta"},
      {"samples", "10000", kCheck, false, "number of sampled points"},
      {"box-radius", "5", kCheck, false, "half-width of the state box"},
      {"measure-size", "6", kCheck, false, "max points of random measures"},
      {"measure-radius", "5", kCheck, false, "half-width of the measure box"},
      {"kappa1", "", kCheck, false, "override the shipped constant"},
      {"kappa2", "", kCheck, false, "override the shipped constant"},
      {"kappa1-bar", "", kCheck, false, "override the shipped constant"},
      {"kappa2-bar", "", kCheck, false, "override the shipped constant"},
      {"C", "", kCheck, false, "override the shipped constant"},
      {"L", "", kCheck, false, "override the shipped constant"},
  };
  return keys;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': '" + text + "'");
  }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("invalid non-negative integer for '" + key + "': '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ConfigError("integer out of range for '" + key + "': '" + text + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + text + "'");
}

bool is_anchor_time(double t, double tau) {
  const double r = t / tau;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::round(r));
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& [cmd, name] : kCommands) {
    if (cmd == c) return name;
  }
  return "?";
}

double parse_step(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.rfind("2^", 0) == 0) {
    const std::string exponent = text.substr(2);
    std::size_t used = 0;
    int q = 0;
    try {
      q = std::stoi(exponent, &used);
    } catch (const std::exception&) {
      throw ConfigError("invalid dyadic step '" + text + "'");
    }
    if (used != exponent.size()) throw ConfigError("invalid dyadic step '" + text + "'");
    return std::ldexp(1.0, q);
  }
  return parse_double("step", text);
}

ExperimentConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Invariant-measure approximation for McKean-Vlasov SDEs", "mvsde"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "file of 'key = value' lines");

  std::map<std::string, std::vector<std::string>> cli_values;
  std::map<std::string, std::vector<CLI::Option*>> options;
  for (const auto& k : key_table()) {
    if (k.scope == kGlobal) {
      auto* opt = app.add_option("--" + k.name, cli_values[k.name], k.help);
      if (k.list) opt->delimiter(','); else opt->expected(1);
      options[k.name].push_back(opt);
    }
  }
  std::map<std::string, CLI::App*> subs;
  for (const auto& [cmd, name] : kCommands) {
    auto* sub = app.add_subcommand(name);
    subs[name] = sub;
    for (const auto& k : key_table()) {
      if (k.scope != kGlobal && (k.scope & scope_of(cmd))) {
        auto* opt = sub->add_option("--" + k.name, cli_values[k.name], k.help);
        if (k.list) opt->delimiter(','); else opt->expected(1);
        options[k.name].push_back(opt);
      }
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw;
  } catch (const CLI::CallForAllHelp&) {
    throw;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  // Defaults, then file, then command line.
  std::map<std::string, std::string> values;
  for (const auto& k : key_table()) values[k.name] = k.fallback;
  std::set<std::string> given;
  std::optional<std::string> command_name;
  if (!config_path.empty()) {
    for (const auto& [key, value] : read_config_file(config_path)) {
      if (key == "command") {
        command_name = value;
      } else if (key == "version") {
        continue;
      } else if (find_key(key) == nullptr) {
        throw ConfigError("unknown config key '" + key + "'");
      } else {
        values[key] = value;
        given.insert(key);
      }
    }
  }
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command_name = name;
  }
  for (const auto& [key, opts] : options) {
    const bool on_cli = std::any_of(opts.begin(), opts.end(),
                                    [](const CLI::Option* o) { return o->count() > 0; });
    if (!on_cli) continue;
    std::string joined;
    for (const auto& v : cli_values[key]) joined += (joined.empty() ? "" : ",") + v;
    values[key] = joined;
    given.insert(key);
  }

  if (!command_name) throw ConfigError("no command given");
  ExperimentConfig cfg;
  bool found = false;
  for (const auto& [cmd, name] : kCommands) {
    if (name == *command_name) {
      cfg.command = cmd;
      found = true;
    }
  }
  if (!found) throw ConfigError("unknown command '" + *command_name + "'");

  // Keys outside the command's scope would be silently ignored; reject them.
  const unsigned scope = scope_of(cfg.command);
  for (const auto& key : given) {
    const auto* spec = find_key(key);
    if (spec->scope != kGlobal && !(spec->scope & scope)) {
      throw ConfigError("option '" + key + "' does not apply to " + *command_name);
    }
  }

  const auto get = [&](const std::string& k) -> const std::string& { return values.at(k); };

  cfg.workers = static_cast<int>(parse_unsigned("workers", get("workers")));
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  cfg.out_dir = get("out-dir");
  cfg.seed = parse_unsigned("seed", get("seed"));
  cfg.model = get("model");

  const double tau = parse_double("tau", get("tau"));
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  const bool has_delta = !get("delta").empty();
  const bool has_m = !get("M").empty();
  if (has_delta && has_m) {
    const double delta = parse_step(get("delta"));
    const auto m = parse_unsigned("M", get("M"));
    if (m == 0 || std::abs(tau / static_cast<double>(m) - delta) > 1e-12 * delta) {
      throw ConfigError("contradictory grid: delta = " + get("delta") + " but tau / M = " +
                        std::to_string(tau / static_cast<double>(m)));
    }
  }
  try {
    if (has_m) {
      const auto m = parse_unsigned("M", get("M"));
      if (m == 0 || m > 0xFFFFFFFFull) throw ConfigError("M must be in [1, 2^32)");
      cfg.grid = AnchorGrid{tau, static_cast<std::uint32_t>(m)};
      cfg.grid.validate();
    } else {
      const double delta = has_delta ? parse_step(get("delta")) : 0x1.0p-8;
      if (delta > tau) throw ConfigError("delta must not exceed tau");
      cfg.grid = AnchorGrid::from_delta(tau, delta);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }

  cfg.horizon_t = parse_double("t", get("t"));
  if (!(cfg.horizon_t > 0) || !is_anchor_time(cfg.horizon_t, tau)) {
    throw ConfigError("t = " + get("t") + " is not a positive multiple of tau = " + get("tau"));
  }
  cfg.n_particles = parse_unsigned("n", get("n"));
  if (cfg.n_particles == 0) throw ConfigError("n must be >= 1");
  cfg.oracle = parse_bool("oracle", get("oracle"));

  // Snapshot schedule.
  if (!get("snapshots").empty() && (!get("snapshot-first").empty() || !get("snapshot-ratio").empty())) {
    throw ConfigError("give either explicit snapshots or a geometric schedule, not both");
  }
  if (!get("snapshots").empty()) {
    for (const auto& s : split_list(get("snapshots"))) cfg.snapshot_times.push_back(parse_double("snapshots", s));
  } else if (!get("snapshot-first").empty()) {
    const double first = parse_double("snapshot-first", get("snapshot-first"));
    const double ratio = get("snapshot-ratio").empty() ? 2.0 : parse_double("snapshot-ratio", get("snapshot-ratio"));
    if (!(first > 0) || !(ratio > 1)) throw ConfigError("geometric schedule needs first > 0 and ratio > 1");
    for (double s = first; s <= cfg.horizon_t * (1 + 1e-12); s *= ratio) cfg.snapshot_times.push_back(s);
  } else if (cfg.command == Command::kInvariantTest) {
    for (double s = cfg.horizon_t / 8; s <= cfg.horizon_t * (1 + 1e-12); s *= 2) {
      if (is_anchor_time(s, tau)) cfg.snapshot_times.push_back(s);
    }
  }
  for (double s : cfg.snapshot_times) {
    if (s < 0 || s > cfg.horizon_t * (1 + 1e-12) || !is_anchor_time(s, tau)) {
      throw ConfigError("snapshot time " + std::to_string(s) + " is not an anchor time within [0, t]");
    }
  }
  if (cfg.snapshot_times.empty() ||
      std::abs(cfg.snapshot_times.back() - cfg.horizon_t) > 1e-9 * cfg.horizon_t) {
    if (cfg.command == Command::kInvariantTest) cfg.snapshot_times.push_back(cfg.horizon_t);
  }

  std::vector<double> x0;
  for (const auto& s : split_list(get("x0"))) x0.push_back(parse_double("x0", s));
  const double init_var = parse_double("init-var", get("init-var"));
  if (init_var < 0) throw ConfigError("init-var must be nonnegative");
  if (init_var > 0) {
    cfg.initial = InitialSampler::gaussian(x0.empty() ? 0.0 : x0.front(), init_var);
  } else {
    cfg.initial = InitialSampler::at(x0);
  }

  cfg.fine_delta = parse_step(get("fine-delta"));
  cfg.coarse_deltas.clear();
  for (const auto& s : split_list(get("coarse-q"))) {
    cfg.coarse_deltas.push_back(std::ldexp(1.0, -static_cast<int>(parse_unsigned("coarse-q", s))));
  }
  cfg.t_eval.clear();
  for (const auto& s : split_list(get("t-eval"))) cfg.t_eval.push_back(parse_double("t-eval", s));
  cfg.n_paths = parse_unsigned("paths", get("paths"));
  cfg.slope_min = parse_double("slope-min", get("slope-min"));
  cfg.slope_max = parse_double("slope-max", get("slope-max"));
  cfg.r2_min = parse_double("r2-min", get("r2-min"));

  cfg.w2_threshold = parse_double("w2-threshold", get("w2-threshold"));
  cfg.alpha = parse_double("alpha", get("alpha"));
  cfg.kde_points = parse_unsigned("kde-points", get("kde-points"));

  cfg.scheme = get("scheme");
  if (cfg.scheme != "wea" && cfg.scheme != "awea") throw ConfigError("scheme must be wea or awea");
  if (!get("epsilon").empty()) cfg.epsilon = parse_double("epsilon", get("epsilon"));
  if (!get("rho").empty()) cfg.rho = parse_double("rho", get("rho"));
  cfg.rate_delta = parse_double("rate-delta", get("rate-delta"));

  cfg.n_samples = parse_unsigned("samples", get("samples"));
  cfg.sampler.box_radius = parse_double("box-radius", get("box-radius"));
  cfg.sampler.measure_size = parse_unsigned("measure-size", get("measure-size"));
  cfg.sampler.measure_radius = parse_double("measure-radius", get("measure-radius"));
  for (const char* k : {"kappa1", "kappa2", "kappa1-bar", "kappa2-bar", "C", "L"}) {
    if (!get(k).empty()) cfg.constant_overrides[k] = parse_double(k, get(k));
  }
  if (cfg.command == Command::kCheckAssumptions && given.contains("rho")) {
    cfg.constant_overrides["rho"] = cfg.rho;
  }

  cfg.resolved["command"] = *command_name;
  for (const auto& k : key_table()) {
    if (k.scope == kGlobal || (k.scope & scope)) cfg.resolved[k.name] = values[k.name];
  }
  return cfg;
}

namespace {

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name) {
  std::ofstream out(std::filesystem::path(cfg.out_dir) / name);
  if (!out) throw ConfigError("cannot write " + name + " in '" + cfg.out_dir + "'");
  return out;
}

void write_manifest(const ExperimentConfig& cfg) {
  auto out = open_output(cfg, "manifest.txt");
  out << "# resolved configuration; rerun with: mvsde --config manifest.txt\n";
  out << "version = " << MVSDE_VERSION << '\n';
  out << "command = " << cfg.resolved.at("command") << '\n';
  for (const auto& [k, v] : cfg.resolved) {
    if (k == "command" || k == "out-dir" || v.empty()) continue;
    out << k << " = " << v << '\n';
  }
}

SimConfig sim_config(const ExperimentConfig& cfg) {
  SimConfig s;
  s.grid = cfg.grid;
  s.horizon_t = cfg.horizon_t;
  s.n_particles = cfg.n_particles;
  s.initial = cfg.initial;
  s.seed = cfg.seed;
  s.snapshot_times = cfg.snapshot_times;
  s.workers = cfg.workers;
  return s;
}

void write_sim_outputs(const ExperimentConfig& cfg, const SimOutput& out) {
  auto anchors = open_output(cfg, "anchors.csv");
  write_anchors_csv(anchors, out);
  auto snaps = open_output(cfg, "snapshots.csv");
  write_snapshots_csv(snaps, out);
}

int run_simulate(const ExperimentConfig& cfg, const ModelSpec& model, std::ostream& log) {
  SimConfig s = sim_config(cfg);
  SimOutput out;
  if (cfg.command == Command::kSimulateWea) {
    if (cfg.n_particles != 1) throw ConfigError("simulate-wea runs one path; use simulate-awea for n > 1");
    out = run_wea(model, s);
  } else {
    out = run_awea(model, s);
  }
  annotate_snapshots(out, cfg.oracle ? model.gaussian_oracle : std::nullopt);
  write_sim_outputs(cfg, out);
  const auto& last = out.snapshots.back().diagnostics;
  log << to_string(cfg.command) << ": " << out.n_particles() << " particle(s), "
      << out.n_anchors() << " anchors each; final mean " << last.mean[0]
      << ", second moment " << last.second_raw_moment << '\n';
  return kOk;
}

int run_invariant(const ExperimentConfig& cfg, const ModelSpec& model, std::ostream& log) {
  if (!model.gaussian_oracle) {
    throw ConfigError("model '" + model.name + "' has no known invariant law");
  }
  const auto& oracle = *model.gaussian_oracle;
  SimConfig s = sim_config(cfg);
  SimOutput out = cfg.n_particles == 1 ? run_wea(model, s) : run_awea(model, s);
  annotate_snapshots(out, oracle, cfg.alpha);
  write_sim_outputs(cfg, out);

  const double sd = std::sqrt(oracle.variance);
  const double lo = oracle.mean - 5 * sd, hi = oracle.mean + 5 * sd;
  std::vector<std::pair<std::string, DensityCurve>> curves;
  for (const auto& snap : out.snapshots) {
    std::ostringstream label;
    label << "t=" << snap.diagnostics.t;
    curves.emplace_back(label.str(), kde_1d(snap.measure.flat(), std::nullopt, lo, hi, cfg.kde_points));
  }
  DensityCurve exact;
  exact.bandwidth = 0;
  for (std::size_t i = 0; i < cfg.kde_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.kde_points - 1);
    exact.x.push_back(x);
    exact.density.push_back(std::exp(-0.5 * (x - oracle.mean) * (x - oracle.mean) / oracle.variance) /
                            std::sqrt(2 * M_PI * oracle.variance));
  }
  curves.emplace_back("oracle", exact);
  auto density = open_output(cfg, "density.csv");
  write_density_csv(density, curves);

  const auto& last = out.snapshots.back().diagnostics;
  const bool w2_ok = last.w2_to_oracle && *last.w2_to_oracle <= cfg.w2_threshold;
  const bool jb_ok = last.jb_reject && !*last.jb_reject;
  log << "invariant-test at t = " << last.t << ": W2 = " << last.w2_to_oracle.value_or(NAN)
      << " (threshold " << cfg.w2_threshold << "), JB = " << last.jb_stat.value_or(NAN)
      << (jb_ok ? " (normality not rejected)" : " (normality rejected)") << '\n';
  return (w2_ok && jb_ok) ? kOk : kAcceptanceFailed;
}

int run_convergence(const ExperimentConfig& cfg, const ModelSpec& model, std::ostream& log) {
  RmseConfig rc;
  rc.tau = cfg.grid.tau;
  rc.fine_delta = cfg.fine_delta;
  rc.coarse_deltas = cfg.coarse_deltas;
  rc.t_eval = cfg.t_eval;
  rc.n_paths = cfg.n_paths;
  rc.seed = cfg.seed;
  rc.initial = cfg.initial;
  rc.workers = cfg.workers;
  std::vector<RmseRow> rows;
  try {
    rows = rmse_paths(model, rc);
  } catch (const DivergenceError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  auto rates = open_output(cfg, "rates.csv");
  write_rates_csv(rates, rows);
  std::vector<std::pair<double, RateFit>> fits;
  bool ok = true;
  for (double t : cfg.t_eval) {
    auto fit = fit_rate(rate_points(rows, t));
    const bool pass = fit.slope >= cfg.slope_min && fit.slope <= cfg.slope_max &&
                      fit.r_squared >= cfg.r2_min;
    ok = ok && pass;
    log << "t = " << t << ": slope " << fit.slope << ", r2 " << fit.r_squared
        << (pass ? " ok" : " OUT OF WINDOW") << '\n';
    fits.emplace_back(t, std::move(fit));
  }
  auto fit_out = open_output(cfg, "fit.csv");
  write_fit_csv(fit_out, fits);
  return ok ? kOk : kAcceptanceFailed;
}

int run_cost(const ExperimentConfig& cfg, std::ostream& log) {
  const Scheme scheme = scheme_from_string(cfg.scheme);
  CostReport report;
  try {
    report = cost_exact(scheme, cfg.horizon_t, cfg.grid.tau, cfg.grid.delta(),
                        scheme == Scheme::kWea ? 1 : cfg.n_particles);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  auto out = open_output(cfg, "cost.csv");
  write_cost_csv(out, {report});
  log << "exact = " << report.exact_coeff_evals << ", paper_order = " << report.paper_order << '\n';
  if (cfg.epsilon) {
    const RateParams rate(cfg.rho, 1, cfg.rate_delta);
    const auto p = choose_params(scheme, *cfg.epsilon, rate, scheme == Scheme::kWea ? 1.0 : 0.0);
    log << "epsilon = " << p.epsilon << ": tau = " << p.tau << ", delta = " << p.delta
        << ", t = " << p.t << ", N = " << p.N << ", cost ~ epsilon^-" << p.cost_exponent << '\n';
  }
  return kOk;
}

int run_check(const ExperimentConfig& cfg, const ModelSpec& model, std::ostream& log) {
  DissipativityConstants k{};
  if (model.constants) {
    k = *model.constants;
  } else if (cfg.constant_overrides.size() < 7) {
    throw ConfigError("model '" + model.name + "' ships no constants; give all of kappa1, kappa2, "
                      "kappa1-bar, kappa2-bar, rho, C, L");
  }
  for (const auto& [name, v] : cfg.constant_overrides) {
    if (name == "kappa1") k.kappa1 = v;
    else if (name == "kappa2") k.kappa2 = v;
    else if (name == "kappa1-bar") k.kappa1_bar = v;
    else if (name == "kappa2-bar") k.kappa2_bar = v;
    else if (name == "rho") k.rho = v;
    else if (name == "C") k.C = v;
    else if (name == "L") k.L = v;
  }
  const auto report = check_assumptions_sampled(model, k, cfg.sampler, cfg.n_samples, cfg.seed);
  const auto text = report.summary();
  log << text;
  auto out = open_output(cfg, "assumptions.txt");
  out << text;
  return report.all_satisfied() ? kOk : kAcceptanceFailed;
}

}  // namespace

int run(const ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
  std::filesystem::create_directories(cfg.out_dir);
  write_manifest(cfg);
  if (cfg.grid.delta() > 0.1 && cfg.command != Command::kCost) {
    err << "warning: delta = " << cfg.grid.delta()
        << " > 0.1; the step-size regime of the convergence theory may not hold\n";
  }
  if (cfg.command == Command::kCost) return run_cost(cfg, log);
  ModelSpec model;
  try {
    model = builtin(cfg.model);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  switch (cfg.command) {
    case Command::kSimulateWea:
    case Command::kSimulateAwea:
      return run_simulate(cfg, model, log);
    case Command::kInvariantTest:
      return run_invariant(cfg, model, log);
    case Command::kConvergence:
      return run_convergence(cfg, model, log);
    case Command::kCheckAssumptions:
      return run_check(cfg, model, log);
    case Command::kCost:
      break;
  }
  return kOk;
}

int main_entry(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const auto cfg = parse_config(args);
    return run(cfg, log, err);
  } catch (const CLI::CallForHelp&) {
    CLI::App help{"mvsde"};
    log << "usage: mvsde <command> [options]\ncommands:";
    for (const auto& [cmd, name] : kCommands) log << ' ' << name;
    log << "\noptions (--key value, or 'key = value' lines in --config FILE):\n";
    for (const auto& k : key_table()) {
      log << "  --" << std::left << std::setw(16) << k.name << k.help;
      if (!k.fallback.empty()) log << " [" << k.fallback << "]";
      log << '\n';
    }
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    return kOk;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  }
}

}  // namespace mvsde::cli
