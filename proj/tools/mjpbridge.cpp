// Command-line front end: simulate | bridge | benchmark | pmmh | lna-dump.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mjpbridge/mjpbridge.hpp"

namespace fs = std::filesystem;
using namespace mjpbridge;

namespace {

constexpr const char* kStreamsHelp =
    "Randomness: every run derives its generators from --seed through named sub-streams "
    "(simulate, bridge, pmmh, bench-death, bench-lv, bench-lv-lowcount), so a subcommand's output "
    "depends only on its effective config and seed. Default output directory: $MJPBRIDGE_OUT, else ./out.\n"
    "Exit codes: 0 ok, 2 configuration error, 3 numerical failure.";

enum class Kind { Str, Int, Real, Bool, RealList, StrList };

struct Param {
  std::string key;
  Kind kind;
  Json def;
  std::string help;
};

/// One subcommand: its parameters, raw flag storage and the effective config.
struct Command {
  Command(std::string n, std::vector<Param> p) : name(std::move(n)), params(std::move(p)) {}

  std::string name;
  std::vector<Param> params;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> raw;
  std::map<std::string, bool> flags;
  std::string config_path;
  Json effective;
};

std::string default_out_dir() {
  const char* env = std::getenv("MJPBRIDGE_OUT");
  return env && *env ? std::string(env) : std::string("out");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Json convert(const Param& p, const std::string& text) {
  try {
    switch (p.kind) {
      case Kind::Str: return text;
      case Kind::Int: {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Kind::Real: {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Kind::Bool: return text == "true" || text == "1";
      case Kind::RealList: {
        Json arr = Json::array();
        for (const auto& item : split_list(text)) {
          std::size_t used = 0;
          const double v = std::stod(item, &used);
          if (used != item.size()) throw std::invalid_argument(item);
          arr.push_back(v);
        }
        return arr;
      }
      case Kind::StrList: {
        Json arr = Json::array();
        for (const auto& item : split_list(text)) arr.push_back(item);
        return arr;
      }
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("--" + p.key + ": cannot parse '" + text + "'");
}

bool matches_kind(const Param& p, const Json& v) {
  if (v.is_null()) return true;
  switch (p.kind) {
    case Kind::Str: return v.is_string();
    case Kind::Int: return v.is_number_integer();
    case Kind::Real: return v.is_number();
    case Kind::Bool: return v.is_boolean();
    case Kind::RealList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); });
    case Kind::StrList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_string(); });
  }
  return false;
}

void add_common(std::vector<Param>& params) {
  params.push_back({"seed", Kind::Int, 1, "root seed"});
  params.push_back({"threads", Kind::Int, 1, "worker threads (1 keeps timings faithful)"});
  params.push_back({"out", Kind::Str, default_out_dir(), "output directory"});
}

void register_command(CLI::App& app, Command& cmd, const std::string& description) {
  add_common(cmd.params);
  cmd.app = app.add_subcommand(cmd.name, description);
  cmd.app->footer(kStreamsHelp);
  cmd.app->add_option("--config", cmd.config_path, "JSON file of parameter values (flags take precedence)");
  for (const auto& p : cmd.params) {
    std::string help = p.help;
    if (!p.def.is_null()) help += " [default: " + (p.def.is_string() ? p.def.get<std::string>() : p.def.dump()) + "]";
    if (p.kind == Kind::Bool)
      cmd.app->add_flag("--" + p.key, cmd.flags[p.key], help);
    else
      cmd.app->add_option("--" + p.key, cmd.raw[p.key], help);
  }
}

/// defaults <- config file <- flags; unknown config keys are errors.
void resolve(Command& cmd) {
  Json eff = Json::object();
  for (const auto& p : cmd.params) eff[p.key] = p.def;
  if (!cmd.config_path.empty()) {
    const Json file = read_json_file(cmd.config_path);
    std::set<std::string> allowed;
    for (const auto& p : cmd.params) allowed.insert(p.key);
    reject_unknown_keys(file, allowed, cmd.config_path);
    for (const auto& p : cmd.params) {
      if (!file.contains(p.key)) continue;
      if (!matches_kind(p, file[p.key])) throw ConfigError(cmd.config_path + ": key '" + p.key + "' has the wrong type");
      eff[p.key] = file[p.key];
    }
  }
  for (const auto& p : cmd.params) {
    const auto* opt = cmd.app->get_option("--" + p.key);
    if (opt->count() == 0) continue;
    eff[p.key] = p.kind == Kind::Bool ? Json(cmd.flags[p.key]) : convert(p, cmd.raw[p.key]);
  }
  cmd.effective = eff;
}

fs::path prepare_out(const Command& cmd) {
  fs::path dir = cmd.effective["out"].get<std::string>();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::ofstream(dir / (cmd.name + ".config.json")) << cmd.effective.dump(2) << '\n';
  std::cerr << "effective config:\n" << cmd.effective.dump(2) << '\n';
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

std::uint64_t seed_of(const Json& eff) { return static_cast<std::uint64_t>(eff["seed"].get<long long>()); }
unsigned threads_of(const Json& eff) {
  const auto t = eff["threads"].get<long long>();
  if (t < 1) throw ConfigError("threads must be at least 1");
  return static_cast<unsigned>(t);
}

/// Model with optional overrides of its rates and initial state.
BundledModel model_of(const Json& eff) {
  BundledModel m = load_model(eff["model"].get<std::string>());
  if (!eff["rates"].is_null()) {
    const auto r = eff["rates"].get<std::vector<double>>();
    if (static_cast<int>(r.size()) != m.network.reaction_count())
      throw ConfigError("rates: expected " + std::to_string(m.network.reaction_count()) + " values");
    Vector v(static_cast<Eigen::Index>(r.size()));
    for (std::size_t k = 0; k < r.size(); ++k) v[static_cast<Eigen::Index>(k)] = r[k];
    try {
      m.rates = RateConstants(v);
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("rates: ") + e.what());
    }
  }
  if (!eff["x0"].is_null()) {
    const auto x = eff["x0"].get<std::vector<double>>();
    if (static_cast<int>(x.size()) != m.network.species_count())
      throw ConfigError("x0: expected " + std::to_string(m.network.species_count()) + " values");
    m.initial_state.clear();
    for (double v : x) {
      if (v < 0 || v != std::floor(v)) throw ConfigError("x0: counts must be non-negative integers");
      m.initial_state.push_back(static_cast<long>(v));
    }
  }
  return m;
}

double positive(const Json& eff, const std::string& key) {
  const double v = eff[key].get<double>();
  if (!(v > 0.0)) throw ConfigError(key + " must be positive");
  return v;
}

std::size_t count_of(const Json& eff, const std::string& key, std::size_t min) {
  const auto v = eff[key].get<long long>();
  if (v < static_cast<long long>(min)) throw ConfigError(key + " must be at least " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

BridgeMethod method_of(const std::string& name) {
  const auto m = parse_bridge_method(name);
  if (!m) throw ConfigError("unknown bridge method '" + name + "' (blind, gw, fcle, flnar, flna)");
  return *m;
}

Json diagnostics_json() {
  const auto& d = diagnostics();
  return {{"hazard_clamps", d.hazard_clamps.load()},
          {"gw_blind_fallbacks", d.gw_blind_fallbacks.load()},
          {"log_ratio_caps", d.log_ratio_caps.load()},
          {"psd_repairs", d.psd_repairs.load()},
          {"ode_integrations", d.ode_integrations.load()},
          {"weight_collapses", d.weight_collapses.load()},
          {"constant_series", d.constant_series.load()}};
}

void run_simulate(Command& cmd) {
  const Json& eff = cmd.effective;
  const BundledModel m = model_of(eff);
  const double T = positive(eff, "T");
  const std::size_t n = count_of(eff, "n", 0);
  const fs::path dir = prepare_out(cmd);
  Rng root = Rng::stream(seed_of(eff), "simulate");
  auto os = open_out(dir / "simulate.csv");
  Path::write_csv_header(os, m.network);
  for (std::size_t k = 0; k < n; ++k) {
    Rng rng = root.split(k);
    simulate(m.network, m.rates, m.initial_state, T, rng).write_csv_rows(os, k);
  }
  std::cout << "wrote " << n << " path(s) to " << (dir / "simulate.csv").string() << '\n';
}

void run_bridge(Command& cmd) {
  const Json& eff = cmd.effective;
  const BundledModel m = model_of(eff);
  const BridgeMethod method = method_of(eff["method"].get<std::string>());
  const double T = positive(eff, "T");
  const std::size_t N = count_of(eff, "N", 1);
  const double sigma = eff["sigma"].get<double>();
  if (sigma < 0.0) throw ConfigError("sigma must be non-negative");
  if (eff["target"].is_null()) throw ConfigError("target: an end-point observation is required");
  const auto y = eff["target"].get<std::vector<double>>();
  if (static_cast<int>(y.size()) != m.network.species_count())
    throw ConfigError("target: expected " + std::to_string(m.network.species_count()) + " values");
  Vector yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t k = 0; k < y.size(); ++k) yv[static_cast<Eigen::Index>(k)] = y[k];
  const BridgeTarget target{yv, T, ObservationModel::full(m.network.species_count(), sigma)};
  const fs::path dir = prepare_out(cmd);
  Rng rng = Rng::stream(seed_of(eff), "bridge");
  const AnyHazard provider = make_hazard(method, m.network, m.rates, m.initial_state, target);
  ResampleOptions opts;
  opts.threads = threads_of(eff);
  opts.keep_paths = eff["paths"].get<bool>();
  const auto ws = weighted_resample(provider, m.network, m.rates, m.initial_state, target, N, rng, opts);
  if (ws.estimate == 0.0)
    std::cerr << "warning: every bridge has zero weight; the target may be unreachable from x0\n";
  Json log_weights = Json::array();
  for (double lw : ws.log_weights) log_weights.push_back(std::isfinite(lw) ? Json(lw) : Json(nullptr));
  Json out = {{"method", std::string(to_string(method))},
              {"N", N},
              {"estimate", ws.estimate},
              {"log_estimate", std::isfinite(ws.log_estimate) ? Json(ws.log_estimate) : Json(nullptr)},
              {"ess", ws.ess},
              {"event_counts", ws.event_counts},
              {"log_weights", log_weights},
              {"diagnostics", diagnostics_json()}};
  open_out(dir / "bridge.json") << out.dump(2) << '\n';
  if (opts.keep_paths) {
    auto os = open_out(dir / "bridge_paths.csv");
    Path::write_csv_header(os, m.network);
    for (std::size_t j = 0; j < ws.paths.size(); ++j) ws.paths[j].write_csv_rows(os, j);
  }
  std::cout << "estimate " << ws.estimate << ", ESS " << ws.ess << " (N=" << N << ")\n";
}

std::vector<BridgeMethod> methods_of(const Json& eff, std::vector<BridgeMethod> fallback) {
  if (eff["methods"].is_null()) return fallback;
  std::vector<BridgeMethod> out;
  for (const auto& name : eff["methods"].get<std::vector<std::string>>()) out.push_back(method_of(name));
  if (out.empty()) throw ConfigError("methods: empty list");
  return out;
}

template <class T>
std::vector<T> list_of(const Json& eff, const std::string& key, std::vector<T> fallback) {
  if (eff[key].is_null()) return fallback;
  std::vector<T> out;
  for (double v : eff[key].get<std::vector<double>>()) out.push_back(static_cast<T>(v));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

void run_benchmark(Command& cmd) {
  const Json& eff = cmd.effective;
  const std::string suite = eff["suite"].get<std::string>();
  const bool full = eff["full"].get<bool>();
  const unsigned threads = threads_of(eff);
  const std::uint64_t seed = seed_of(eff);
  if (suite != "death" && suite != "lv" && suite != "lv-lowcount" && suite != "sir")
    throw ConfigError("unknown suite '" + suite + "' (death, lv, lv-lowcount, sir)");
  const auto has = [&](const char* k) { return !eff[k].is_null(); };
  const fs::path dir = prepare_out(cmd);
  Json summary;
  if (suite == "death") {
    DeathBenchConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.methods = methods_of(eff, cfg.methods);
    if (has("m")) cfg.replicates = count_of(eff, "m", 1);
    if (has("N")) cfg.particles = count_of(eff, "N", 1);
    cfg.horizons = list_of<double>(eff, "T", cfg.horizons);
    cfg.quantiles = list_of<int>(eff, "quantiles", cfg.quantiles);
    const auto r = run_death_benchmark(cfg);
    auto os = open_out(dir / "bench_death.csv");
    r.write_csv(os);
    summary = r.to_json();
  } else if (suite == "lv") {
    LvBenchConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.methods = methods_of(eff, cfg.methods);
    cfg.particles = has("N") ? count_of(eff, "N", 1) : (full ? 5000 : 1000);
    cfg.horizons = list_of<int>(eff, "T", cfg.horizons);
    cfg.quantiles = list_of<int>(eff, "quantiles", cfg.quantiles);
    if (has("sigma")) cfg.sigma = eff["sigma"].get<double>();
    const auto r = run_lv_benchmark(cfg);
    auto os = open_out(dir / "bench_lv.csv");
    r.write_csv(os);
    summary = r.to_json();
  } else if (suite == "lv-lowcount") {
    LowCountBenchConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.methods = methods_of(eff, cfg.methods);
    cfg.particles = has("N") ? count_of(eff, "N", 1) : (full ? 5000 : 1000);
    cfg.horizons = list_of<int>(eff, "T", cfg.horizons);
    const auto r = run_lv_lowcount_benchmark(cfg);
    auto os = open_out(dir / "bench_lv-lowcount.csv");
    r.write_csv(os);
    summary = r.to_json();
  } else {
    std::vector<PmmhSummary> runs;
    const std::vector<std::pair<std::string, std::size_t>> plan{{"alive", 8}, {"blind", 5000}, {"flna", 100}};
    for (const auto& [method, particles] : plan) {
      PmmhExperimentConfig cfg;
      cfg.method = method;
      cfg.particles = particles;
      cfg.n_iters = has("m") ? count_of(eff, "m", 1) : (full ? 10000 : 2000);
      cfg.seed = seed;
      cfg.threads = threads;
      runs.push_back(run_pmmh_experiment(cfg));
      std::cerr << method << ": " << runs.back().cpu_seconds << " s\n";
    }
    set_relative_efficiency(runs);
    auto os = open_out(dir / "bench_sir.csv");
    os << "method,N,n_iters,cpu_seconds,acceptance_rate,min_ess,min_ess_per_second,relative\n";
    summary["runs"] = Json::array();
    for (const auto& r : runs) {
      os << r.method << ',' << r.particles << ',' << r.n_iters << ',' << r.cpu_seconds << ',' << r.acceptance << ','
         << r.min_ess << ',' << r.min_ess_per_second << ',' << r.relative << '\n';
      summary["runs"].push_back(r.to_json());
    }
  }
  summary["suite"] = suite;
  open_out(dir / ("bench_" + suite + ".json")) << summary.dump(2) << '\n';
  std::cout << "wrote " << (dir / ("bench_" + suite + ".csv")).string() << '\n';
}

void run_pmmh(Command& cmd) {
  const Json& eff = cmd.effective;
  const Dataset data = load_dataset(eff["data"].get<std::string>());
  const BundledModel m = load_model(eff["model"].get<std::string>());
  if (data.obs.dimension() != m.network.species_count())
    throw ConfigError("dataset has " + std::to_string(data.obs.dimension()) + " columns, model has " +
                      std::to_string(m.network.species_count()) + " species");
  const int p = m.network.reaction_count();
  PmmhConfig cfg;
  cfg.n_iters = count_of(eff, "iters", 1);
  cfg.estimator = EstimatorConfig::from_method(eff["method"].get<std::string>(), count_of(eff, "N", 1));
  cfg.estimator.alive_cap = count_of(eff, "alive_cap", 1);
  cfg.estimator.threads = threads_of(eff);
  cfg.prior = LogNormalPrior::vague(p, positive(eff, "prior_sd"));
  cfg.seed = seed_of(eff);
  if (eff["proposal"].is_null()) {
    cfg.proposal_cov = p == 2 ? eyam_default_proposal() : Matrix(0.01 * Matrix::Identity(p, p));
  } else {
    const auto v = eff["proposal"].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != p * p) throw ConfigError("proposal: expected p*p row-major values");
    cfg.proposal_cov.resize(p, p);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) cfg.proposal_cov(a, b) = v[static_cast<std::size_t>(a * p + b)];
  }
  cfg.proposal_cov *= eff["proposal_scale"].get<double>();
  if (eff["init"].is_null()) {
    cfg.initial_log_c = m.rates.log_values();
  } else {
    const auto v = eff["init"].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != p) throw ConfigError("init: expected one log rate per reaction");
    cfg.initial_log_c = Eigen::Map<const Vector>(v.data(), p);
  }
  try {
    RandomWalkProposal check(cfg.proposal_cov);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("proposal: ") + e.what());
  }
  const fs::path dir = prepare_out(cmd);
  Rng rng = Rng::stream(cfg.seed, "pmmh");
  detail::Stopwatch watch;
  const Chain chain = pmmh(cfg, m.network, data, rng);
  PmmhSummary s = summarize_chain(chain, watch.seconds());
  s.method = cfg.estimator.method_name();
  s.particles = cfg.estimator.particles;
  auto os = open_out(dir / "chain.csv");
  chain.write_csv(os);
  Json js = s.to_json();
  js["diagnostics"] = diagnostics_json();
  open_out(dir / "pmmh_summary.json") << js.dump(2) << '\n';
  std::cout << "acceptance " << s.acceptance << ", posterior mean c = " << s.posterior_mean.transpose() << '\n';
}

void run_lna_dump(Command& cmd) {
  const Json& eff = cmd.effective;
  const BundledModel m = model_of(eff);
  const double T = positive(eff, "T");
  LnaOptions opts;
  opts.ode.max_step_fraction = eff["max_step"].get<double>();
  const fs::path dir = prepare_out(cmd);
  const LnaTable table = solve_lna_table(m.network, m.rates, m.initial_state, T, opts);
  auto os = open_out(dir / "lna.csv");
  table.write_csv(os);
  std::cout << "wrote " << table.solution().size() << " rows to " << (dir / "lna.csv").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditioned jump-process bridges, likelihood estimation and PMMH for reaction networks"};
  app.footer(kStreamsHelp);
  app.require_subcommand(1);

  Command simulate{"simulate", {{"model", Kind::Str, "death", "bundled model (death, lv, sir) or model JSON path"},
                                {"rates", Kind::RealList, nullptr, "rate constants c1,c2,..."},
                                {"x0", Kind::RealList, nullptr, "initial state"},
                                {"T", Kind::Real, 1.0, "time horizon"},
                                {"n", Kind::Int, 1, "number of paths"}}};
  Command bridge{"bridge", {{"model", Kind::Str, "death", "bundled model or model JSON path"},
                            {"method", Kind::Str, "flna", "blind, gw, fcle, flnar or flna"},
                            {"rates", Kind::RealList, nullptr, "rate constants"},
                            {"x0", Kind::RealList, nullptr, "initial state"},
                            {"target", Kind::RealList, nullptr, "observed end point y_T"},
                            {"T", Kind::Real, 1.0, "observation time"},
                            {"sigma", Kind::Real, 0.0, "observation noise sd (0 = exact)"},
                            {"N", Kind::Int, 10, "number of bridges"},
                            {"paths", Kind::Bool, false, "also write the bridges to bridge_paths.csv"}}};
  Command benchmark{"benchmark", {{"suite", Kind::Str, "death", "death, lv, lv-lowcount or sir"},
                                  {"full", Kind::Bool, false, "full-scale settings"},
                                  {"m", Kind::Int, nullptr, "replicates (death) or iterations (sir)"},
                                  {"N", Kind::Int, nullptr, "particles per estimate"},
                                  {"methods", Kind::StrList, nullptr, "bridge methods to include"},
                                  {"T", Kind::RealList, nullptr, "horizons"},
                                  {"quantiles", Kind::RealList, nullptr, "end-point quantiles (1, 50, 99)"},
                                  {"sigma", Kind::Real, nullptr, "observation noise sd (lv)"}}};
  Command pmmh_cmd{"pmmh", {{"data", Kind::Str, "eyam", "'eyam' or a dataset CSV (time,<species>...)"},
                            {"model", Kind::Str, "sir", "bundled model or model JSON path"},
                            {"method", Kind::Str, "flna", "alive or a bridge method"},
                            {"N", Kind::Int, 100, "particles per interval"},
                            {"iters", Kind::Int, 2000, "MCMC iterations"},
                            {"proposal", Kind::RealList, nullptr, "random-walk covariance on log c (row-major)"},
                            {"proposal_scale", Kind::Real, 1.0, "multiplier for the proposal covariance"},
                            {"init", Kind::RealList, nullptr, "initial log c"},
                            {"prior_sd", Kind::Real, 100.0, "sd of the Gaussian priors on log c"},
                            {"alive_cap", Kind::Int, 100000, "simulation cap for the alive estimator"}}};
  Command lna_dump{"lna-dump", {{"model", Kind::Str, "death", "bundled model or model JSON path"},
                                {"rates", Kind::RealList, nullptr, "rate constants"},
                                {"x0", Kind::RealList, nullptr, "initial state"},
                                {"T", Kind::Real, 1.0, "time horizon"},
                                {"max_step", Kind::Real, 0.01, "largest step as a fraction of T"}}};

  register_command(app, simulate, "Simulate paths with Gillespie's direct method");
  register_command(app, bridge, "Weighted resampling of bridges to an end-point observation");
  register_command(app, benchmark, "Run a benchmark suite");
  register_command(app, pmmh_cmd, "Pseudo-marginal Metropolis-Hastings for rate constants");
  register_command(app, lna_dump, "Write the LNA solution (z, G, psi) on its step grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (Command* cmd : {&simulate, &bridge, &benchmark, &pmmh_cmd, &lna_dump}) {
      if (!cmd->app->parsed()) continue;
      resolve(*cmd);
      if (cmd == &simulate) run_simulate(*cmd);
      if (cmd == &bridge) run_bridge(*cmd);
      if (cmd == &benchmark) run_benchmark(*cmd);
      if (cmd == &pmmh_cmd) run_pmmh(*cmd);
      if (cmd == &lna_dump) run_lna_dump(*cmd);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
