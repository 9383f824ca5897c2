#ifndef MJPBRIDGE_BENCH_HPP
#define MJPBRIDGE_BENCH_HPP

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mjpbridge/inference.hpp"
#include "mjpbridge/models.hpp"

namespace mjpbridge {

/// (sum p)^2 / sum p^2 over replicate estimates; 0 if all are 0.
inline double replicate_ess(std::span<const double> estimates) {
  require(!estimates.empty(), "replicate_ess: need at least one estimate");
  double s1 = 0.0, s2 = 0.0;
  for (double p : estimates) {
    s1 += p;
    s2 += p * p;
  }
  return s2 > 0.0 ? s1 * s1 / s2 : 0.0;
}

/// (1/m) sum (p_i - truth)^2 / truth.
inline double remse(std::span<const double> estimates, double truth) {
  require(truth > 0.0, "remse: truth must be positive");
  require(!estimates.empty(), "remse: need at least one estimate");
  double s = 0.0;
  for (double p : estimates) s += (p - truth) * (p - truth) / truth;
  return s / static_cast<double>(estimates.size());
}

struct BenchCell {
  std::string suite;
  std::string method;
  std::string scenario;
  double horizon = 0.0;
  int quantile = 0;     // alpha of the end-point target, 0 if not applicable
  Vector target;
  std::size_t replicates = 1;  // m (death) or 1 (weighted resampling runs)
  std::size_t particles = 0;   // N
  double ess = 0.0;            // replicate ESS (death) or weight ESS
  double remse = std::nan("");
  double truth = std::nan("");
  double mean_estimate = std::nan("");
  double se_estimate = std::nan("");
  double cpu_seconds = 0.0;
  double ess_per_second = 0.0;
  std::string error;  // set when the cell failed numerically
};

struct BenchResult {
  std::vector<BenchCell> cells;

  void write_csv(std::ostream& os) const {
    os << "suite,method,scenario,T,quantile,target,N,m,ess,remse,truth,mean_estimate,se_estimate,cpu_seconds,"
          "ess_per_second,error\n";
    const auto old = os.precision(10);
    for (const auto& c : cells) {
      os << c.suite << ',' << c.method << ',' << c.scenario << ',' << c.horizon << ',' << c.quantile << ",\"";
      for (Eigen::Index k = 0; k < c.target.size(); ++k) os << (k ? " " : "") << c.target[k];
      os << "\"," << c.particles << ',' << c.replicates << ',' << c.ess << ',' << c.remse << ',' << c.truth << ','
         << c.mean_estimate << ',' << c.se_estimate << ',' << c.cpu_seconds << ',' << c.ess_per_second << ','
         << c.error << '\n';
    }
    os.precision(old);
  }

  nlohmann::json to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto& c : cells) {
      cells_json.push_back({{"suite", c.suite},
                            {"method", c.method},
                            {"scenario", c.scenario},
                            {"T", c.horizon},
                            {"quantile", c.quantile},
                            {"target", std::vector<double>(c.target.data(), c.target.data() + c.target.size())},
                            {"N", c.particles},
                            {"m", c.replicates},
                            {"ess", num(c.ess)},
                            {"remse", num(c.remse)},
                            {"truth", num(c.truth)},
                            {"mean_estimate", num(c.mean_estimate)},
                            {"se_estimate", num(c.se_estimate)},
                            {"cpu_seconds", c.cpu_seconds},
                            {"ess_per_second", num(c.ess_per_second)},
                            {"error", c.error}});
    }
    return {{"cells", cells_json}};
  }

  const BenchCell* find(std::string_view method, std::string_view scenario) const {
    for (const auto& c : cells)
      if (c.method == method && c.scenario == scenario) return &c;
    return nullptr;
  }
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return std::max(s, 1e-9);
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string scenario_name(double T, int alpha) {
  std::ostringstream ss;
  ss << "T=" << T << ",q=" << alpha;
  return ss.str();
}

}  // namespace detail

struct DeathBenchConfig {
  std::vector<BridgeMethod> methods{BridgeMethod::Blind, BridgeMethod::Gw, BridgeMethod::Fcle, BridgeMethod::Flnar,
                                    BridgeMethod::Flna};
  std::vector<double> horizons{0.5, 1.0, 2.0};
  std::vector<int> quantiles{50, 1, 99};
  std::size_t replicates = 5000;
  std::size_t particles = 10;
  long x0 = 50;
  double rate = 0.5;
  std::uint64_t seed = 1;
  unsigned threads = 1;  // cells in parallel
  LnaOptions lna{};
};

/// Repeated weighted resampling on the death process against the analytic
/// transition probability. Each cell draws from its own named stream.
inline BenchResult run_death_benchmark(const DeathBenchConfig& cfg) {
  const auto model = death_model();
  const RateConstants c{cfg.rate};
  const State x0{cfg.x0};
  struct Spec {
    BridgeMethod method;
    double T;
    int alpha;
  };
  std::vector<Spec> specs;
  for (int alpha : cfg.quantiles)
    for (double T : cfg.horizons)
      for (auto m : cfg.methods) specs.push_back({m, T, alpha});
  BenchResult result;
  result.cells.resize(specs.size());
  parallel_for(specs.size(), cfg.threads, [&](std::size_t k) {
    const Spec& s = specs[k];
    BenchCell& cell = result.cells[k];
    cell.suite = "death";
    cell.method = std::string(to_string(s.method));
    cell.scenario = detail::scenario_name(s.T, s.alpha);
    cell.horizon = s.T;
    cell.quantile = s.alpha;
    const long xT = death_quantile(cfg.x0, cfg.rate, s.T, s.alpha);
    cell.target = Vector::Constant(1, static_cast<double>(xT));
    cell.replicates = cfg.replicates;
    cell.particles = cfg.particles;
    cell.truth = death_transition_pmf(cfg.x0, xT, cfg.rate, s.T);
    Rng rng = Rng::stream(cfg.seed, "bench-death", k);
    std::vector<double> estimates;
    estimates.reserve(cfg.replicates);
    ResampleOptions opts;
    opts.keep_paths = false;
    detail::Stopwatch watch;
    try {
      const BridgeTarget target{cell.target, s.T, ObservationModel::full(1)};
      const AnyHazard provider = make_hazard(s.method, model.network, c, x0, target, cfg.lna);
      for (std::size_t r = 0; r < cfg.replicates; ++r)
        estimates.push_back(weighted_resample(provider, model.network, c, x0, target, cfg.particles, rng, opts).estimate);
    } catch (const NumericalError& e) {
      cell.error = e.what();
    }
    cell.cpu_seconds = watch.seconds();
    if (!estimates.empty()) {
      cell.ess = replicate_ess(estimates);
      cell.remse = remse(estimates, cell.truth);
      const double n = static_cast<double>(estimates.size());
      cell.mean_estimate = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
      cell.se_estimate = std::sqrt(sample_variance(estimates) / n);
    }
    cell.ess_per_second = cell.ess / cell.cpu_seconds;
  });
  return result;
}

struct LvBenchConfig {
  std::vector<BridgeMethod> methods{BridgeMethod::Gw, BridgeMethod::Flnar, BridgeMethod::Flna};
  std::vector<int> horizons{1, 2, 3, 4};
  std::vector<int> quantiles{1, 50, 99};
  std::size_t particles = 5000;
  double sigma = 5.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;       // cells in parallel
  unsigned draw_threads = 1;  // draws within a cell
  LnaOptions lna{};
};

namespace detail {

inline BenchCell run_lv_cell(const std::string& suite, BridgeMethod method, const State& x0, double sigma, int T,
                             int alpha, const Vector& y, std::size_t N, Rng& rng, unsigned draw_threads,
                             const LnaOptions& lna) {
  const auto model = lotka_volterra_model();
  BenchCell cell;
  cell.suite = suite;
  cell.method = std::string(to_string(method));
  cell.horizon = T;
  cell.quantile = alpha;
  cell.target = y;
  cell.particles = N;
  ResampleOptions opts;
  opts.keep_paths = false;
  opts.threads = draw_threads;
  Stopwatch watch;
  try {
    const BridgeTarget target{y, static_cast<double>(T), ObservationModel::full(2, sigma)};
    const AnyHazard provider = make_hazard(method, model.network, model.rates, x0, target, lna);
    const auto ws = weighted_resample(provider, model.network, model.rates, x0, target, N, rng, opts);
    cell.ess = ws.ess;
    cell.mean_estimate = ws.estimate;
  } catch (const NumericalError& e) {
    cell.error = e.what();
  }
  cell.cpu_seconds = watch.seconds();
  cell.ess_per_second = cell.ess / cell.cpu_seconds;
  return cell;
}

}  // namespace detail

/// Lotka-Volterra bridges from (50, 50) to the bundled end-point quantiles.
inline BenchResult run_lv_benchmark(const LvBenchConfig& cfg) {
  struct Spec {
    BridgeMethod method;
    int T;
    int alpha;
  };
  std::vector<Spec> specs;
  for (int alpha : cfg.quantiles)
    for (int T : cfg.horizons)
      for (auto m : cfg.methods) specs.push_back({m, T, alpha});
  BenchResult result;
  result.cells.resize(specs.size());
  const State x0{50, 50};
  parallel_for(specs.size(), cfg.threads, [&](std::size_t k) {
    const Spec& s = specs[k];
    Rng rng = Rng::stream(cfg.seed, "bench-lv", k);
    result.cells[k] = detail::run_lv_cell("lv", s.method, x0, cfg.sigma, s.T, s.alpha,
                                          lv_quantile_target(s.T, s.alpha), cfg.particles, rng, cfg.draw_threads,
                                          cfg.lna);
    result.cells[k].scenario = detail::scenario_name(s.T, s.alpha);
  });
  return result;
}

struct LowCountBenchConfig {
  std::vector<BridgeMethod> methods{BridgeMethod::Gw, BridgeMethod::Flnar, BridgeMethod::Flna};
  std::vector<int> scales{10, 25, 50};
  std::vector<int> horizons{1, 2, 3, 4};
  std::size_t particles = 5000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  unsigned draw_threads = 1;
  LnaOptions lna{};
};

/// Median end points from x0 = (s, s) with noise sd s / 10.
inline BenchResult run_lv_lowcount_benchmark(const LowCountBenchConfig& cfg) {
  struct Spec {
    BridgeMethod method;
    int scale;
    int T;
  };
  std::vector<Spec> specs;
  for (int s : cfg.scales)
    for (int T : cfg.horizons)
      for (auto m : cfg.methods) specs.push_back({m, s, T});
  BenchResult result;
  result.cells.resize(specs.size());
  parallel_for(specs.size(), cfg.threads, [&](std::size_t k) {
    const Spec& s = specs[k];
    Rng rng = Rng::stream(cfg.seed, "bench-lv-lowcount", k);
    const State x0{s.scale, s.scale};
    result.cells[k] = detail::run_lv_cell("lv-lowcount", s.method, x0, lv_lowcount_sigma(s.scale), s.T, 50,
                                          lv_lowcount_target(s.scale, s.T), cfg.particles, rng, cfg.draw_threads,
                                          cfg.lna);
    result.cells[k].scenario = "x0=" + std::to_string(s.scale) + ",T=" + std::to_string(s.T);
  });
  return result;
}

/// Proposal covariance on log c for the Eyam SIR runs, from a pilot chain.
inline Matrix eyam_default_proposal() {
  Matrix cov(2, 2);
  cov << 0.0244, 0.0071, 0.0071, 0.0231;
  return cov;
}

struct PmmhExperimentConfig {
  std::string method = "flna";
  std::size_t particles = 100;
  std::size_t n_iters = 2000;
  std::uint64_t seed = 1;
  std::size_t alive_cap = 100000;
  unsigned threads = 1;
  Matrix proposal_cov = eyam_default_proposal();
  Vector initial_log_c;  // empty: log of the bundled SIR rates
};

struct PmmhSummary {
  std::string method;
  std::size_t particles = 0;
  std::size_t n_iters = 0;
  double cpu_seconds = 0.0;
  double acceptance = 0.0;
  double min_ess = 0.0;
  double min_ess_per_second = 0.0;
  double relative = std::nan("");
  Vector posterior_mean;
  Vector posterior_sd;
  Chain chain;

  nlohmann::json to_json() const {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"method", method},
            {"N", particles},
            {"n_iters", n_iters},
            {"cpu_seconds", cpu_seconds},
            {"acceptance_rate", acceptance},
            {"min_ess", min_ess},
            {"min_ess_per_second", min_ess_per_second},
            {"relative", std::isfinite(relative) ? nlohmann::json(relative) : nlohmann::json(nullptr)},
            {"posterior_mean_c", vec(posterior_mean)},
            {"posterior_sd_c", vec(posterior_sd)}};
  }
};

inline PmmhSummary summarize_chain(const Chain& chain, double cpu_seconds) {
  PmmhSummary s;
  s.n_iters = chain.size();
  s.cpu_seconds = cpu_seconds;
  s.acceptance = chain.acceptance_rate();
  const int p = chain.size() ? static_cast<int>(chain.log_c.front().size()) : 0;
  s.posterior_mean = Vector::Zero(p);
  s.posterior_sd = Vector::Zero(p);
  for (int k = 0; k < p; ++k) {
    const auto series = chain.rate_series(k);
    const double n = static_cast<double>(series.size());
    s.posterior_mean[k] = std::accumulate(series.begin(), series.end(), 0.0) / n;
    s.posterior_sd[k] = std::sqrt(sample_variance(series));
  }
  // Chains shorter than 100 draws are too short for an ESS estimate; report 0.
  s.min_ess = chain.size() >= 100 ? min_chain_ess(chain) : 0.0;
  s.min_ess_per_second = s.min_ess / cpu_seconds;
  return s;
}

/// PMMH on the Eyam data with the chosen likelihood estimator.
inline PmmhSummary run_pmmh_experiment(const PmmhExperimentConfig& cfg) {
  const auto model = sir_model();
  const Dataset data = eyam_data();
  PmmhConfig pc;
  pc.n_iters = cfg.n_iters;
  pc.estimator = EstimatorConfig::from_method(cfg.method, cfg.particles);
  pc.estimator.alive_cap = cfg.alive_cap;
  pc.estimator.threads = cfg.threads;
  pc.proposal_cov = cfg.proposal_cov;
  pc.prior = LogNormalPrior::vague(2);
  pc.initial_log_c = cfg.initial_log_c.size() ? cfg.initial_log_c : model.rates.log_values();
  pc.seed = cfg.seed;
  Rng rng = Rng::stream(cfg.seed, "pmmh");
  detail::Stopwatch watch;
  Chain chain = pmmh(pc, model.network, data, rng);
  PmmhSummary s = summarize_chain(chain, watch.seconds());
  s.method = pc.estimator.method_name();
  s.particles = cfg.particles;
  s.chain = std::move(chain);
  return s;
}

/// Normalizes mESS/s so that the alive run (if present) has relative 1.
inline void set_relative_efficiency(std::vector<PmmhSummary>& runs) {
  double base = std::nan("");
  for (const auto& r : runs)
    if (r.method == "alive") base = r.min_ess_per_second;
  if (!std::isfinite(base) && !runs.empty()) base = runs.front().min_ess_per_second;
  for (auto& r : runs) r.relative = r.min_ess_per_second / base;
}

}  // namespace mjpbridge

#endif
