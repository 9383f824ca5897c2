#ifndef MJPBRIDGE_INFERENCE_HPP
#define MJPBRIDGE_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mjpbridge/bridge.hpp"
#include "mjpbridge/dataset.hpp"

namespace mjpbridge {

/// A log-likelihood estimate. `rejected` marks an alive run that hit its
/// simulation cap; it behaves like -inf in the acceptance step.
struct LoglikEstimate {
  double value = -kInf;
  bool rejected = false;

  bool usable() const { return !rejected && value > -kInf; }
};

struct IntervalEstimate {
  double log_value = -kInf;
  bool rejected = false;
  std::size_t simulations = 0;
};

/// Which estimator drives the observed-data likelihood.
struct EstimatorConfig {
  enum class Kind { Bridge, Alive };
  Kind kind = Kind::Bridge;
  BridgeMethod bridge = BridgeMethod::Flna;
  std::size_t particles = 100;
  std::size_t alive_cap = 100000;
  unsigned threads = 1;
  LnaOptions lna{};

  /// "alive" or any bridge method name.
  static EstimatorConfig from_method(std::string_view method, std::size_t particles) {
    EstimatorConfig cfg;
    cfg.particles = particles;
    if (method == "alive") {
      cfg.kind = Kind::Alive;
      return cfg;
    }
    std::string_view name = method;
    if (name.starts_with("bridge-")) name.remove_prefix(7);
    const auto m = parse_bridge_method(name);
    if (!m) throw ConfigError("unknown likelihood method '" + std::string(method) + "'");
    cfg.bridge = *m;
    return cfg;
  }

  std::string method_name() const {
    return kind == Kind::Alive ? std::string("alive") : std::string(to_string(bridge));
  }
};

/// log of the importance-sampling estimate of p(y_b | x_a) over an interval
/// of length dt; -inf when no draw reaches y_b.
inline double interval_loglik_bridge(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x_a,
                                     const Vector& y_b, double dt, const ObservationModel& obs, BridgeMethod method,
                                     std::size_t N, Rng& rng, unsigned threads = 1, const LnaOptions& lna = {}) {
  const BridgeTarget target{y_b, dt, obs};
  const AnyHazard provider = make_hazard(method, net, c, x_a, target, lna);
  ResampleOptions opts;
  opts.keep_paths = false;
  opts.threads = threads;
  return weighted_resample(provider, net, c, x_a, target, N, rng, opts).log_estimate;
}

inline double interval_loglik_bridge(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x_a,
                                     const Vector& y_b, double dt, BridgeMethod method, std::size_t N, Rng& rng) {
  return interval_loglik_bridge(net, c, x_a, y_b, dt, ObservationModel::full(net.species_count()), method, N, rng);
}

/// Alive estimator: forward-simulate until N + 1 exact matches of y_b; the
/// estimate is N / (n - 1) for n total simulations. Exceeding `cap`
/// simulations rejects.
inline IntervalEstimate interval_loglik_alive(const ReactionNetwork& net, const RateConstants& c,
                                              std::span<const long> x_a, std::span<const long> y_b, double dt,
                                              std::size_t N, std::size_t cap, Rng& rng) {
  require(N >= 1, "interval_loglik_alive: N must be at least 1");
  require(y_b.size() == x_a.size(), "interval_loglik_alive: observation must be a full state");
  IntervalEstimate out;
  std::size_t matches = 0;
  while (matches < N + 1) {
    if (out.simulations >= cap) {
      out.rejected = true;
      out.log_value = -kInf;
      return out;
    }
    ++out.simulations;
    const Path path = simulate(net, c, x_a, dt, rng);
    if (std::equal(y_b.begin(), y_b.end(), path.final_state().begin())) ++matches;
  }
  out.log_value = std::log(static_cast<double>(N)) - std::log(static_cast<double>(out.simulations - 1));
  return out;
}

/// Sum of interval log-estimates for exactly observed full-state data, with
/// x at each observation time pinned to the observation.
inline LoglikEstimate observed_data_loglik(const ReactionNetwork& net, const RateConstants& c, const Dataset& data,
                                           const EstimatorConfig& cfg, Rng& rng) {
  data.validate();
  require(data.obs.exact() && data.obs.dimension() == net.species_count(),
          "observed_data_loglik: requires exact full-state observations (use particle_filter_loglik otherwise)");
  LoglikEstimate total{0.0, false};
  for (std::size_t i = 0; i + 1 < data.size(); ++i) {
    const State x_a = data.state(i);
    const double dt = data.times[i + 1] - data.times[i];
    if (cfg.kind == EstimatorConfig::Kind::Alive) {
      const State y_b = data.state(i + 1);
      const auto est = interval_loglik_alive(net, c, x_a, y_b, dt, cfg.particles, cfg.alive_cap, rng);
      if (est.rejected) return {-kInf, true};
      total.value += est.log_value;
    } else {
      total.value += interval_loglik_bridge(net, c, x_a, data.observations[i + 1], dt, data.obs, cfg.bridge,
                                            cfg.particles, rng, cfg.threads, cfg.lna);
    }
    if (total.value == -kInf) return total;
  }
  return total;
}

/// Bootstrap-style filter with bridge proposals: x0 is known at time t0 and
/// every observation in `data` (all later than t0) is noisy. Returns the sum
/// over intervals of the log mean unnormalised weight.
inline double particle_filter_loglik(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x0,
                                     double t0, const Dataset& data, BridgeMethod method, std::size_t N, Rng& rng,
                                     unsigned threads = 1, const LnaOptions& lna = {}) {
  data.validate();
  require(N >= 1, "particle_filter_loglik: N must be at least 1");
  require(data.times.front() > t0, "particle_filter_loglik: observations must follow t0");
  const int u = net.species_count();
  const auto uz = static_cast<std::size_t>(u);
  std::vector<long> particles(N * uz);
  for (std::size_t j = 0; j < N; ++j) std::copy(x0.begin(), x0.end(), particles.begin() + static_cast<long>(j * uz));
  std::vector<long> next(N * uz);
  std::vector<double> lw(N);
  double total = 0.0;
  double t_prev = t0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const BridgeTarget target{data.observations[i], data.times[i] - t_prev, data.obs};
    // One provider per distinct starting state (F-LNA integrates a table each).
    std::map<State, std::shared_ptr<const AnyHazard>> providers;
    std::vector<const AnyHazard*> assigned(N);
    for (std::size_t j = 0; j < N; ++j) {
      State xj(particles.begin() + static_cast<long>(j * uz), particles.begin() + static_cast<long>((j + 1) * uz));
      auto it = providers.find(xj);
      if (it == providers.end())
        it = providers.emplace(xj, std::make_shared<const AnyHazard>(make_hazard(method, net, c, xj, target, lna)))
                 .first;
      assigned[j] = it->second.get();
    }
    const std::uint64_t key = rng.next();
    parallel_for(N, threads, [&](std::size_t j) {
      Rng draw_rng(key, j);
      std::span<const long> xj(particles.data() + j * uz, uz);
      ProposalDraw draw = simulate_proposal(*assigned[j], net, c, xj, target.horizon, draw_rng, true);
      const double terminal = target.obs.log_density(target.y, draw.path.final_state());
      lw[j] = terminal == -kInf ? -kInf : terminal + draw.log_likelihood_ratio;
      const auto fin = draw.path.final_state();
      std::copy(fin.begin(), fin.end(), next.begin() + static_cast<long>(j * uz));
    });
    const double log_mean = log_sum_exp(lw) - std::log(static_cast<double>(N));
    if (log_mean == -kInf) {
      bump(diagnostics().weight_collapses);
      return -kInf;
    }
    total += log_mean;
    if (i + 1 < data.size()) {
      const auto idx = resample_indices(lw, N, rng, false);
      for (std::size_t j = 0; j < N; ++j)
        std::copy(next.begin() + static_cast<long>(idx[j] * uz), next.begin() + static_cast<long>((idx[j] + 1) * uz),
                  particles.begin() + static_cast<long>(j * uz));
    }
    t_prev = data.times[i];
  }
  return total;
}

/// PMMH output: one row per iteration.
struct Chain {
  std::vector<Vector> log_c;
  std::vector<double> loglik;
  std::vector<char> accepted;

  std::size_t size() const { return log_c.size(); }

  double acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    return static_cast<double>(std::count(accepted.begin(), accepted.end(), 1)) /
           static_cast<double>(accepted.size());
  }

  /// Component k on the natural (rate) scale.
  std::vector<double> rate_series(int k) const {
    std::vector<double> out;
    out.reserve(log_c.size());
    for (const auto& v : log_c) out.push_back(std::exp(v[k]));
    return out;
  }

  void write_csv(std::ostream& os) const {
    const int p = log_c.empty() ? 0 : static_cast<int>(log_c.front().size());
    os << "iter";
    for (int k = 0; k < p; ++k) os << ",log_c" << k + 1;
    os << ",loglik_hat,accepted\n";
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < size(); ++i) {
      os << i + 1;
      for (int k = 0; k < p; ++k) os << ',' << log_c[i][k];
      os << ',' << loglik[i] << ',' << static_cast<int>(accepted[i]) << '\n';
    }
    os.precision(old);
  }
};

/// Independent Gaussian priors on log c.
struct LogNormalPrior {
  Vector mean;
  Vector sd;

  static LogNormalPrior vague(int p, double sd = 100.0) { return {Vector::Zero(p), Vector::Constant(p, sd)}; }

  double log_density(const Vector& log_c) const {
    double lp = 0.0;
    for (Eigen::Index k = 0; k < log_c.size(); ++k) {
      const double z = (log_c[k] - mean[k]) / sd[k];
      lp += -0.5 * z * z - std::log(sd[k]);
    }
    return lp;
  }
};

/// Gaussian random walk on log c with a fixed PSD covariance (zero allowed).
class RandomWalkProposal {
 public:
  explicit RandomWalkProposal(const Matrix& cov) {
    require(cov.rows() == cov.cols(), "RandomWalkProposal: covariance must be square");
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()),
            "RandomWalkProposal: covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    require(eig.eigenvalues().minCoeff() >= -1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()),
            "RandomWalkProposal: covariance must be positive semi-definite");
    root_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  Vector operator()(const Vector& current, Rng& rng) const {
    Vector z(current.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    return current + root_ * z;
  }

 private:
  Matrix root_;
};

/// Pseudo-marginal Metropolis-Hastings with a symmetric proposal.
///   estimator(log_c, rng) -> LoglikEstimate
///   log_prior(log_c) -> double
///   propose(log_c, rng) -> Vector
/// Iteration i draws from its own stream Rng(key, i). The estimate at the
/// current point is stored and reused, never recomputed.
template <class Estimator, class LogPrior, class Proposal>
Chain run_pmmh(Estimator&& estimator, LogPrior&& log_prior, Proposal&& propose, const Vector& initial_log_c,
               std::size_t n_iters, Rng& rng, std::size_t max_initial_attempts = 100) {
  require(n_iters >= 1, "pmmh: n_iters must be at least 1");
  Vector current = initial_log_c;
  LoglikEstimate current_est;
  for (std::size_t attempt = 0; attempt < max_initial_attempts && !current_est.usable(); ++attempt)
    current_est = estimator(current, rng);
  if (!current_est.usable())
    throw NumericalError("pmmh: no finite likelihood estimate at the initial parameter after " +
                         std::to_string(max_initial_attempts) + " attempts");
  double current_lp = log_prior(current);
  const std::uint64_t key = rng.next();
  Chain chain;
  chain.log_c.reserve(n_iters);
  chain.loglik.reserve(n_iters);
  chain.accepted.reserve(n_iters);
  for (std::size_t i = 0; i < n_iters; ++i) {
    Rng it(key, i);
    const Vector proposal = propose(current, it);
    const double proposal_lp = log_prior(proposal);
    bool accept = false;
    if (proposal_lp > -kInf) {
      const LoglikEstimate est = estimator(proposal, it);
      if (est.usable()) {
        const double log_alpha = proposal_lp + est.value - current_lp - current_est.value;
        if (log_alpha >= 0.0 || std::log(it.uniform()) < log_alpha) {
          accept = true;
          current = proposal;
          current_est = est;
          current_lp = proposal_lp;
        }
      }
    }
    chain.log_c.push_back(current);
    chain.loglik.push_back(current_est.value);
    chain.accepted.push_back(accept ? 1 : 0);
  }
  return chain;
}

struct PmmhConfig {
  std::size_t n_iters = 2000;
  EstimatorConfig estimator{};
  Matrix proposal_cov;
  LogNormalPrior prior;
  Vector initial_log_c;
  std::uint64_t seed = 1;

  void validate(int p) const {
    require(n_iters >= 1, "PmmhConfig: n_iters must be at least 1");
    require(estimator.particles >= 1, "PmmhConfig: N must be at least 1");
    require(proposal_cov.rows() == p && proposal_cov.cols() == p, "PmmhConfig: proposal covariance must be p x p");
    require(prior.mean.size() == p && prior.sd.size() == p, "PmmhConfig: prior must have p components");
    require(initial_log_c.size() == p, "PmmhConfig: initial log c must have p components");
  }
};

/// PMMH on exactly observed data with the configured likelihood estimator.
inline Chain pmmh(const PmmhConfig& cfg, const ReactionNetwork& net, const Dataset& data, Rng& rng) {
  cfg.validate(net.reaction_count());
  auto estimator = [&](const Vector& log_c, Rng& r) {
    try {
      return observed_data_loglik(net, RateConstants::from_log(log_c), data, cfg.estimator, r);
    } catch (const NumericalError&) {
      return LoglikEstimate{-kInf, false};
    }
  };
  auto prior = [&](const Vector& log_c) { return cfg.prior.log_density(log_c); };
  return run_pmmh(estimator, prior, RandomWalkProposal(cfg.proposal_cov), cfg.initial_log_c, cfg.n_iters, rng);
}

/// n / (1 + 2 sum_k rho_k), the sum stopping before the first negative sample
/// autocorrelation. A constant series has ESS 0.
inline double mcmc_ess(std::span<const double> series) {
  const std::size_t n = series.size();
  require(n >= 100, "mcmc_ess: series must have at least 100 values");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  if (!(c0 > 0.0)) {
    bump(diagnostics().constant_series);
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += (series[i] - mean) * (series[i + k] - mean);
    const double rho = ck / c0;
    if (rho < 0.0) break;
    sum += rho;
  }
  return static_cast<double>(n) / (1.0 + 2.0 * sum);
}

/// Smallest ESS over the components of the chain (rate scale).
inline double min_chain_ess(const Chain& chain) {
  double best = kInf;
  const int p = chain.log_c.empty() ? 0 : static_cast<int>(chain.log_c.front().size());
  for (int k = 0; k < p; ++k) best = std::min(best, mcmc_ess(chain.rate_series(k)));
  return p == 0 ? 0.0 : best;
}

inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

struct ParticleTuning {
  std::size_t particles = 0;
  double variance = kInf;
  std::vector<std::pair<std::size_t, double>> trace;  // (N, variance) per schedule step
};

/// Doubling schedule from `floor`: the first N whose log-estimate variance
/// over `replicates` runs is <= `bound`; otherwise the N with the smallest
/// variance. estimate(N, rng) -> LoglikEstimate.
template <class EstimateAtN>
ParticleTuning tune_particle_count(EstimateAtN&& estimate, Rng& rng, std::size_t floor = 25,
                                   std::size_t max_particles = 25600, std::size_t replicates = 50,
                                   double bound = 2.5) {
  ParticleTuning out;
  for (std::size_t N = floor; N <= max_particles; N *= 2) {
    std::vector<double> values;
    values.reserve(replicates);
    bool finite = true;
    for (std::size_t r = 0; r < replicates; ++r) {
      const LoglikEstimate e = estimate(N, rng);
      if (!e.usable()) {
        finite = false;
        break;
      }
      values.push_back(e.value);
    }
    const double var = finite ? sample_variance(values) : kInf;
    out.trace.emplace_back(N, var);
    if (var < out.variance || out.particles == 0) {
      out.variance = var;
      out.particles = N;
    }
    if (var <= bound) {
      out.particles = N;
      out.variance = var;
      return out;
    }
  }
  return out;
}

inline ParticleTuning tune_particle_count(const ReactionNetwork& net, const Dataset& data, const RateConstants& c,
                                          EstimatorConfig cfg, Rng& rng, std::size_t max_particles = 25600) {
  return tune_particle_count(
      [&](std::size_t N, Rng& r) {
        cfg.particles = N;
        return observed_data_loglik(net, c, data, cfg, r);
      },
      rng, 25, max_particles);
}

/// Sample covariance of the chain's log c draws.
inline Matrix chain_covariance(const Chain& chain, std::size_t burn_in = 0) {
  require(chain.size() > burn_in + 1, "chain_covariance: not enough draws");
  const auto p = chain.log_c.front().size();
  Vector mean = Vector::Zero(p);
  const auto n = static_cast<double>(chain.size() - burn_in);
  for (std::size_t i = burn_in; i < chain.size(); ++i) mean += chain.log_c[i];
  mean /= n;
  Matrix cov = Matrix::Zero(p, p);
  for (std::size_t i = burn_in; i < chain.size(); ++i) {
    const Vector d = chain.log_c[i] - mean;
    cov += d * d.transpose();
  }
  return cov / (n - 1.0);
}

struct PilotResult {
  Matrix proposal_cov;
  double acceptance = 0.0;
  Vector last_log_c;
  std::vector<std::pair<double, double>> rounds;  // (scale, acceptance)
};

/// Pilot run with `initial_cov`, then sample covariance * 2.38^2 / p, then
/// up to `rounds` short runs rescaling until acceptance lies in [lo, hi].
/// run(cov, iters, start) -> Chain.
template <class RunChain>
PilotResult pilot_tune(RunChain&& run, const Matrix& initial_cov, const Vector& start, std::size_t pilot_iters,
                       std::size_t tune_iters, int rounds = 4, double lo = 0.2, double hi = 0.3) {
  PilotResult out;
  const Chain pilot = run(initial_cov, pilot_iters, start);
  const auto p = static_cast<double>(start.size());
  Matrix base = chain_covariance(pilot, pilot.size() / 5) * (2.38 * 2.38 / p);
  if (!(base.diagonal().array() > 0.0).all()) base = initial_cov;
  out.last_log_c = pilot.log_c.back();
  double scale = 1.0;
  out.proposal_cov = base;
  out.acceptance = pilot.acceptance_rate();
  for (int r = 0; r < rounds; ++r) {
    const Chain trial = run(base * scale, tune_iters, out.last_log_c);
    out.acceptance = trial.acceptance_rate();
    out.last_log_c = trial.log_c.back();
    out.proposal_cov = base * scale;
    out.rounds.emplace_back(scale, out.acceptance);
    if (out.acceptance >= lo && out.acceptance <= hi) break;
    scale *= out.acceptance < lo ? 0.6 : 1.5;
    out.proposal_cov = base * scale;
  }
  return out;
}

}  // namespace mjpbridge

#endif
