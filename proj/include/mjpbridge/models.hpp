#ifndef MJPBRIDGE_MODELS_HPP
#define MJPBRIDGE_MODELS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "mjpbridge/dataset.hpp"
#include "mjpbridge/gillespie.hpp"

namespace mjpbridge {

struct BundledModel {
  std::string name;
  ReactionNetwork network;
  RateConstants rates;
  State initial_state;
};

/// X -> 0 with hazard c x.
inline ReactionNetwork death_network() {
  IntMatrix S(1, 1), A(1, 1);
  S << -1;
  A << 1;
  return ReactionNetwork(S, A, {"X"}, {"death"});
}

/// Prey X1, predator X2: X1 -> 2X1, X1 + X2 -> 2X2, X2 -> 0.
inline ReactionNetwork lotka_volterra_network() {
  IntMatrix S(2, 3), A(3, 2);
  S << 1, -1, 0, 0, 1, -1;
  A << 1, 0, 1, 1, 0, 1;
  return ReactionNetwork(S, A, {"prey", "predator"}, {"prey_birth", "predation", "predator_death"});
}

/// Susceptibles X1, infectives X2: X1 + X2 -> 2X2, X2 -> 0.
inline ReactionNetwork sir_network() {
  IntMatrix S(2, 2), A(2, 2);
  S << -1, 0, 1, -1;
  A << 1, 1, 0, 1;
  return ReactionNetwork(S, A, {"S", "I"}, {"infection", "removal"});
}

inline BundledModel death_model() { return {"death", death_network(), RateConstants{0.5}, State{50}}; }
inline BundledModel lotka_volterra_model() {
  return {"lv", lotka_volterra_network(), RateConstants{0.5, 0.0025, 0.3}, State{50, 50}};
}
inline BundledModel sir_model() { return {"sir", sir_network(), RateConstants{0.02, 3.2}, State{254, 7}}; }

inline BundledModel bundled_model(std::string_view name) {
  if (name == "death") return death_model();
  if (name == "lv" || name == "lotka-volterra") return lotka_volterra_model();
  if (name == "sir") return sir_model();
  throw ConfigError("unknown bundled model '" + std::string(name) + "' (expected death, lv or sir)");
}

inline double log_binomial_coefficient(long n, long k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// log P(X_t = xt | X_0 = x0) for the death process.
inline double death_transition_log_pmf(long x0, long xt, double c, double t) {
  if (xt < 0 || xt > x0) return -std::numeric_limits<double>::infinity();
  if (t <= 0.0) return xt == x0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double survive_log = -c * t;
  const double die_log = std::log1p(-std::exp(-c * t));
  double lp = log_binomial_coefficient(x0, xt) + static_cast<double>(xt) * survive_log;
  if (x0 > xt) lp += static_cast<double>(x0 - xt) * die_log;
  return lp;
}

inline double death_transition_pmf(long x0, long xt, double c, double t) {
  return std::exp(death_transition_log_pmf(x0, xt, c, t));
}

struct DeathLnaClosedForm {
  double z;
  double G;
  double psi;
};

inline DeathLnaClosedForm death_lna_closed(double x0, double c, double t) {
  return {x0 * std::exp(-c * t), std::exp(-c * t), x0 * std::expm1(c * t)};
}

/// End-point target x_{T,(alpha)} for the death process: the x whose CDF
/// P(X_T <= x) is closest to alpha/100 (ties go to the smaller x).
inline long death_quantile(long x0, double c, double T, double alpha) {
  const double level = alpha / 100.0;
  double cdf = 0.0;
  long best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (long x = 0; x <= x0; ++x) {
    cdf += death_transition_pmf(x0, x, c, T);
    const double gap = std::abs(cdf - level);
    if (gap < best_gap - 1e-15) {
      best_gap = gap;
      best = x;
    }
  }
  return best;
}

/// Sample quantile with linear interpolation between order statistics
/// (the usual "type 7" definition).
inline double sample_quantile(std::vector<double> values, double prob) {
  require(!values.empty(), "sample_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

enum class TargetGenerator { EulerMaruyama, Ssa };

struct QuantileOptions {
  TargetGenerator generator = TargetGenerator::EulerMaruyama;
  double em_step = 0.01;
};

/// One Euler-Maruyama path of the chemical Langevin equation, returning X_T.
inline Vector simulate_cle_em(const ReactionNetwork& net, const RateConstants& c, const Vector& x0, double T,
                              double step, Rng& rng) {
  Vector x = x0;
  const int u = net.species_count();
  const auto steps = static_cast<long>(std::ceil(T / step - 1e-9));
  const double dt = T / static_cast<double>(steps);
  Vector z(u);
  for (long k = 0; k < steps; ++k) {
    const Vector a = drift(net, c, x);
    const Matrix b = diffusion(net, c, x) * dt;
    for (int j = 0; j < u; ++j) z[j] = rng.normal();
    Eigen::LLT<Matrix> llt(b);
    Vector noise;
    if (llt.info() == Eigen::Success) {
      noise = llt.matrixL() * z;
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
      noise = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z;
    }
    x += a * dt + noise;
  }
  return x;
}

/// Marginal alpha% quantiles of Y_T = X_T + N(0, sigma^2 I) given X_0 = x0.
inline Vector quantile_targets(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x0,
                               double sigma, double T, double alpha, std::size_t n_sims, Rng& rng,
                               const QuantileOptions& opts = {}) {
  require(alpha > 0.0 && alpha < 100.0, "quantile_targets: alpha must lie in (0, 100)");
  require(n_sims >= 1, "quantile_targets: need at least one simulation");
  const int u = net.species_count();
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(u));
  const Vector start = to_vector(x0);
  for (std::size_t s = 0; s < n_sims; ++s) {
    Vector xT;
    if (opts.generator == TargetGenerator::EulerMaruyama) {
      xT = simulate_cle_em(net, c, start, T, opts.em_step, rng);
    } else {
      xT = to_vector(simulate(net, c, x0, T, rng).final_state());
    }
    for (int j = 0; j < u; ++j)
      samples[static_cast<std::size_t>(j)].push_back(xT[j] + (sigma > 0.0 ? sigma * rng.normal() : 0.0));
  }
  Vector q(u);
  for (int j = 0; j < u; ++j) q[j] = sample_quantile(std::move(samples[static_cast<std::size_t>(j)]), alpha / 100.0);
  return q;
}

/// Bundled Lotka-Volterra end-point targets y_{T,(alpha)} for x0 = (50, 50),
/// sigma = 5, T in {1, 2, 3, 4}, alpha in {1, 50, 99}.
inline Vector lv_quantile_target(int T, int alpha) {
  static constexpr std::array<std::array<std::array<double, 2>, 4>, 3> table{{
      {{{53.34, 27.99}, {75.83, 22.59}, {109.51, 20.90}, {157.34, 23.65}}},
      {{{73.25, 58.43}, {108.69, 39.92}, {162.03, 41.23}, {238.62, 49.89}}},
      {{{95.33, 58.43}, {147.28, 58.26}, {225.77, 64.19}, {337.65, 83.79}}},
  }};
  require(T >= 1 && T <= 4, "lv_quantile_target: T must be 1..4");
  int row = alpha == 1 ? 0 : alpha == 50 ? 1 : alpha == 99 ? 2 : -1;
  require(row >= 0, "lv_quantile_target: alpha must be 1, 50 or 99");
  const auto& v = table[static_cast<std::size_t>(row)][static_cast<std::size_t>(T - 1)];
  Vector y(2);
  y << v[0], v[1];
  return y;
}

/// Median targets for the low-count study: x0 = (s, s) with sigma scaled to
/// x0, s in {10, 25, 50}.
inline Vector lv_lowcount_target(int scale, int T) {
  static constexpr std::array<std::array<std::array<double, 2>, 4>, 3> table{{
      {{{15.80, 7.68}, {25.46, 5.94}, {41.17, 4.72}, {67.11, 3.92}}},
      {{{38.67, 20.04}, {60.72, 16.71}, {96.09, 14.92}, {152.50, 14.87}}},
      {{{73.25, 58.43}, {108.69, 39.92}, {162.03, 41.23}, {238.62, 49.89}}},
  }};
  require(T >= 1 && T <= 4, "lv_lowcount_target: T must be 1..4");
  int row = scale == 10 ? 0 : scale == 25 ? 1 : scale == 50 ? 2 : -1;
  require(row >= 0, "lv_lowcount_target: initial scale must be 10, 25 or 50");
  const auto& v = table[static_cast<std::size_t>(row)][static_cast<std::size_t>(T - 1)];
  Vector y(2);
  y << v[0], v[1];
  return y;
}

inline double lv_lowcount_sigma(int scale) { return scale / 10.0; }

/// Susceptible/infective counts for the 1666 Eyam plague (time in months),
/// observed without error.
inline Dataset eyam_data() {
  Dataset data;
  data.times = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  const std::array<double, 8> s{254, 235, 201, 153, 121, 110, 97, 83};
  const std::array<double, 8> i{7, 14, 22, 29, 20, 8, 8, 0};
  for (std::size_t k = 0; k < s.size(); ++k) {
    Vector y(2);
    y << s[k], i[k];
    data.observations.push_back(y);
  }
  data.obs = ObservationModel::full(2);
  data.columns = {"S", "I"};
  return data;
}

}  // namespace mjpbridge

#endif
