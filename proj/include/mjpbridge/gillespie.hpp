#ifndef MJPBRIDGE_GILLESPIE_HPP
#define MJPBRIDGE_GILLESPIE_HPP

#include <cmath>
#include <concepts>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "mjpbridge/network.hpp"
#include "mjpbridge/rng.hpp"

namespace mjpbridge {

/// MJP trajectory on (0, T]: event times, zero-based reaction indices and the
/// state after each event (state 0 is the initial state).
class Path {
 public:
  Path() = default;
  Path(std::span<const long> x0, double horizon)
      : u_(static_cast<int>(x0.size())), horizon_(horizon), states_(x0.begin(), x0.end()) {}

  int species_count() const { return u_; }
  double horizon() const { return horizon_; }
  std::size_t event_count() const { return times_.size(); }
  double event_time(std::size_t k) const { return times_[k]; }
  int reaction(std::size_t k) const { return reactions_[k]; }
  const std::vector<double>& event_times() const { return times_; }
  const std::vector<int>& reactions() const { return reactions_; }

  /// k = 0 is the initial state; k = i is the state after event i.
  std::span<const long> state(std::size_t k) const {
    return {states_.data() + k * static_cast<std::size_t>(u_), static_cast<std::size_t>(u_)};
  }
  std::span<const long> initial_state() const { return state(0); }
  std::span<const long> final_state() const { return state(event_count()); }

  /// State in force at time t (right-continuous).
  std::span<const long> state_at(double t) const {
    std::size_t k = 0;
    while (k < times_.size() && times_[k] <= t) ++k;
    return state(k);
  }

  void push_event(double t, int reaction, std::span<const long> next) {
    times_.push_back(t);
    reactions_.push_back(reaction);
    states_.insert(states_.end(), next.begin(), next.end());
  }

  bool satisfies_invariants(const ReactionNetwork& net) const {
    double last = 0.0;
    for (std::size_t k = 0; k < event_count(); ++k) {
      if (!(times_[k] > last) || times_[k] > horizon_) return false;
      last = times_[k];
      const auto before = state(k);
      const auto after = state(k + 1);
      for (int j = 0; j < u_; ++j)
        if (after[j] != before[j] + net.stoichiometry()(j, reactions_[k])) return false;
    }
    for (long x : states_)
      if (x < 0) return false;
    return true;
  }

  static void write_csv_header(std::ostream& os, const ReactionNetwork& net) {
    os << "path,time,reaction";
    for (const auto& s : net.species_names()) os << ',' << s;
    os << '\n';
  }

  /// One row per state; reaction is 1-based, 0 on the initial row.
  void write_csv_rows(std::ostream& os, std::size_t path_id) const {
    const auto old = os.precision(17);
    for (std::size_t k = 0; k <= event_count(); ++k) {
      os << path_id << ',' << (k == 0 ? 0.0 : times_[k - 1]) << ',' << (k == 0 ? 0 : reactions_[k - 1] + 1);
      for (long x : state(k)) os << ',' << x;
      os << '\n';
    }
    os.precision(old);
  }

 private:
  int u_ = 0;
  double horizon_ = 0.0;
  std::vector<double> times_;
  std::vector<int> reactions_;
  std::vector<long> states_;
};

/// Anything that can produce a length-v hazard at (state, time).
template <class P>
concept HazardProvider = requires(const P& p, std::span<const long> x, double t, Vector& out) {
  { p.hazard(x, t, out) };
};

struct SimulationOptions {
  /// Combined proposal rate above which the event loop gives up.
  double max_combined_rate = 1e16;
};

/// Outcome of a provider-driven simulation together with the path's log
/// likelihood ratio log dP/dQ (the weight without its terminal density).
struct ProposalDraw {
  Path path;
  double log_likelihood_ratio = 0.0;
};

namespace detail {

inline double next_event_time(double t, double wait) {
  const double candidate = t + wait;
  return candidate > t ? candidate : std::nextafter(t, std::numeric_limits<double>::infinity());
}

inline void validate_hazard(const Vector& h) {
  for (Eigen::Index i = 0; i < h.size(); ++i)
    if (!(h[i] >= 0.0) || !std::isfinite(h[i]))
      throw ProviderContractError("hazard provider returned a negative or non-finite rate");
}

}  // namespace detail

/// Gillespie's direct method.
inline Path simulate(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x0, double T,
                     Rng& rng) {
  require(T > 0.0, "simulate: horizon must be positive");
  require(static_cast<int>(x0.size()) == net.species_count(), "simulate: state has wrong length");
  Path path(x0, T);
  State x(x0.begin(), x0.end());
  std::vector<double> h(static_cast<std::size_t>(net.reaction_count()));
  double t = 0.0;
  while (true) {
    net.hazards(c, std::span<const long>(x), h);
    double h0 = 0.0;
    for (double hi : h) h0 += hi;
    if (h0 <= 0.0) break;
    const double wait = rng.exponential(h0);
    if (t + wait > T) break;
    const auto i = static_cast<int>(rng.categorical(h, h0));
    t = detail::next_event_time(t, wait);
    for (int j = 0; j < net.species_count(); ++j) x[static_cast<std::size_t>(j)] += net.stoichiometry()(j, i);
    path.push_event(t, i, x);
  }
  return path;
}

/// Direct method with the provider's hazard held constant between events.
/// When `accumulate` is set, also returns log dP/dQ of the generated path.
template <HazardProvider Provider>
ProposalDraw simulate_proposal(const Provider& provider, const ReactionNetwork& net, const RateConstants& c,
                               std::span<const long> x0, double T, Rng& rng, bool accumulate = true,
                               const SimulationOptions& opts = {}) {
  require(T > 0.0, "simulate_with_hazard: horizon must be positive");
  require(static_cast<int>(x0.size()) == net.species_count(), "simulate_with_hazard: state has wrong length");
  ProposalDraw draw{Path(x0, T), 0.0};
  State x(x0.begin(), x0.end());
  Vector proposal(net.reaction_count());
  std::vector<double> h(static_cast<std::size_t>(net.reaction_count()));
  double t = 0.0;
  double log_ratio = 0.0;
  while (true) {
    provider.hazard(std::span<const long>(x), t, proposal);
    detail::validate_hazard(proposal);
    const double proposal_total = proposal.sum();
    double h0 = 0.0;
    if (accumulate) {
      net.hazards(c, std::span<const long>(x), h);
      for (double hi : h) h0 += hi;
    }
    if (proposal_total > opts.max_combined_rate)
      throw HazardOverflow("conditioned hazard exceeds the combined-rate cap at t=" + std::to_string(t));
    if (proposal_total <= 0.0) {
      log_ratio -= h0 * (T - t);
      break;
    }
    const double wait = rng.exponential(proposal_total);
    if (t + wait > T) {
      log_ratio -= (h0 - proposal_total) * (T - t);
      break;
    }
    const auto i = static_cast<int>(
        rng.categorical(std::span<const double>(proposal.data(), static_cast<std::size_t>(proposal.size())),
                        proposal_total));
    const double t_next = detail::next_event_time(t, wait);
    if (accumulate) {
      log_ratio += std::log(h[static_cast<std::size_t>(i)]) - std::log(proposal[i]);
      log_ratio -= (h0 - proposal_total) * (t_next - t);
    }
    t = t_next;
    for (int j = 0; j < net.species_count(); ++j) {
      x[static_cast<std::size_t>(j)] += net.stoichiometry()(j, i);
      if (x[static_cast<std::size_t>(j)] < 0)
        throw InvalidTransition("proposal fired reaction " + net.reaction_names()[static_cast<std::size_t>(i)] +
                                " from a state where it is impossible");
    }
    draw.path.push_event(t, i, x);
  }
  draw.log_likelihood_ratio = accumulate ? log_ratio : 0.0;
  return draw;
}

template <HazardProvider Provider>
Path simulate_with_hazard(const Provider& provider, const ReactionNetwork& net, const RateConstants& c,
                          std::span<const long> x0, double T, Rng& rng, const SimulationOptions& opts = {}) {
  return simulate_proposal(provider, net, c, x0, T, rng, false, opts).path;
}

}  // namespace mjpbridge

#endif
