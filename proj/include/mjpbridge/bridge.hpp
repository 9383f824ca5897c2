#ifndef MJPBRIDGE_BRIDGE_HPP
#define MJPBRIDGE_BRIDGE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mjpbridge/gillespie.hpp"
#include "mjpbridge/lna.hpp"
#include "mjpbridge/parallel.hpp"

namespace mjpbridge {

inline constexpr double kLogRatioCap = 30.0;
inline constexpr double kMinRemainingTime = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Cholesky (or, when singular, eigen) factorization of a PSD covariance.
/// A singular covariance is treated as a degenerate Gaussian whose density is
/// +inf on its support and 0 (log: -inf) off it.
class GaussianFactor {
 public:
  explicit GaussianFactor(const Matrix& cov) : dim_(static_cast<int>(cov.rows())) {
    llt_.compute(cov);
    full_rank_ = llt_.info() == Eigen::Success && (llt_.matrixLLT().diagonal().array() > 0.0).all();
    if (full_rank_) {
      const auto diag = llt_.matrixLLT().diagonal();
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < diag.size(); ++i) logdet += 2.0 * std::log(diag[i]);
      log_normalizer_ = -0.5 * dim_ * std::log(2.0 * std::numbers::pi) - 0.5 * logdet;
      if (!std::isfinite(log_normalizer_)) full_rank_ = false;
    }
    if (!full_rank_) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
      const Vector& ev = eig.eigenvalues();
      const double scale = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
      const double tol = 1e-12 * std::max(scale, 1e-300);
      std::vector<Eigen::Index> null_cols;
      for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i] <= tol) null_cols.push_back(i);
      null_basis_.resize(cov.rows(), static_cast<Eigen::Index>(null_cols.size()));
      for (std::size_t k = 0; k < null_cols.size(); ++k)
        null_basis_.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(null_cols[k]);
    }
  }

  bool full_rank() const { return full_rank_; }

  /// log N(r; 0, cov) with the degenerate convention above.
  double log_pdf(const Vector& residual) const {
    if (full_rank_) return log_normalizer_ + log_kernel(residual);
    const double off = (null_basis_.transpose() * residual).norm();
    return off <= 1e-9 * (1.0 + residual.norm()) ? kInf : -kInf;
  }

  /// -0.5 r' cov^{-1} r (full-rank covariances only).
  double log_kernel(const Vector& residual) const {
    const Vector w = llt_.matrixL().solve(residual);
    return -0.5 * w.squaredNorm();
  }

 private:
  int dim_;
  Eigen::LLT<Matrix> llt_;
  bool full_rank_ = false;
  double log_normalizer_ = 0.0;
  Matrix null_basis_;
};

inline double gaussian_logpdf(const Vector& y, const Vector& mean, const Matrix& cov) {
  require(y.size() == mean.size() && cov.rows() == y.size() && cov.cols() == y.size(),
          "gaussian_logpdf: dimension mismatch");
  const double scale = 1.0 + cov.cwiseAbs().maxCoeff();
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ContractViolation("gaussian_logpdf: covariance is not symmetric");
  return GaussianFactor(cov).log_pdf(y - mean);
}

/// exp(min(log_ratio, cap)); inf - inf (both densities degenerate alike) is a ratio of 1.
inline double capped_ratio(double log_ratio) {
  if (std::isnan(log_ratio)) return 1.0;
  if (log_ratio > kLogRatioCap) {
    bump(diagnostics().log_ratio_caps);
    return std::exp(kLogRatioCap);
  }
  return std::exp(log_ratio);
}

/// Y = P'x + eps, eps ~ N(0, Sigma). Sigma may be exactly zero.
class ObservationModel {
 public:
  ObservationModel() = default;
  ObservationModel(Matrix P, Matrix Sigma) : P_(std::move(P)), Sigma_(std::move(Sigma)) {
    require(Sigma_.rows() == P_.cols() && Sigma_.cols() == P_.cols(), "ObservationModel: Sigma must be d x d");
    require((Sigma_ - Sigma_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + Sigma_.cwiseAbs().maxCoeff()),
            "ObservationModel: Sigma must be symmetric");
    require(Eigen::FullPivLU<Matrix>(P_).rank() == P_.cols(), "ObservationModel: P must have full column rank");
    exact_ = Sigma_.isZero(0.0);
    if (!exact_) {
      require(Eigen::SelfAdjointEigenSolver<Matrix>(Sigma_).eigenvalues().minCoeff() >= 0.0,
              "ObservationModel: Sigma must be PSD");
    }
  }

  /// P = I_u, Sigma = sd^2 I_u.
  static ObservationModel full(int u, double sd = 0.0) {
    return {Matrix::Identity(u, u), sd * sd * Matrix::Identity(u, u)};
  }

  const Matrix& P() const { return P_; }
  const Matrix& Sigma() const { return Sigma_; }
  int dimension() const { return static_cast<int>(P_.cols()); }
  int species_count() const { return static_cast<int>(P_.rows()); }
  bool exact() const { return exact_; }

  /// log p(y | x). Exact observation: 0 on P'x == y, -inf otherwise.
  double log_density(const Vector& y, std::span<const long> x) const {
    const Vector projected = P_.transpose() * to_vector(x);
    if (exact_) return (projected - y).cwiseAbs().maxCoeff() <= 1e-9 ? 0.0 : -kInf;
    return GaussianFactor(Sigma_).log_pdf(y - projected);
  }

 private:
  Matrix P_;
  Matrix Sigma_;
  bool exact_ = true;
};

struct BridgeTarget {
  Vector y;
  double horizon = 1.0;
  ObservationModel obs;

  void validate(int species) const {
    require(horizon > 0.0, "BridgeTarget: horizon must be positive");
    require(obs.species_count() == species, "BridgeTarget: P must have u rows");
    require(y.size() == obs.dimension(), "BridgeTarget: observation length must equal d");
  }
};

namespace detail {

inline double remaining(const BridgeTarget& target, double t) {
  return std::max(target.horizon - t, kMinRemainingTime);
}

inline void true_hazard(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x, Vector& out) {
  out.resize(net.reaction_count());
  net.hazards(c, x, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
}

inline Vector shifted(const ReactionNetwork& net, std::span<const long> x, int i) {
  Vector xp = to_vector(x);
  xp += net.stoichiometry_real().col(i);
  return xp;
}

}  // namespace detail

/// Unconditioned hazard.
class BlindHazard {
 public:
  BlindHazard(const ReactionNetwork& net, RateConstants c) : net_(&net), c_(std::move(c)) {}
  void hazard(std::span<const long> x, double, Vector& out) const { detail::true_hazard(*net_, c_, x, out); }

 private:
  const ReactionNetwork* net_;
  RateConstants c_;
};

/// Gaussian approximation of the number of reactions until the observation,
/// conditioned on y_T, with componentwise truncation at zero.
class GwHazard {
 public:
  GwHazard(const ReactionNetwork& net, RateConstants c, BridgeTarget target)
      : net_(&net), c_(std::move(c)), target_(std::move(target)) {
    target_.validate(net.species_count());
    PtS_ = target_.obs.P().transpose() * net.stoichiometry_real();
  }

  void hazard(std::span<const long> x, double t, Vector& out) const {
    detail::true_hazard(*net_, c_, x, out);
    if (out.sum() <= 0.0) return;
    const double dt = detail::remaining(target_, t);
    const Matrix HA = out.asDiagonal() * PtS_.transpose();  // H S'P  (v x d)
    const Matrix inner = PtS_ * HA * dt + target_.obs.Sigma();
    const Vector innovation = target_.y - target_.obs.P().transpose() * to_vector(x) - PtS_ * out * dt;
    Eigen::LLT<Matrix> llt(inner);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 1e-300).all()) {
      bump(diagnostics().gw_blind_fallbacks);
      return;
    }
    Vector conditioned = out + HA * llt.solve(innovation);
    out = conditioned.cwiseMax(0.0);
  }

 private:
  const ReactionNetwork* net_;
  RateConstants c_;
  BridgeTarget target_;
  Matrix PtS_;
};

/// Conditioned hazard with the transition density replaced by a single
/// Euler-Maruyama step of the chemical Langevin equation.
class FcleHazard {
 public:
  FcleHazard(const ReactionNetwork& net, RateConstants c, BridgeTarget target)
      : net_(&net), c_(std::move(c)), target_(std::move(target)) {
    target_.validate(net.species_count());
    PtS_ = target_.obs.P().transpose() * net.stoichiometry_real();
  }

  void hazard(std::span<const long> x, double t, Vector& out) const {
    detail::true_hazard(*net_, c_, x, out);
    if (out.sum() <= 0.0) return;
    const double dt = detail::remaining(target_, t);
    const Vector xv = to_vector(x);
    const GaussianFactor current(covariance(out, dt));
    if (!current.full_rank())
      throw DegenerateCovariance("F-CLE: singular one-step covariance at the current state");
    const double log_current = current.log_pdf(target_.y - mean(xv, out, dt));
    Vector hp(net_->reaction_count());
    for (int i = 0; i < net_->reaction_count(); ++i) {
      if (out[i] <= 0.0) continue;
      const Vector xp = xv + net_->stoichiometry_real().col(i);
      net_->hazards(c_, std::span<const double>(xp.data(), static_cast<std::size_t>(xp.size())),
                    std::span<double>(hp.data(), static_cast<std::size_t>(hp.size())));
      const double log_next = GaussianFactor(covariance(hp, dt)).log_pdf(target_.y - mean(xp, hp, dt));
      out[i] *= capped_ratio(log_next - log_current);
    }
  }

 private:
  Vector mean(const Vector& x, const Vector& h, double dt) const {
    return target_.obs.P().transpose() * x + PtS_ * h * dt;
  }
  Matrix covariance(const Vector& h, double dt) const {
    return PtS_ * h.asDiagonal() * PtS_.transpose() * dt + target_.obs.Sigma();
  }

  const ReactionNetwork* net_;
  RateConstants c_;
  BridgeTarget target_;
  Matrix PtS_;
};

/// Conditioned hazard using the LNA re-integrated from each candidate state
/// (v + 1 integrations per evaluation).
class FlnarHazard {
 public:
  FlnarHazard(const ReactionNetwork& net, RateConstants c, BridgeTarget target, OdeOptions ode = LnaOptions{}.restart_ode)
      : net_(&net), c_(std::move(c)), target_(std::move(target)), ode_(ode) {
    target_.validate(net.species_count());
  }

  void hazard(std::span<const long> x, double t, Vector& out) const {
    detail::true_hazard(*net_, c_, x, out);
    if (out.sum() <= 0.0) return;
    const double t_eff = std::min(t, target_.horizon - kMinRemainingTime);
    const double log_current = log_density(to_vector(x), t_eff, t);
    for (int i = 0; i < net_->reaction_count(); ++i) {
      if (out[i] <= 0.0) continue;
      out[i] *= capped_ratio(log_density(detail::shifted(*net_, x, i), t_eff, t) - log_current);
    }
  }

 private:
  double log_density(const Vector& x, double t_eff, double t_event) const {
    GaussianApprox g;
    try {
      g = solve_lna_restart(*net_, c_, x, t_eff, target_.horizon, ode_);
    } catch (const IntegrationFailure& e) {
      throw IntegrationFailure(std::string("F-LNAR restart from event: ") + e.what(), t_event);
    }
    const Matrix& P = target_.obs.P();
    const Matrix cov = symmetrized(P.transpose() * g.cov * P) + target_.obs.Sigma();
    return GaussianFactor(cov).log_pdf(target_.y - P.transpose() * g.mean);
  }

  const ReactionNetwork* net_;
  RateConstants c_;
  BridgeTarget target_;
  OdeOptions ode_;
};

/// Conditioned hazard from a single LNA integration over (0, T], using the
/// sub-interval identities for G and psi at each event time.
class FlnaHazard {
 public:
  FlnaHazard(const ReactionNetwork& net, RateConstants c, BridgeTarget target, std::shared_ptr<const LnaTable> table)
      : net_(&net), c_(std::move(c)), target_(std::move(target)), table_(std::move(table)) {
    target_.validate(net.species_count());
    require(table_ != nullptr, "F-LNA: missing LNA table");
    require(std::abs(table_->horizon() - target_.horizon) <= 1e-12 * std::max(1.0, target_.horizon),
            "F-LNA: table horizon must match the observation time");
  }

  FlnaHazard(const ReactionNetwork& net, RateConstants c, BridgeTarget target, std::span<const long> x0,
             const LnaOptions& opts = {})
      : FlnaHazard(net, c, target,
                   std::make_shared<const LnaTable>(LnaTable::solve(net, c, to_vector(x0), target.horizon, opts))) {}

  const LnaTable& table() const { return *table_; }

  void hazard(std::span<const long> x, double t, Vector& out) const {
    detail::true_hazard(*net_, c_, x, out);
    if (out.sum() <= 0.0) return;
    const double T = target_.horizon;
    const double t_eff = std::min(t, T - kMinRemainingTime);
    const auto prop = table_->propagator(t_eff, T);
    const Matrix& P = target_.obs.P();
    const Matrix PtG = P.transpose() * prop.G;
    const GaussianFactor factor(symmetrized(P.transpose() * prop.cov * P) + target_.obs.Sigma());
    const Vector r0 = target_.y - P.transpose() * prop.z_T - PtG * (to_vector(x) - prop.z_t);
    const double log_current = factor.full_rank() ? factor.log_kernel(r0) : factor.log_pdf(r0);
    for (int i = 0; i < net_->reaction_count(); ++i) {
      if (out[i] <= 0.0) continue;
      const Vector ri = r0 - PtG * net_->stoichiometry_real().col(i);
      const double log_next = factor.full_rank() ? factor.log_kernel(ri) : factor.log_pdf(ri);
      out[i] *= capped_ratio(log_next - log_current);
    }
  }

 private:
  const ReactionNetwork* net_;
  RateConstants c_;
  BridgeTarget target_;
  std::shared_ptr<const LnaTable> table_;
};

enum class BridgeMethod { Blind, Gw, Fcle, Flnar, Flna };

inline std::string_view to_string(BridgeMethod m) {
  switch (m) {
    case BridgeMethod::Blind: return "blind";
    case BridgeMethod::Gw: return "gw";
    case BridgeMethod::Fcle: return "fcle";
    case BridgeMethod::Flnar: return "flnar";
    case BridgeMethod::Flna: return "flna";
  }
  return "?";
}

inline std::optional<BridgeMethod> parse_bridge_method(std::string_view name) {
  for (auto m : {BridgeMethod::Blind, BridgeMethod::Gw, BridgeMethod::Fcle, BridgeMethod::Flnar, BridgeMethod::Flna})
    if (to_string(m) == name) return m;
  if (name == "ch") return BridgeMethod::Gw;
  return std::nullopt;
}

/// Closed set of providers behind one dispatching type.
class AnyHazard {
 public:
  using Variant = std::variant<BlindHazard, GwHazard, FcleHazard, FlnarHazard, FlnaHazard>;
  template <class P>
  AnyHazard(P p) : impl_(std::move(p)) {}
  void hazard(std::span<const long> x, double t, Vector& out) const {
    std::visit([&](const auto& p) { p.hazard(x, t, out); }, impl_);
  }
  const Variant& variant() const { return impl_; }

 private:
  Variant impl_;
};

/// Builds the provider for `method`; F-LNA integrates its table here.
inline AnyHazard make_hazard(BridgeMethod method, const ReactionNetwork& net, const RateConstants& c,
                             std::span<const long> x0, const BridgeTarget& target, const LnaOptions& lna = {}) {
  switch (method) {
    case BridgeMethod::Blind: return BlindHazard(net, c);
    case BridgeMethod::Gw: return GwHazard(net, c, target);
    case BridgeMethod::Fcle: return FcleHazard(net, c, target);
    case BridgeMethod::Flnar: return FlnarHazard(net, c, target, lna.restart_ode);
    case BridgeMethod::Flna: return FlnaHazard(net, c, target, x0, lna);
  }
  throw ContractViolation("unknown bridge method");
}

/// Log importance weight of a path generated under `provider`'s
/// piecewise-constant hazard (provider re-evaluated at each event time).
template <HazardProvider Provider>
double log_weight(const Path& path, const ReactionNetwork& net, const RateConstants& c, const Provider& provider,
                  const BridgeTarget& target) {
  double lw = target.obs.log_density(target.y, path.final_state());
  if (lw == -kInf) return -kInf;
  Vector h, proposal(net.reaction_count());
  const std::size_t n = path.event_count();
  for (std::size_t k = 0; k <= n; ++k) {
    const auto x = path.state(k);
    const double t = k == 0 ? 0.0 : path.event_time(k - 1);
    const double t_next = k == n ? target.horizon : path.event_time(k);
    detail::true_hazard(net, c, x, h);
    provider.hazard(x, t, proposal);
    if (k < n) {
      const int nu = path.reaction(k);
      if (!(proposal[nu] > 0.0)) return -kInf;
      lw += std::log(h[nu]) - std::log(proposal[nu]);
    }
    lw -= (h.sum() - proposal.sum()) * (t_next - t);
  }
  return lw;
}

struct ResampleOptions {
  bool resample = false;
  bool systematic = false;
  bool keep_paths = true;
  unsigned threads = 1;
  SimulationOptions simulation{};
};

struct WeightedSample {
  std::vector<Path> paths;
  std::vector<double> log_weights;
  std::vector<std::size_t> event_counts;
  std::vector<std::size_t> ancestors;  // filled when resampling
  double log_estimate = -kInf;
  double estimate = 0.0;
  double ess = 0.0;
};

inline double log_sum_exp(std::span<const double> values) {
  double m = -kInf;
  for (double v : values) m = std::max(m, v);
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

/// (sum w)^2 / sum w^2 from log weights; 0 when every weight vanishes.
inline double ess_from_log_weights(std::span<const double> log_weights) {
  double m = -kInf;
  for (double v : log_weights) m = std::max(m, v);
  if (m == -kInf) return 0.0;
  double s1 = 0.0, s2 = 0.0;
  for (double v : log_weights) {
    const double w = std::exp(v - m);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

inline std::vector<std::size_t> resample_indices(std::span<const double> log_weights, std::size_t count, Rng& rng,
                                                 bool systematic) {
  double m = -kInf;
  for (double v : log_weights) m = std::max(m, v);
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::exp(log_weights[j] - m);
    total += w[j];
  }
  std::vector<std::size_t> idx(count);
  if (systematic) {
    const double u0 = rng.uniform() / static_cast<double>(count);
    double acc = w[0] / total;
    std::size_t j = 0;
    for (std::size_t k = 0; k < count; ++k) {
      const double target = u0 + static_cast<double>(k) / static_cast<double>(count);
      while (target > acc && j + 1 < w.size()) acc += w[++j] / total;
      idx[k] = j;
    }
  } else {
    for (auto& i : idx) i = rng.categorical(w, total);
  }
  return idx;
}

/// N independent bridge draws, their log weights and the unbiased estimate of
/// p(y_T | x0). Draw j uses its own stream so results do not depend on threads.
template <HazardProvider Provider>
WeightedSample weighted_resample(const Provider& provider, const ReactionNetwork& net, const RateConstants& c,
                                 std::span<const long> x0, const BridgeTarget& target, std::size_t N, Rng& rng,
                                 const ResampleOptions& opts = {}) {
  require(N >= 1, "weighted_resample: N must be at least 1");
  target.validate(net.species_count());
  const std::uint64_t key = rng.next();
  WeightedSample out;
  out.log_weights.assign(N, -kInf);
  out.event_counts.assign(N, 0);
  if (opts.keep_paths) out.paths.resize(N);
  parallel_for(N, opts.threads, [&](std::size_t j) {
    Rng draw_rng(key, j);
    ProposalDraw draw = simulate_proposal(provider, net, c, x0, target.horizon, draw_rng, true, opts.simulation);
    const double terminal = target.obs.log_density(target.y, draw.path.final_state());
    out.log_weights[j] = terminal == -kInf ? -kInf : terminal + draw.log_likelihood_ratio;
    out.event_counts[j] = draw.path.event_count();
    if (opts.keep_paths) out.paths[j] = std::move(draw.path);
  });
  out.log_estimate = log_sum_exp(out.log_weights) - std::log(static_cast<double>(N));
  out.estimate = std::exp(out.log_estimate);
  out.ess = ess_from_log_weights(out.log_weights);
  if (out.log_estimate == -kInf) {
    bump(diagnostics().weight_collapses);
  } else if (opts.resample) {
    out.ancestors = resample_indices(out.log_weights, N, rng, opts.systematic);
  }
  return out;
}

}  // namespace mjpbridge

#endif
