#ifndef MJPBRIDGE_NETWORK_HPP
#define MJPBRIDGE_NETWORK_HPP

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mjpbridge/diagnostics.hpp"
#include "mjpbridge/error.hpp"

namespace mjpbridge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;

/// Molecule counts, one entry per species.
using State = std::vector<long>;

inline Vector to_vector(std::span<const long> x) {
  Vector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) out[static_cast<Eigen::Index>(j)] = static_cast<double>(x[j]);
  return out;
}

/// Per-reaction rate constants; all strictly positive.
class RateConstants {
 public:
  RateConstants() = default;
  explicit RateConstants(Vector values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.size(); ++i)
      require(std::isfinite(values_[i]) && values_[i] > 0.0, "rate constants must be finite and positive");
  }
  RateConstants(std::initializer_list<double> values)
      : RateConstants(Eigen::Map<const Vector>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

  static RateConstants from_log(const Vector& log_values) { return RateConstants(log_values.array().exp().matrix()); }

  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }
  const Vector& values() const { return values_; }
  Vector log_values() const { return values_.array().log().matrix(); }

 private:
  Vector values_;
};

/// Mass-action reaction network: u species, v reactions, stoichiometry S (u x v)
/// and reactant orders A (v x u). Immutable after construction.
class ReactionNetwork {
 public:
  ReactionNetwork(IntMatrix stoichiometry, IntMatrix reactant_orders, std::vector<std::string> species = {},
                  std::vector<std::string> reactions = {})
      : S_(std::move(stoichiometry)), A_(std::move(reactant_orders)), species_(std::move(species)),
        reactions_(std::move(reactions)) {
    const auto u = S_.rows();
    const auto v = S_.cols();
    require(u > 0 && v > 0, "network needs at least one species and one reaction");
    require(A_.rows() == v && A_.cols() == u, "reactant-order matrix must be v x u");
    require((A_.array() >= 0).all(), "reactant orders must be nonnegative");
    if (species_.empty())
      for (Eigen::Index j = 0; j < u; ++j) species_.push_back("X" + std::to_string(j + 1));
    if (reactions_.empty())
      for (Eigen::Index i = 0; i < v; ++i) reactions_.push_back("R" + std::to_string(i + 1));
    require(static_cast<Eigen::Index>(species_.size()) == u, "species label count must equal u");
    require(static_cast<Eigen::Index>(reactions_.size()) == v, "reaction label count must equal v");
    S_real_ = S_.cast<double>();
    for (Eigen::Index i = 0; i < v; ++i) {
      Reactants r;
      double fact = 1.0;
      for (Eigen::Index j = 0; j < u; ++j) {
        const int a = A_(i, j);
        if (a == 0) continue;
        r.terms.emplace_back(static_cast<int>(j), a);
        for (int k = 2; k <= a; ++k) fact *= k;
      }
      r.inv_factorial = 1.0 / fact;
      reactants_.push_back(std::move(r));
    }
  }

  int species_count() const { return static_cast<int>(S_.rows()); }
  int reaction_count() const { return static_cast<int>(S_.cols()); }
  const IntMatrix& stoichiometry() const { return S_; }
  const Matrix& stoichiometry_real() const { return S_real_; }
  const IntMatrix& reactant_orders() const { return A_; }
  const std::vector<std::string>& species_names() const { return species_; }
  const std::vector<std::string>& reaction_names() const { return reactions_; }

  /// h_i = c_i prod_j binom(x_j, a_ij) on the integer lattice.
  void hazards(const RateConstants& c, std::span<const long> x, std::span<double> h) const {
    check_dims(c, x.size(), h.size());
    for (int i = 0; i < reaction_count(); ++i) {
      double value = c[i] * reactants_[i].inv_factorial;
      for (auto [j, a] : reactants_[i].terms) {
        const long xj = x[j];
        if (xj < a) {
          value = 0.0;
          break;
        }
        for (int k = 0; k < a; ++k) value *= static_cast<double>(xj - k);
      }
      h[i] = value;
    }
  }

  /// Falling-factorial extension for real-valued states. Negative components
  /// are clamped to zero and any negative result is clamped to zero; both are
  /// counted in diagnostics().hazard_clamps.
  void hazards(const RateConstants& c, std::span<const double> z, std::span<double> h) const {
    check_dims(c, z.size(), h.size());
    bool clamped = false;
    for (int i = 0; i < reaction_count(); ++i) {
      double value = c[i] * reactants_[i].inv_factorial;
      for (auto [j, a] : reactants_[i].terms) {
        double zj = z[j];
        if (zj < 0.0) {
          zj = 0.0;
          clamped = true;
        }
        for (int k = 0; k < a; ++k) value *= (zj - k);
      }
      if (value < 0.0) {
        value = 0.0;
        clamped = true;
      }
      h[i] = value;
    }
    if (clamped) bump(diagnostics().hazard_clamps);
  }

  /// dh_i/dz_k (v x u) at the clamped state, written column-major into out.
  void hazard_gradient(const RateConstants& c, std::span<const double> z, std::span<double> out) const {
    const int u = species_count();
    const int v = reaction_count();
    require(static_cast<int>(out.size()) == u * v, "gradient buffer must hold v*u entries");
    for (int k = 0; k < u; ++k)
      for (int i = 0; i < v; ++i) out[static_cast<std::size_t>(k * v + i)] = 0.0;
    for (int i = 0; i < v; ++i) {
      const auto& terms = reactants_[i].terms;
      for (std::size_t m = 0; m < terms.size(); ++m) {
        const auto [k, ak] = terms[m];
        double value = c[i] * reactants_[i].inv_factorial * falling_factorial_derivative(clamp0(z[k]), ak);
        for (std::size_t n = 0; n < terms.size(); ++n) {
          if (n == m) continue;
          const auto [j, aj] = terms[n];
          value *= falling_factorial(clamp0(z[j]), aj);
        }
        out[static_cast<std::size_t>(k * v + i)] = value;
      }
    }
  }

 private:
  struct Reactants {
    std::vector<std::pair<int, int>> terms;  // (species, order), order > 0
    double inv_factorial = 1.0;
  };

  static double clamp0(double z) { return z < 0.0 ? 0.0 : z; }

  static double falling_factorial(double z, int a) {
    double p = 1.0;
    for (int k = 0; k < a; ++k) p *= (z - k);
    return p;
  }

  static double falling_factorial_derivative(double z, int a) {
    double sum = 0.0;
    for (int m = 0; m < a; ++m) {
      double p = 1.0;
      for (int k = 0; k < a; ++k)
        if (k != m) p *= (z - k);
      sum += p;
    }
    return sum;
  }

  void check_dims(const RateConstants& c, std::size_t x_size, std::size_t h_size) const {
    if (c.size() != reaction_count() || static_cast<int>(x_size) != species_count() ||
        static_cast<int>(h_size) != reaction_count())
      throw ContractViolation("hazard evaluation: dimension mismatch");
  }

  IntMatrix S_;
  IntMatrix A_;
  Matrix S_real_;
  std::vector<std::string> species_;
  std::vector<std::string> reactions_;
  std::vector<Reactants> reactants_;
};

inline Vector mass_action_hazard(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x) {
  Vector h(net.reaction_count());
  net.hazards(c, x, std::span<double>(h.data(), static_cast<std::size_t>(h.size())));
  return h;
}

inline Vector mass_action_hazard(const ReactionNetwork& net, const RateConstants& c, const Vector& z) {
  Vector h(net.reaction_count());
  net.hazards(c, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
              std::span<double>(h.data(), static_cast<std::size_t>(h.size())));
  return h;
}

inline double combined_hazard(const Vector& h) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (!(h[i] >= 0.0)) throw ContractViolation("combined_hazard: negative or NaN component");
    total += h[i];
  }
  return total;
}

/// x + S^i (i is zero-based).
inline State apply_reaction(const ReactionNetwork& net, std::span<const long> x, int i) {
  require(i >= 0 && i < net.reaction_count(), "apply_reaction: reaction index out of range");
  require(static_cast<int>(x.size()) == net.species_count(), "apply_reaction: state has wrong length");
  State next(x.begin(), x.end());
  for (int j = 0; j < net.species_count(); ++j) {
    next[static_cast<std::size_t>(j)] += net.stoichiometry()(j, i);
    if (next[static_cast<std::size_t>(j)] < 0)
      throw InvalidTransition("reaction " + net.reaction_names()[static_cast<std::size_t>(i)] +
                              " drives species " + net.species_names()[static_cast<std::size_t>(j)] + " negative");
  }
  return next;
}

/// alpha(z) = S h(z).
inline Vector drift(const ReactionNetwork& net, const RateConstants& c, const Vector& z) {
  return net.stoichiometry_real() * mass_action_hazard(net, c, z);
}

/// beta(z) = S diag(h(z)) S'.
inline Matrix diffusion(const ReactionNetwork& net, const RateConstants& c, const Vector& z) {
  const Matrix& S = net.stoichiometry_real();
  const Vector h = mass_action_hazard(net, c, z);
  return S * h.asDiagonal() * S.transpose();
}

/// F(z) = S dh/dz.
inline Matrix drift_jacobian(const ReactionNetwork& net, const RateConstants& c, const Vector& z) {
  require(z.size() == net.species_count(), "drift_jacobian: state has wrong length");
  Matrix dh(net.reaction_count(), net.species_count());
  net.hazard_gradient(c, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
                      std::span<double>(dh.data(), static_cast<std::size_t>(dh.size())));
  return net.stoichiometry_real() * dh;
}

}  // namespace mjpbridge

#endif
