#ifndef MJPBRIDGE_LNA_HPP
#define MJPBRIDGE_LNA_HPP

#include <Eigen/Dense>

#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "mjpbridge/network.hpp"
#include "mjpbridge/ode.hpp"

namespace mjpbridge {

struct GaussianApprox {
  Vector mean;
  Matrix cov;
};

struct LnaOptions {
  OdeOptions ode{};
  /// Restarted integrations only need the end point, so steps are uncapped.
  OdeOptions restart_ode{1e-6, 1e-8, 0.0, 5'000'000};
  double max_condition = 1e12;
  /// Negative eigenvalues of psi above -psd_tolerance * trace are clipped to zero.
  double psd_tolerance = 1e-8;
};

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

namespace detail {

/// Shared right-hand-side pieces: hazards, Jacobian F = S dh/dz and
/// beta = S diag(h) S' evaluated into preallocated buffers.
class LnaKernel {
 public:
  LnaKernel(const ReactionNetwork& net, const RateConstants& c)
      : net_(net), c_(c), u_(net.species_count()), v_(net.reaction_count()),
        h_(static_cast<std::size_t>(v_)), dh_(static_cast<std::size_t>(u_ * v_)),
        F_(static_cast<std::size_t>(u_ * u_)), beta_(static_cast<std::size_t>(u_ * u_)) {}

  int species() const { return u_; }

  /// Writes dz into dz_out and fills F (col-major) and beta.
  void evaluate(std::span<const double> z, std::span<double> dz_out) {
    net_.hazards(c_, z, h_);
    net_.hazard_gradient(c_, z, dh_);
    const IntMatrix& S = net_.stoichiometry();
    for (int a = 0; a < u_; ++a) {
      double acc = 0.0;
      for (int i = 0; i < v_; ++i) acc += S(a, i) * h_[static_cast<std::size_t>(i)];
      dz_out[static_cast<std::size_t>(a)] = acc;
    }
    for (int b = 0; b < u_; ++b) {
      for (int a = 0; a < u_; ++a) {
        double f = 0.0, be = 0.0;
        for (int i = 0; i < v_; ++i) {
          f += S(a, i) * dh_[static_cast<std::size_t>(b * v_ + i)];
          be += S(a, i) * h_[static_cast<std::size_t>(i)] * S(b, i);
        }
        F_[static_cast<std::size_t>(b * u_ + a)] = f;
        beta_[static_cast<std::size_t>(b * u_ + a)] = be;
      }
    }
  }

  double F(int a, int b) const { return F_[static_cast<std::size_t>(b * u_ + a)]; }
  double beta(int a, int b) const { return beta_[static_cast<std::size_t>(b * u_ + a)]; }
  Eigen::Map<const Matrix> F_matrix() const { return Eigen::Map<const Matrix>(F_.data(), u_, u_); }
  Eigen::Map<const Matrix> beta_matrix() const { return Eigen::Map<const Matrix>(beta_.data(), u_, u_); }

 private:
  const ReactionNetwork& net_;
  const RateConstants& c_;
  int u_, v_;
  std::vector<double> h_, dh_, F_, beta_;
};

}  // namespace detail

/// Dense-grid solution of the mean, fundamental-matrix and psi ODEs started
/// from a fixed state at time 0. Immutable once built.
class LnaTable {
 public:
  struct Snapshot {
    Vector z;
    Matrix G;
    Matrix psi;
  };

  /// Quantities shared by every state queried at the same event time.
  struct Propagator {
    Vector z_t;
    Vector z_T;
    Matrix G;    // G_{T|t}
    Matrix cov;  // G_{T|t} psi_{T|t} G_{T|t}'
  };

  static LnaTable solve(const ReactionNetwork& net, const RateConstants& c, const Vector& x0, double horizon,
                        const LnaOptions& opts = {}) {
    require(horizon > 0.0, "solve_lna_table: horizon must be positive");
    const int u = net.species_count();
    require(x0.size() == u, "solve_lna_table: initial state has wrong length");
    const std::size_t uu = static_cast<std::size_t>(u * u);
    const std::size_t dim = static_cast<std::size_t>(u) + 2 * uu;

    detail::LnaKernel kernel(net, c);
    Matrix Ginv(u, u), dpsi(u, u);
    auto field = [&](double, std::span<const double> y, std::span<double> dy) {
      kernel.evaluate(y.first(static_cast<std::size_t>(u)), dy.first(static_cast<std::size_t>(u)));
      Eigen::Map<const Matrix> G(y.data() + u, u, u);
      Eigen::Map<Matrix> dG(dy.data() + u, u, u);
      dG.noalias() = kernel.F_matrix() * G;
      Ginv = G.partialPivLu().inverse();
      dpsi.noalias() = Ginv * kernel.beta_matrix() * Ginv.transpose();
      Eigen::Map<Matrix>(dy.data() + u + uu, u, u) = dpsi;
    };
    auto on_accept = [&](double t, std::span<double> y) {
      Eigen::Map<Matrix> psi(y.data() + u + uu, u, u);
      psi = symmetrized(psi).eval();
      repair_psd(psi, opts.psd_tolerance);
      Eigen::Map<const Matrix> G(y.data() + u, u, u);
      Eigen::JacobiSVD<Matrix> svd(G);
      const auto& sv = svd.singularValues();
      const double smin = sv[sv.size() - 1];
      if (!(smin > 0.0) || sv[0] / smin > opts.max_condition)
        throw IllConditioned("LNA fundamental matrix ill-conditioned at t=" + std::to_string(t));
    };

    std::vector<double> y0(dim, 0.0);
    for (int j = 0; j < u; ++j) {
      y0[static_cast<std::size_t>(j)] = x0[j];
      y0[static_cast<std::size_t>(u + j * u + j)] = 1.0;
    }
    LnaTable table;
    table.u_ = u;
    table.x0_ = x0;
    table.solution_ = integrate_adaptive(field, y0, 0.0, horizon, opts.ode, on_accept);
    return table;
  }

  int dimension() const { return u_; }
  double horizon() const { return solution_.t1(); }
  const Vector& initial_state() const { return x0_; }
  const DenseSolution& solution() const { return solution_; }

  Snapshot at(double t) const {
    std::vector<double> buf(solution_.dimension());
    solution_.eval_into(t, buf);
    const std::size_t uu = static_cast<std::size_t>(u_ * u_);
    Snapshot s;
    s.z = Eigen::Map<const Vector>(buf.data(), u_);
    s.G = Eigen::Map<const Matrix>(buf.data() + u_, u_, u_);
    s.psi = Eigen::Map<const Matrix>(buf.data() + u_ + uu, u_, u_);
    return s;
  }

  /// G_{T|t} = G_T G_t^{-1}.
  Matrix subinterval_fundamental(double t, double T) const { return fundamental_from(at(t), at(T)); }

  /// psi_{T|t} = G_t (psi_T - psi_t) G_t'.
  Matrix subinterval_psi(double t, double T) const {
    const Snapshot st = at(t);
    const Snapshot sT = at(T);
    return symmetrized(st.G * (sT.psi - st.psi) * st.G.transpose());
  }

  Propagator propagator(double t, double T) const {
    require(t <= T, "LNA propagator: requires t <= T");
    const Snapshot st = at(t);
    const Snapshot sT = at(T);
    Propagator p;
    p.z_t = st.z;
    p.z_T = sT.z;
    p.G = fundamental_from(st, sT);
    const Matrix psi_sub = symmetrized(st.G * (sT.psi - st.psi) * st.G.transpose());
    p.cov = symmetrized(p.G * psi_sub * p.G.transpose());
    return p;
  }

  /// Time, z..., vec(G)..., vec(psi)... per grid point.
  void write_csv(std::ostream& os) const {
    os << "time";
    for (int j = 0; j < u_; ++j) os << ",z" << j + 1;
    for (int b = 0; b < u_; ++b)
      for (int a = 0; a < u_; ++a) os << ",G" << a + 1 << b + 1;
    for (int b = 0; b < u_; ++b)
      for (int a = 0; a < u_; ++a) os << ",psi" << a + 1 << b + 1;
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < solution_.size(); ++k) {
      os << solution_.times()[k];
      for (double val : solution_.value(k)) os << ',' << val;
      os << '\n';
    }
  }

 private:
  static Matrix fundamental_from(const Snapshot& st, const Snapshot& sT) {
    Eigen::PartialPivLU<Matrix> lu(st.G.transpose());
    if (!(lu.rcond() > 1e-12)) throw IllConditioned("LNA fundamental matrix singular at query time");
    return lu.solve(sT.G.transpose()).transpose();
  }

  static void repair_psd(Eigen::Map<Matrix>& psi, double tolerance) {
    const double trace = psi.trace();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(psi);
    const Vector& ev = eig.eigenvalues();
    if (ev.minCoeff() >= 0.0) return;
    const double floor = -tolerance * std::max(trace, 0.0) - 1e-14;
    if (ev.minCoeff() < floor)
      throw DegenerateCovariance("LNA psi lost positive semi-definiteness beyond repair tolerance");
    bump(diagnostics().psd_repairs);
    psi = eig.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
  }

  int u_ = 0;
  Vector x0_;
  DenseSolution solution_;
};

inline LnaTable solve_lna_table(const ReactionNetwork& net, const RateConstants& c, std::span<const long> x0,
                                double horizon, const LnaOptions& opts = {}) {
  return LnaTable::solve(net, c, to_vector(x0), horizon, opts);
}

inline Matrix subinterval_fundamental(const LnaTable& table, double t, double T) {
  return table.subinterval_fundamental(t, T);
}

inline Matrix subinterval_psi(const LnaTable& table, double t, double T) { return table.subinterval_psi(t, T); }

/// Gaussian approximation of X_T | X_t = x_t from a table built at time 0.
inline GaussianApprox lna_transition_gaussian(const LnaTable& table, const Vector& x_t, double t, double T) {
  require(t < T, "lna_transition_gaussian: requires t < T");
  const auto p = table.propagator(t, T);
  return {p.z_T + p.G * (x_t - p.z_t), p.cov};
}

/// Restarted LNA: integrate (z, V) over (t, T] from z = x_t, V = 0.
inline GaussianApprox solve_lna_restart(const ReactionNetwork& net, const RateConstants& c, const Vector& x_t,
                                        double t, double T, const OdeOptions& opts = LnaOptions{}.restart_ode) {
  require(t < T, "solve_lna_restart: requires t < T");
  const int u = net.species_count();
  require(x_t.size() == u, "solve_lna_restart: state has wrong length");
  detail::LnaKernel kernel(net, c);
  const std::size_t uz = static_cast<std::size_t>(u);
  auto field = [&](double, std::span<const double> y, std::span<double> dy) {
    kernel.evaluate(y.first(uz), dy.first(uz));
    const double* V = y.data() + u;
    double* dV = dy.data() + u;
    for (int b = 0; b < u; ++b) {
      for (int a = 0; a < u; ++a) {
        double acc = kernel.beta(a, b);
        for (int k = 0; k < u; ++k) acc += V[k * u + a] * kernel.F(b, k) + kernel.F(a, k) * V[b * u + k];
        dV[b * u + a] = acc;
      }
    }
  };
  std::vector<double> y(uz + uz * uz, 0.0);
  for (int j = 0; j < u; ++j) y[static_cast<std::size_t>(j)] = x_t[j];
  integrate_to_end(field, std::span<double>(y), t, T, opts);
  GaussianApprox out;
  out.mean = Eigen::Map<const Vector>(y.data(), u);
  out.cov = symmetrized(Eigen::Map<const Matrix>(y.data() + u, u, u));
  return out;
}

}  // namespace mjpbridge

#endif
