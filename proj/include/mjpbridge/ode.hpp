#ifndef MJPBRIDGE_ODE_HPP
#define MJPBRIDGE_ODE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mjpbridge/diagnostics.hpp"
#include "mjpbridge/error.hpp"

namespace mjpbridge {

struct OdeOptions {
  double rtol = 1e-6;
  double atol = 1e-8;
  /// Largest allowed step as a fraction of (t1 - t0); <= 0 leaves steps uncapped.
  double max_step_fraction = 0.01;
  std::size_t max_steps = 5'000'000;
};

/// Accepted-step grid of an adaptive integration with piecewise-linear
/// interpolation in between.
class DenseSolution {
 public:
  DenseSolution() = default;
  DenseSolution(std::size_t dimension, std::vector<double> times, std::vector<double> values)
      : dim_(dimension), times_(std::move(times)), values_(std::move(values)) {
    require(dim_ > 0 && !times_.empty() && values_.size() == dim_ * times_.size(),
            "DenseSolution: inconsistent storage");
  }

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  double t0() const { return times_.front(); }
  double t1() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  std::span<const double> value(std::size_t k) const { return {values_.data() + k * dim_, dim_}; }

  void eval_into(double t, std::span<double> out) const {
    require(out.size() == dim_, "eval_dense: output buffer has wrong size");
    const double slack = 1e-12 * std::max(1.0, std::abs(t1() - t0()));
    if (t < t0() - slack || t > t1() + slack)
      throw OutOfRange("eval_dense: time " + std::to_string(t) + " outside [" + std::to_string(t0()) + ", " +
                       std::to_string(t1()) + "]");
    t = std::clamp(t, t0(), t1());
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    if (hi == 0) hi = 1;
    if (hi >= times_.size()) hi = times_.size() - 1;
    const std::size_t lo = hi - 1;
    const double span = times_[hi] - times_[lo];
    const double w = span > 0.0 ? (t - times_[lo]) / span : 0.0;
    const double* a = values_.data() + lo * dim_;
    const double* b = values_.data() + hi * dim_;
    if (t == times_[lo]) {
      std::copy(a, a + dim_, out.begin());
      return;
    }
    if (t == times_[hi]) {
      std::copy(b, b + dim_, out.begin());
      return;
    }
    for (std::size_t i = 0; i < dim_; ++i) out[i] = a[i] + w * (b[i] - a[i]);
  }

  std::vector<double> eval(double t) const {
    std::vector<double> out(dim_);
    eval_into(t, out);
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> times_;
  std::vector<double> values_;
};

inline std::vector<double> eval_dense(const DenseSolution& sol, double t) { return sol.eval(t); }

namespace detail {

struct NoHook {
  void operator()(double, std::span<double>) const {}
};

/// Dormand-Prince 5(4) with Hairer's PI step-size control. `on_accept(t, y)`
/// runs after every accepted step and may modify y in place.
template <class Field, class OnAccept>
void dopri5(Field& f, std::span<double> y, double t0, double t1, const OdeOptions& opts, OnAccept& on_accept) {
  if (!(t1 > t0)) throw ContractViolation("integrate_adaptive: requires t1 > t0");
  bump(diagnostics().ode_integrations);
  const std::size_t n = y.size();
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<double> work(9 * n);
  std::span<double> k1(work.data(), n), k2(work.data() + n, n), k3(work.data() + 2 * n, n),
      k4(work.data() + 3 * n, n), k5(work.data() + 4 * n, n), k6(work.data() + 5 * n, n),
      k7(work.data() + 6 * n, n), ytmp(work.data() + 7 * n, n), ynew(work.data() + 8 * n, n);

  const double length = t1 - t0;
  const double hmax = opts.max_step_fraction > 0.0 ? opts.max_step_fraction * length : length;
  const double hmin = 1e-12 * length;

  auto scale = [&](double a, double b) {
    return opts.atol + opts.rtol * std::max(std::abs(a), std::abs(b));
  };

  double t = t0;
  f(t, std::span<const double>(y), k1);

  // Initial step guess (Hairer, Norsett & Wanner).
  double h;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = scale(y[i], y[i]);
      d0 += (y[i] / sk) * (y[i] / sk);
      d1 += (k1[i] / sk) * (k1[i] / sk);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n));
    d1 = std::sqrt(d1 / static_cast<double>(n));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * length : 0.01 * d0 / d1;
    h0 = std::min(h0, hmax);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h0 * k1[i];
    f(t + h0, std::span<const double>(ytmp), k2);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = scale(y[i], y[i]);
      const double r = (k2[i] - k1[i]) / sk;
      d2 += r * r;
    }
    d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6 * length, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    h = std::min({100.0 * h0, h1, hmax});
    if (!(h > 0.0) || !std::isfinite(h)) h = std::min(1e-3 * length, hmax);
  }

  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  double facold = 1e-4;
  bool last_rejected = false;
  std::size_t steps = 0;

  while (t < t1) {
    if (++steps > opts.max_steps) throw IntegrationFailure("integrate_adaptive: step budget exhausted", t);
    if (h < hmin) throw IntegrationFailure("integrate_adaptive: step size underflow", t);
    bool final_step = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      final_step = true;
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, std::span<const double>(ytmp), k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, std::span<const double>(ytmp), k3);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, std::span<const double>(ytmp), k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, std::span<const double>(ytmp), k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, std::span<const double>(ytmp), k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    f(t + h, std::span<const double>(ynew), k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double r = ei / scale(y[i], ynew[i]);
      err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(n));
    if (!std::isfinite(err)) {
      h *= 0.1;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      t = final_step ? t1 : t + h;
      std::copy(ynew.begin(), ynew.end(), y.begin());
      std::copy(k7.begin(), k7.end(), k1.begin());
      on_accept(t, y);
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      if (last_rejected) hnew = std::min(hnew, h);
      h = std::min(hnew, hmax);
      last_rejected = false;
      if (final_step) break;
    } else {
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
}

}  // namespace detail

/// Integrates dy/dt = f(t, y) over [t0, t1] storing every accepted step.
/// f has signature void(double t, std::span<const double> y, std::span<double> dydt).
template <class Field, class OnAccept = detail::NoHook>
DenseSolution integrate_adaptive(Field&& f, std::span<const double> y0, double t0, double t1,
                                 const OdeOptions& opts = {}, OnAccept on_accept = {}) {
  const std::size_t n = y0.size();
  require(n > 0, "integrate_adaptive: empty state");
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> times{t0};
  std::vector<double> values(y.begin(), y.end());
  auto record = [&](double t, std::span<double> state) {
    on_accept(t, state);
    times.push_back(t);
    values.insert(values.end(), state.begin(), state.end());
  };
  on_accept(t0, std::span<double>(values.data(), n));
  std::copy(values.begin(), values.end(), y.begin());
  detail::dopri5(f, std::span<double>(y), t0, t1, opts, record);
  return DenseSolution(n, std::move(times), std::move(values));
}

/// Same integrator, keeping only the end point (y is overwritten in place).
template <class Field>
void integrate_to_end(Field&& f, std::span<double> y, double t0, double t1, const OdeOptions& opts) {
  detail::NoHook hook;
  detail::dopri5(f, y, t0, t1, opts, hook);
}

}  // namespace mjpbridge

#endif
