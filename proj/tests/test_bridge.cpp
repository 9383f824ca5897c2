#include <gtest/gtest.h>

#include <numbers>

#include "test_util.hpp"

using namespace mjpbridge;

namespace {

double scalar_logpdf(double y, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (y - mean) * (y - mean) / var;
}

/// X1 -> X1 + X2 and X1 -> 0: reaction 1 only moves the unobserved X2 and
/// no hazard depends on X2.
ReactionNetwork catalytic_network() {
  IntMatrix S(2, 2), A(2, 2);
  S << 0, -1, 1, 0;
  A << 1, 0, 1, 0;
  return ReactionNetwork(S, A, {"X1", "X2"}, {"make", "decay"});
}

BridgeTarget catalytic_target() {
  Matrix P(2, 1);
  P << 1, 0;
  return {Vector::Constant(1, 12.0), 2.0, ObservationModel(P, Matrix::Identity(1, 1))};
}

LnaOptions fine_lna() {
  LnaOptions o;
  o.ode.rtol = 1e-12;
  o.ode.atol = 1e-12;
  o.ode.max_step_fraction = 1e-5;
  return o;
}

}  // namespace

TEST(GaussianLogpdf, ScalarExamples) {
  EXPECT_NEAR(gaussian_logpdf(Vector::Zero(1), Vector::Zero(1), Matrix::Identity(1, 1)),
              -0.5 * std::log(2.0 * std::numbers::pi), 1e-14);
  EXPECT_NEAR(gaussian_logpdf(Vector::Zero(1), Vector::Zero(1), Matrix::Constant(1, 1, 4.0)),
              -0.5 * std::log(8.0 * std::numbers::pi), 1e-14);
}

TEST(GaussianLogpdf, DegenerateCovariance) {
  EXPECT_EQ(gaussian_logpdf(Vector::Constant(1, 3.0), Vector::Constant(1, 3.0), Matrix::Zero(1, 1)), kInf);
  EXPECT_EQ(gaussian_logpdf(Vector::Constant(1, 3.5), Vector::Constant(1, 3.0), Matrix::Zero(1, 1)), -kInf);
  // Rank one in two dimensions: support is the line y1 = y2.
  Matrix cov(2, 2);
  cov << 1, 1, 1, 1;
  Vector y(2);
  y << 2, 2;
  EXPECT_EQ(gaussian_logpdf(y, Vector::Zero(2), cov), kInf);
  y << 2, 1;
  EXPECT_EQ(gaussian_logpdf(y, Vector::Zero(2), cov), -kInf);
}

TEST(GaussianLogpdf, MatchesBivariateFormula) {
  Matrix cov(2, 2);
  cov << 4.0, 1.2, 1.2, 2.0;
  Vector y(2), mu(2);
  y << 1.0, -0.5;
  mu << 0.3, 0.2;
  const Vector r = y - mu;
  const double det = cov.determinant();
  const double quad = r.dot(cov.inverse() * r);
  EXPECT_NEAR(gaussian_logpdf(y, mu, cov), -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad,
              1e-12);
}

TEST(GaussianLogpdf, RejectsAsymmetricCovariance) {
  Matrix cov(2, 2);
  cov << 1, 0.5, 0, 1;
  EXPECT_THROW(gaussian_logpdf(Vector::Zero(2), Vector::Zero(2), cov), ContractViolation);
}

TEST(Gw, DeathExactObservation) {
  const auto m = death_model();
  const GwHazard gw(m.network, m.rates, {Vector::Constant(1, 30.0), 1.0, ObservationModel::full(1)});
  Vector h;
  gw.hazard(State{50}, 0.0, h);
  EXPECT_NEAR(h[0], 20.0, 1e-12);
  gw.hazard(State{40}, 0.75, h);
  EXPECT_NEAR(h[0], (40.0 - 30.0) / 0.25, 1e-10);
}

TEST(Gw, ZeroInnovationLeavesHazardUnchanged) {
  const auto m = lotka_volterra_model();
  const State x{50, 50};
  const Vector h = mass_action_hazard(m.network, m.rates, x);
  const double dt = 0.8;
  const Vector y = to_vector(x) + m.network.stoichiometry_real() * h * dt;
  const GwHazard gw(m.network, m.rates, {y, 1.0, ObservationModel::full(2, 5.0)});
  Vector got;
  gw.hazard(x, 0.2, got);
  EXPECT_LT((got - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gw, LotkaVolterraMatchesDenseOracle) {
  const auto m = lotka_volterra_model();
  Vector y(2);
  y << 73.25, 58.43;
  const GwHazard gw(m.network, m.rates, {y, 1.0, ObservationModel::full(2, 5.0)});
  Vector got;
  gw.hazard(State{50, 50}, 0.0, got);

  // h + H S' (S H S' dt + Sigma)^{-1} (y - x - S h dt), P = I.
  Matrix S(2, 3);
  S << 1, -1, 0, 0, 1, -1;
  Vector h(3);
  h << 25.0, 6.25, 15.0;
  const Matrix H = h.asDiagonal();
  const Matrix inner = S * H * S.transpose() * 1.0 + 25.0 * Matrix::Identity(2, 2);
  Vector x(2);
  x << 50, 50;
  Vector expected = h + H * S.transpose() * inner.inverse() * (y - x - S * h);
  expected = expected.cwiseMax(0.0);
  EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Gw, SingularInnerMatrixFallsBackToBlind) {
  const auto m = lotka_volterra_model();
  const GwHazard gw(m.network, m.rates, {to_vector(State{0, 3}), 1.0, ObservationModel::full(2)});
  diagnostics().reset();
  Vector got;
  gw.hazard(State{0, 5}, 0.0, got);
  EXPECT_LT((got - mass_action_hazard(m.network, m.rates, State{0, 5})).norm(), 1e-15);
  EXPECT_EQ(diagnostics().gw_blind_fallbacks.load(), 1u);
}

TEST(Gw, TruncatesNegativeComponents) {
  const auto m = death_model();
  const GwHazard gw(m.network, m.rates, {Vector::Constant(1, 60.0), 1.0, ObservationModel::full(1)});
  Vector got;
  gw.hazard(State{50}, 0.0, got);
  EXPECT_EQ(got[0], 0.0);
}

TEST(Fcle, DeathScalarOracle) {
  const auto m = death_model();
  const FcleHazard f(m.network, m.rates, {Vector::Constant(1, 30.0), 1.0, ObservationModel::full(1)});
  Vector got;
  f.hazard(State{50}, 0.0, got);
  const double ratio = std::exp(scalar_logpdf(30.0, 49.0 - 24.5, 24.5) - scalar_logpdf(30.0, 50.0 - 25.0, 25.0));
  EXPECT_NEAR(got[0], 25.0 * ratio, 1e-12 * 25.0 * ratio);
}

TEST(Fcle, LogRatioCapEngages) {
  const auto m = death_model();
  const FcleHazard f(m.network, m.rates, {Vector::Constant(1, 49.0), 1.0, ObservationModel::full(1)});
  diagnostics().reset();
  Vector got;
  f.hazard(State{50}, 0.0, got);
  EXPECT_EQ(diagnostics().log_ratio_caps.load(), 0u);
  f.hazard(State{50}, 1.0 - 1e-6, got);
  EXPECT_EQ(diagnostics().log_ratio_caps.load(), 1u);
  EXPECT_DOUBLE_EQ(got[0], 25.0 * std::exp(kLogRatioCap));
}

TEST(Fcle, SingularCurrentCovarianceIsDegenerate) {
  const auto m = lotka_volterra_model();
  const FcleHazard f(m.network, m.rates, {to_vector(State{0, 3}), 1.0, ObservationModel::full(2)});
  Vector got;
  EXPECT_THROW(f.hazard(State{0, 5}, 0.0, got), DegenerateCovariance);
}

TEST(RatioHazards, UnchangedWhenJumpInvisible) {
  const auto net = catalytic_network();
  const RateConstants c{1.5, 0.2};
  const auto target = catalytic_target();
  const State x{20, 4};
  const Vector h = mass_action_hazard(net, c, x);
  Vector got;
  FcleHazard(net, c, target).hazard(x, 0.5, got);
  EXPECT_NEAR(got[0], h[0], 1e-12 * h[0]);
  EXPECT_NE(got[1], h[1]);
  FlnarHazard(net, c, target).hazard(x, 0.5, got);
  EXPECT_NEAR(got[0], h[0], 1e-9 * h[0]);
  FlnaHazard(net, c, target, x).hazard(x, 0.5, got);
  EXPECT_NEAR(got[0], h[0], 1e-9 * h[0]);
}

TEST(Flnar, DeathClosedForm) {
  const auto m = death_model();
  const double c = 0.5, T = 2.0, y = 18.0;
  const FlnarHazard f(m.network, m.rates, {Vector::Constant(1, y), T, ObservationModel::full(1)},
                      OdeOptions{1e-12, 1e-12, 0.0, 5'000'000});
  for (auto [x, t] : {std::pair{50L, 0.0}, std::pair{35L, 0.6}, std::pair{22L, 1.5}}) {
    Vector got;
    f.hazard(State{x}, t, got);
    const double e = std::exp(-c * (T - t));
    auto lp = [&](double s) { return scalar_logpdf(y, s * e, s * e * (1.0 - e)); };
    const double expected = c * x * std::exp(lp(x - 1.0) - lp(static_cast<double>(x)));
    EXPECT_NEAR(got[0], expected, 1e-8 * expected) << x << "," << t;
  }
}

TEST(Flnar, OneIntegrationPerCandidateState) {
  const auto m = lotka_volterra_model();
  Vector y(2);
  y << 73.25, 58.43;
  const FlnarHazard f(m.network, m.rates, {y, 1.0, ObservationModel::full(2, 5.0)});
  const auto before = diagnostics().ode_integrations.load();
  Vector got;
  f.hazard(State{50, 50}, 0.3, got);
  EXPECT_EQ(diagnostics().ode_integrations.load() - before, 4u);
}

TEST(Flna, DeathClosedForm) {
  const auto m = death_model();
  const double c = 0.5, T = 2.0, y = 18.0, x0 = 50.0;
  const FlnaHazard f(m.network, m.rates, {Vector::Constant(1, y), T, ObservationModel::full(1)}, State{50}, fine_lna());
  for (auto [x, t] : {std::pair{50L, 0.0}, std::pair{35L, 0.6}, std::pair{22L, 1.5}}) {
    Vector got;
    f.hazard(State{x}, t, got);
    const double e = std::exp(-c * (T - t));
    const double var = x0 * std::exp(-c * T) * (1.0 - e);
    const double expected =
        c * x * std::exp(scalar_logpdf(y, (x - 1.0) * e, var) - scalar_logpdf(y, x * e, var));
    EXPECT_NEAR(got[0], expected, 1e-8 * expected) << x << "," << t;
  }
}

TEST(Flna, NoIntegrationsAfterTableBuild) {
  const auto m = lotka_volterra_model();
  Vector y(2);
  y << 73.25, 58.43;
  const FlnaHazard f(m.network, m.rates, {y, 1.0, ObservationModel::full(2, 5.0)}, State{50, 50});
  const auto before = diagnostics().ode_integrations.load();
  Vector got;
  for (int k = 0; k < 10; ++k) f.hazard(State{50 + k, 50 - k}, 0.09 * k, got);
  EXPECT_EQ(diagnostics().ode_integrations.load(), before);
}

TEST(Flna, TableHorizonMustMatch) {
  const auto m = death_model();
  auto table = std::make_shared<const LnaTable>(solve_lna_table(m.network, m.rates, State{50}, 2.0));
  EXPECT_THROW(FlnaHazard(m.network, m.rates, {Vector::Constant(1, 30.0), 1.0, ObservationModel::full(1)}, table),
               ContractViolation);
}

TEST(LnaProviders, DeathMeansAgreeAtTimeZero) {
  const auto m = death_model();
  const auto table = LnaTable::solve(m.network, m.rates, to_vector(State{50}), 1.0, fine_lna());
  for (double x : {50.0, 49.0}) {
    const auto a = lna_transition_gaussian(table, Vector::Constant(1, x), 0.0, 1.0);
    const auto b = solve_lna_restart(m.network, m.rates, Vector::Constant(1, x), 0.0, 1.0, OdeOptions{1e-12, 1e-12, 0.0});
    EXPECT_NEAR(a.mean[0], b.mean[0], 1e-6 * b.mean[0]);
    if (x == 50.0) {
      EXPECT_NEAR(a.cov(0, 0), b.cov(0, 0), 1e-6 * b.cov(0, 0));
    }
  }
}

TEST(LogWeight, BlindReducesToObservationDensity) {
  const auto m = lotka_volterra_model();
  Vector y(2);
  y << 60.0, 45.0;
  const BridgeTarget target{y, 1.0, ObservationModel::full(2, 5.0)};
  const BlindHazard blind(m.network, m.rates);
  Rng rng(3);
  for (int r = 0; r < 20; ++r) {
    const Path p = simulate_with_hazard(blind, m.network, m.rates, State{50, 50}, 1.0, rng);
    const double expected = target.obs.log_density(y, p.final_state());
    EXPECT_NEAR(log_weight(p, m.network, m.rates, blind, target), expected, 1e-12 * std::abs(expected));
  }
}

TEST(LogWeight, ZeroEventPath) {
  const auto m = death_model();
  const BridgeTarget target{Vector::Constant(1, 5.0), 1.5, ObservationModel::full(1)};
  const GwHazard gw(m.network, m.rates, target);
  const Path p(State{5}, 1.5);
  // h = 2.5, h~ = 2.5 + 2.5 (-1)(5 - (5 - 3.75)) / 3.75 = 0 => weight exp(-2.5 * 1.5).
  EXPECT_NEAR(log_weight(p, m.network, m.rates, gw, target), -(2.5 - 0.0) * 1.5, 1e-12);
}

TEST(LogWeight, MatchesOnTheFlyAccumulation) {
  const auto m = lotka_volterra_model();
  Vector y(2);
  y << 73.25, 58.43;
  const BridgeTarget target{y, 1.0, ObservationModel::full(2, 5.0)};
  const auto provider = make_hazard(BridgeMethod::Flna, m.network, m.rates, State{50, 50}, target);
  Rng rng(17);
  for (int r = 0; r < 10; ++r) {
    const auto draw = simulate_proposal(provider, m.network, m.rates, State{50, 50}, 1.0, rng);
    const double terminal = target.obs.log_density(y, draw.path.final_state());
    const double lw = log_weight(draw.path, m.network, m.rates, provider, target);
    EXPECT_NEAR(lw, terminal + draw.log_likelihood_ratio, 1e-9 * (1.0 + std::abs(lw)));
  }
}

TEST(LogWeight, DeathFlnaUnbiasedAgainstPmf) {
  const auto m = death_model();
  const BridgeTarget target{Vector::Constant(1, 30.0), 1.0, ObservationModel::full(1)};
  const auto provider = make_hazard(BridgeMethod::Flna, m.network, m.rates, State{50}, target);
  Rng rng = Rng::stream(5, "lw-death");
  std::vector<double> w;
  w.reserve(100000);
  for (int r = 0; r < 100000; ++r) {
    const Path p = simulate_with_hazard(provider, m.network, m.rates, State{50}, 1.0, rng);
    w.push_back(std::exp(log_weight(p, m.network, m.rates, provider, target)));
  }
  const double truth = death_transition_pmf(50, 30, 0.5, 1.0);
  EXPECT_LT(std::abs(testutil::mean(w) - truth), 3.0 * testutil::std_error(w));
}

TEST(WeightedResample, IndicatorEstimatorWithOneBlindDraw) {
  const auto m = death_model();
  const BridgeTarget target{Vector::Constant(1, 30.0), 1.0, ObservationModel::full(1)};
  const BlindHazard blind(m.network, m.rates);
  Rng rng = Rng::stream(2, "indicator");
  std::vector<double> est;
  for (int r = 0; r < 20000; ++r) {
    const auto ws = weighted_resample(blind, m.network, m.rates, State{50}, target, 1, rng);
    ASSERT_TRUE(ws.estimate == 0.0 || ws.estimate == 1.0);
    est.push_back(ws.estimate);
  }
  const double truth = death_transition_pmf(50, 30, 0.5, 1.0);
  EXPECT_LT(std::abs(testutil::mean(est) - truth), 3.0 * testutil::std_error(est));
}

TEST(WeightedResample, UnbiasedForEveryProvider) {
  const auto m = death_model();
  const long xT = death_quantile(50, 0.5, 1.0, 50);
  const BridgeTarget target{Vector::Constant(1, static_cast<double>(xT)), 1.0, ObservationModel::full(1)};
  const double truth = death_transition_pmf(50, xT, 0.5, 1.0);
  for (auto method : {BridgeMethod::Blind, BridgeMethod::Gw, BridgeMethod::Fcle, BridgeMethod::Flnar,
                      BridgeMethod::Flna}) {
    const auto provider = make_hazard(method, m.network, m.rates, State{50}, target);
    Rng rng = Rng::stream(9, to_string(method));
    ResampleOptions opts;
    opts.keep_paths = false;
    std::vector<double> est;
    for (int r = 0; r < 1000; ++r)
      est.push_back(weighted_resample(provider, m.network, m.rates, State{50}, target, 10, rng, opts).estimate);
    EXPECT_LT(std::abs(testutil::mean(est) - truth), 3.0 * testutil::std_error(est)) << to_string(method);
  }
}

TEST(WeightedResample, CollapseGivesZeroEstimate) {
  const auto m = death_model();
  const BridgeTarget target{Vector::Constant(1, 60.0), 1.0, ObservationModel::full(1)};
  const BlindHazard blind(m.network, m.rates);
  Rng rng(1);
  diagnostics().reset();
  const auto ws = weighted_resample(blind, m.network, m.rates, State{50}, target, 25, rng, {true});
  EXPECT_EQ(ws.estimate, 0.0);
  EXPECT_EQ(ws.ess, 0.0);
  EXPECT_TRUE(ws.ancestors.empty());
  EXPECT_EQ(diagnostics().weight_collapses.load(), 1u);
}

TEST(WeightedResample, SummaryIsConsistent) {
  const auto m = lotka_volterra_model();
  Vector y(2);
  y << 73.25, 58.43;
  const BridgeTarget target{y, 1.0, ObservationModel::full(2, 5.0)};
  const auto provider = make_hazard(BridgeMethod::Gw, m.network, m.rates, State{50, 50}, target);
  Rng rng(4);
  const auto ws = weighted_resample(provider, m.network, m.rates, State{50, 50}, target, 200, rng, {true});
  ASSERT_EQ(ws.paths.size(), 200u);
  ASSERT_EQ(ws.ancestors.size(), 200u);
  double s1 = 0.0, s2 = 0.0;
  for (double lw : ws.log_weights) {
    s1 += std::exp(lw);
    s2 += std::exp(2.0 * lw);
  }
  EXPECT_NEAR(ws.estimate, s1 / 200.0, 1e-12 * ws.estimate);
  EXPECT_NEAR(ws.ess, s1 * s1 / s2, 1e-9 * ws.ess);
  EXPECT_GT(ws.ess, 0.0);
  EXPECT_LE(ws.ess, 200.0 + 1e-9);
  for (std::size_t j = 0; j < 200; ++j) EXPECT_EQ(ws.event_counts[j], ws.paths[j].event_count());
}

TEST(WeightedResample, IndependentOfThreadCount) {
  const auto m = lotka_volterra_model();
  Vector y(2);
  y << 73.25, 58.43;
  const BridgeTarget target{y, 1.0, ObservationModel::full(2, 5.0)};
  const auto provider = make_hazard(BridgeMethod::Flna, m.network, m.rates, State{50, 50}, target);
  Rng a(8), b(8);
  ResampleOptions one, four;
  four.threads = 4;
  const auto wa = weighted_resample(provider, m.network, m.rates, State{50, 50}, target, 64, a, one);
  const auto wb = weighted_resample(provider, m.network, m.rates, State{50, 50}, target, 64, b, four);
  EXPECT_EQ(wa.log_weights, wb.log_weights);
  EXPECT_EQ(wa.estimate, wb.estimate);
}

TEST(WeightedResample, SystematicResamplingFollowsWeights) {
  std::vector<double> lw{std::log(0.1), std::log(0.6), -kInf, std::log(0.3)};
  Rng rng(1);
  const auto idx = resample_indices(lw, 1000, rng, true);
  std::vector<int> counts(4, 0);
  for (auto i : idx) ++counts[i];
  EXPECT_NEAR(counts[0], 100, 1);
  EXPECT_NEAR(counts[1], 600, 1);
  EXPECT_EQ(counts[2], 0);
  EXPECT_NEAR(counts[3], 300, 1);
}

TEST(Methods, ParseNames) {
  EXPECT_EQ(parse_bridge_method("flna"), BridgeMethod::Flna);
  EXPECT_EQ(parse_bridge_method("ch"), BridgeMethod::Gw);
  EXPECT_EQ(parse_bridge_method("gw"), BridgeMethod::Gw);
  EXPECT_FALSE(parse_bridge_method("magic").has_value());
}

TEST(ObservationModelTest, ValidatesInputs) {
  Matrix P(2, 2);
  P << 1, 1, 1, 1;
  EXPECT_THROW(ObservationModel(P, Matrix::Identity(2, 2)), ContractViolation);
  EXPECT_THROW(ObservationModel(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)), ContractViolation);
  const auto exact = ObservationModel::full(2);
  EXPECT_TRUE(exact.exact());
  EXPECT_EQ(exact.log_density(to_vector(State{3, 4}), State{3, 4}), 0.0);
  EXPECT_EQ(exact.log_density(to_vector(State{3, 4}), State{3, 5}), -kInf);
}
