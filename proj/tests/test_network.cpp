#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace mjpbridge;

TEST(Hazard, LotkaVolterraAtDefaults) {
  const auto m = lotka_volterra_model();
  const Vector h = mass_action_hazard(m.network, m.rates, State{50, 50});
  EXPECT_DOUBLE_EQ(h[0], 25.0);
  EXPECT_DOUBLE_EQ(h[1], 6.25);
  EXPECT_DOUBLE_EQ(h[2], 15.0);
  EXPECT_DOUBLE_EQ(combined_hazard(h), 46.25);
}

TEST(Hazard, DeathAtZeroIsAbsorbing) {
  const auto m = death_model();
  const Vector h = mass_action_hazard(m.network, m.rates, State{0});
  EXPECT_EQ(h[0], 0.0);
  EXPECT_EQ(combined_hazard(h), 0.0);
}

TEST(Hazard, SirAtDefaults) {
  const auto m = sir_model();
  const Vector h = mass_action_hazard(m.network, m.rates, State{254, 7});
  EXPECT_NEAR(h[0], 35.56, 1e-12);
  EXPECT_NEAR(h[1], 22.4, 1e-12);
  EXPECT_NEAR(combined_hazard(h), 57.96, 1e-12);
}

TEST(Hazard, DimensionMismatchIsContractViolation) {
  const auto m = lotka_volterra_model();
  EXPECT_THROW(mass_action_hazard(m.network, m.rates, State{1}), ContractViolation);
  EXPECT_THROW(mass_action_hazard(m.network, RateConstants{1.0}, State{1, 1}), ContractViolation);
}

TEST(Hazard, CombinedRejectsNegative) {
  Vector h(2);
  h << 1.0, -0.5;
  EXPECT_THROW(combined_hazard(h), ContractViolation);
}

TEST(Hazard, SecondOrderDimerMatchesBinomial) {
  // 2X -> Y with hazard c binom(x, 2).
  IntMatrix S(2, 1), A(1, 2);
  S << -2, 1;
  A << 2, 0;
  const ReactionNetwork net(S, A);
  const RateConstants c{0.1};
  for (long x = 0; x <= 30; ++x) {
    const Vector h = mass_action_hazard(net, c, State{x, 3});
    EXPECT_NEAR(h[0], 0.1 * testutil::choose(x, 2), 1e-12 * (1.0 + h[0]));
    // Continuous extension agrees on the lattice.
    Vector z(2);
    z << static_cast<double>(x), 3.0;
    EXPECT_NEAR(mass_action_hazard(net, c, z)[0], h[0], 1e-12 * (1.0 + h[0]));
  }
}

TEST(Hazard, NegativeContinuousStateIsClampedAndCounted) {
  const auto m = death_model();
  diagnostics().reset();
  Vector z(1);
  z << -3.0;
  EXPECT_EQ(mass_action_hazard(m.network, m.rates, z)[0], 0.0);
  EXPECT_GE(diagnostics().hazard_clamps.load(), 1u);
}

TEST(ApplyReaction, AddsStoichiometryColumn) {
  EXPECT_EQ(apply_reaction(lotka_volterra_network(), State{50, 50}, 0), (State{51, 50}));
  EXPECT_EQ(apply_reaction(death_network(), State{50}, 0), (State{49}));
  EXPECT_EQ(apply_reaction(sir_network(), State{254, 7}, 0), (State{253, 8}));
}

TEST(ApplyReaction, NegativeResultIsInvalidTransition) {
  EXPECT_THROW(apply_reaction(death_network(), State{0}, 0), InvalidTransition);
  EXPECT_THROW(apply_reaction(death_network(), State{3}, 1), ContractViolation);
}

TEST(Drift, Examples) {
  const auto lv = lotka_volterra_model();
  Vector z(2);
  z << 50, 50;
  const Vector a = drift(lv.network, lv.rates, z);
  EXPECT_NEAR(a[0], 18.75, 1e-12);
  EXPECT_NEAR(a[1], -8.75, 1e-12);

  const auto d = death_model();
  EXPECT_NEAR(drift(d.network, d.rates, Vector::Constant(1, 50.0))[0], -25.0, 1e-12);
  EXPECT_EQ(drift(d.network, d.rates, Vector::Zero(1))[0], 0.0);
}

TEST(Diffusion, Examples) {
  const auto d = death_model();
  EXPECT_NEAR(diffusion(d.network, d.rates, Vector::Constant(1, 50.0))(0, 0), 25.0, 1e-12);

  const auto lv = lotka_volterra_model();
  Vector z(2);
  z << 50, 50;
  Matrix expected(2, 2);
  expected << 31.25, -6.25, -6.25, 21.25;
  EXPECT_LT((diffusion(lv.network, lv.rates, z) - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(diffusion(lv.network, lv.rates, Vector::Zero(2)).isZero(0.0));
}

TEST(Jacobian, LotkaVolterraClosedForm) {
  const auto m = lotka_volterra_model();
  const double c1 = 0.5, c2 = 0.0025, c3 = 0.3;
  Vector z(2);
  z << 37.5, 81.25;
  Matrix expected(2, 2);
  expected << c1 - c2 * z[1], -c2 * z[0], c2 * z[1], c2 * z[0] - c3;
  EXPECT_LT((drift_jacobian(m.network, m.rates, z) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Jacobian, SirClosedForm) {
  const auto m = sir_model();
  const double c1 = 0.02, c2 = 3.2;
  Vector z(2);
  z << 200.5, 12.25;
  Matrix expected(2, 2);
  expected << -c1 * z[1], -c1 * z[0], c1 * z[1], c1 * z[0] - c2;
  EXPECT_LT((drift_jacobian(m.network, m.rates, z) - expected).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Jacobian, Death) {
  const auto m = death_model();
  EXPECT_DOUBLE_EQ(drift_jacobian(m.network, m.rates, Vector::Constant(1, 12.0))(0, 0), -0.5);
}

TEST(Network, RejectsInconsistentShapes) {
  IntMatrix S(2, 1), A(2, 2);
  S << 1, 0;
  A << 1, 0, 0, 1;
  EXPECT_THROW(ReactionNetwork(S, A), ContractViolation);
  EXPECT_THROW(RateConstants({1.0, -1.0}), ContractViolation);
}
