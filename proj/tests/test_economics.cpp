#include <gtest/gtest.h>

#include <cmath>

#include "rmprice/economics.hpp"

using namespace rmprice;

namespace {

Money usd(double d) { return Money::from_dollars(d); }

GameResult synthetic(Money initial, const std::vector<double>& profits) {
  GameResult g;
  ProviderProfile p;
  p.initial_investment = initial;
  g.providers.push_back(p);
  int t = 0;
  for (double x : profits) {
    RoundRecord r;
    r.round = ++t;
    AgentOutcome a;
    a.profit = usd(x);
    r.agents.push_back(a);
    g.rounds.push_back(r);
  }
  return g;
}

}  // namespace

TEST(UpdateInvestment, Examples) {
  EXPECT_EQ(update_investment(usd(12000), usd(150)), usd(12150));
  EXPECT_EQ(update_investment(usd(12000), Money{}), usd(12000));
  EXPECT_EQ(update_investment(usd(12000), usd(-20)), usd(11980));
}

TEST(RoiThreshold, PointMassExamples) {
  const std::vector<double> omega{0.1, 0.2};
  EXPECT_EQ(roi_threshold(10, 4, omega, std::vector<double>{1, 0}, 0.95), 98u);
  const double direct = 40.0 / (std::sqrt(0.1) * (1 + 0.95 * std::sqrt(0.1)));
  EXPECT_EQ(roi_threshold(10, 4, omega, std::vector<double>{1, 0}, 0.95),
            static_cast<std::uint64_t>(std::ceil(direct)));
  const std::vector<double> top{omega_max(0.95)};
  EXPECT_EQ(roi_threshold(10, 4, top, std::vector<double>{1}, 0.95), 40u);
  EXPECT_EQ(roi_threshold(0, 4, omega, std::vector<double>{0.5, 0.5}, 0.95), 0u);
}

TEST(RoiThreshold, ExpectationOverDistribution) {
  const auto grid = strategy_grid(0.95, 10);
  const std::vector<double> uniform(10, 0.1);
  double e = 0;
  for (double w : grid) e += 0.1 * price_factor(w, 0.95);
  EXPECT_EQ(roi_threshold(55, 5, grid, uniform, 0.95), static_cast<std::uint64_t>(std::ceil(275 / e)));
}

TEST(RoiThreshold, DegenerateInputs) {
  const std::vector<double> omega{0.1, 0.2};
  EXPECT_THROW(roi_threshold(10, 4, omega, std::vector<double>{0, 0}, 0.95), DomainError);
  EXPECT_THROW(roi_threshold(10, 4, omega, std::vector<double>{1}, 0.95), DomainError);
  EXPECT_EQ(roi_rule_of_thumb(2, 4), 80u);
}

TEST(InvestmentLedger, TelescopesAndFindsRecovery) {
  const auto g = synthetic(usd(1000), {-50, -20, 30, 60, -5});
  const auto ledger = InvestmentLedger::from_game(g);
  const auto& inv = ledger.at(0);
  ASSERT_EQ(inv.series.size(), 5u);
  EXPECT_EQ(inv.series[0], usd(950));
  EXPECT_EQ(inv.series[3], usd(1020));
  EXPECT_EQ(inv.recovery_round, 4);
  EXPECT_EQ(inv.delta_v(), usd(15));
  EXPECT_TRUE(ledger.audit(g));
}

TEST(InvestmentLedger, NoDipMeansNoRecoveryRound) {
  const auto ledger = InvestmentLedger::from_game(synthetic(usd(10), {0, 5, 0}));
  EXPECT_FALSE(ledger.at(0).recovery_round);
  const auto never = InvestmentLedger::from_game(synthetic(usd(10), {-1, -1}));
  EXPECT_FALSE(never.at(0).recovery_round);
  EXPECT_EQ(never.at(0).delta_v(), usd(-2));
}

TEST(InvestmentLedger, AuditDetectsTampering) {
  auto g = synthetic(usd(100), {1, 2, 3});
  const auto ledger = InvestmentLedger::from_game(g);
  g.rounds[1].agents[0].profit = usd(2.000001);
  EXPECT_FALSE(ledger.audit(g));
}

TEST(InvestmentLedger, ExactOverSimulatedRuns) {
  for (Technique t : kAllTechniques) {
    MarketConfig c;
    c.technique = t;
    c.seed = 31;
    const auto g = run_game(c);
    const auto ledger = InvestmentLedger::from_game(g);
    EXPECT_TRUE(ledger.audit(g));
    for (std::size_t i = 0; i < g.n_providers(); ++i)
      EXPECT_EQ(ledger.at(i).delta_v(), g.cumulative_profit[i].back());
  }
}
