#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rmprice/market.hpp"
#include "rmprice/pricing.hpp"

using namespace rmprice;

namespace {

const VMModel& sku(std::string_view label) {
  static const auto cat = default_vm_catalog();
  for (const auto& m : cat)
    if (m.type_label == label) return m;
  throw std::runtime_error("no sku");
}

// Independent root of sqrt(w)(1 + g sqrt(w)) = 1 by bisection.
double bisect(double gamma) {
  long double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    const long double mid = (lo + hi) / 2;
    (std::sqrt(mid) * (1 + gamma * std::sqrt(mid)) < 1 ? lo : hi) = mid;
  }
  return static_cast<double>((lo + hi) / 2);
}

Money usd(double d) { return Money::from_dollars(d); }

}  // namespace

TEST(DeploymentCost, WorkedExampleIsExact) {
  const std::vector<VMModel> vms{sku("t2.small"), sku("m3.large"), sku("t2.medium")};
  EXPECT_EQ(deployment_cost(10.0, vms), Money::from_micros(2'180'000));
  EXPECT_EQ(deployment_cost(10.0, vms).str(), "2.180000");
}

TEST(DeploymentCost, ZeroDurationAndSingleVm) {
  const std::vector<VMModel> one{sku("t2.small")};
  EXPECT_EQ(deployment_cost(0.0, one), Money{});
  EXPECT_EQ(deployment_cost(1.0, one), Money::from_micros(26'000));
}

TEST(DeploymentCost, LinearInDuration) {
  const std::vector<VMModel> vms{sku("c3.large"), sku("R3.large")};
  EXPECT_EQ(deployment_cost(7.0, vms).micros(), 7 * deployment_cost(1.0, vms).micros());
}

TEST(DeploymentCost, RequestMustBeCovered) {
  Request r;
  r.tau_hours = 2;
  r.services = {{1, 1, 1}, {1, 1, 1}};
  EXPECT_THROW(deployment_cost(r, VMAssignment{sku("t2.small")}), InvariantViolation);
}

TEST(OmegaMax, AgreesWithBisectionOracle) {
  for (double g : {0.05, 0.3, 0.5, 0.75, 0.95, 0.999}) {
    const double w = omega_max(g);
    EXPECT_NEAR(w, bisect(g), 1e-12) << "gamma " << g;
    EXPECT_NEAR(price_factor(w, g), 1.0, 1e-9);
  }
  EXPECT_NEAR(omega_max(0.95), 0.3928586, 5e-8);
}

TEST(OmegaMax, LimitsAndDomain) {
  EXPECT_NEAR(omega_max(1e-9), 1.0, 1e-6);
  EXPECT_GT(omega_max(0.2), omega_max(0.8));
  EXPECT_THROW(omega_max(0.0), DomainError);
  EXPECT_THROW(omega_max(1.0), DomainError);
  try {
    omega_max(1.5);
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "gamma out of (0,1)");
  }
}

TEST(OfferedPrice, Examples) {
  const long double root = std::sqrt(0.1L);
  const long double oracle = 100.0L * root * (1.0L + 0.95L * root);
  EXPECT_NEAR(offered_price(0.1, 0.95, usd(100), Money{}).dollars(), static_cast<double>(oracle), 1e-6);
  EXPECT_NEAR(offered_price(0.1, 0.95, usd(100), Money{}).dollars(), 41.1228, 1e-4);
  EXPECT_EQ(offered_price(omega_max(0.95), 0.95, usd(98), usd(2)), usd(100));
  EXPECT_EQ(offered_price(0.2, 0.95, Money{}, Money{}), Money{});
}

TEST(OfferedPrice, AtOmegaMaxEqualsLicensePlusDeployment) {
  for (double theta : {15.0, 342.0, 4922.0})
    for (double c : {0.0, 2.18, 517.3}) {
      const Money p = offered_price(omega_max(0.95), 0.95, usd(theta), usd(c));
      EXPECT_NEAR(p.dollars(), theta + c, 1e-9);
    }
}

TEST(OfferedPrice, StrictlyIncreasingOnGrid) {
  const auto grid = strategy_grid(0.95, 40);
  Money prev;
  for (double w : grid) {
    const Money p = offered_price(w, 0.95, usd(787), usd(12.5));
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(OfferedPrice, ScaleEquivariant) {
  for (double k : {0.5, 2.0, 10.0}) {
    const double base = offered_price(0.17, 0.95, usd(150), usd(4)).dollars();
    const double scaled = offered_price(0.17, 0.95, usd(150 * k), usd(4 * k)).dollars();
    // Each side is rounded to the micro-dollar once.
    EXPECT_NEAR(scaled, k * base, (k + 1) * 0.5e-6 + 1e-9);
  }
}

TEST(OfferedPrice, RejectsOmegaOutsideRange) {
  EXPECT_THROW(offered_price(0.0, 0.95, usd(10), usd(1)), DomainError);
  EXPECT_THROW(offered_price(0.5, 0.95, usd(10), usd(1)), DomainError);
}

TEST(ServingCost, Examples) {
  EXPECT_EQ(serving_cost(0.2, 0.1, usd(150), usd(2.18)), Money::from_micros(15'436'000));
  EXPECT_EQ(serving_cost(0, 0, usd(150), usd(2.18)), Money{});
  EXPECT_EQ(serving_cost(1, 1, usd(150), usd(2.18)), usd(152.18));
}

TEST(StrategyGrid, EquallySpacedUpToOmegaMax) {
  const auto grid = strategy_grid(0.95, 10);
  ASSERT_EQ(grid.size(), 10u);
  const double w = omega_max(0.95);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(grid[k], w * (k + 1) / 10.0, 1e-15);
  EXPECT_EQ(grid.back(), w);
  EXPECT_THROW(strategy_grid(0.95, 1), DomainError);
}

TEST(RoundProfit, WinnerTakesPriceMinusCost) {
  std::vector<Bid> bids(2);
  bids[0].provider_id = 0;
  bids[0].price = usd(41.12);
  bids[0].serving_cost = usd(15.44);
  bids[1].provider_id = 1;
  bids[1].price = usd(50);
  bids[1].serving_cost = usd(10);
  EXPECT_EQ(round_profit(bids, 0, 0), usd(25.68));
  EXPECT_EQ(round_profit(bids, 0, 1), Money{});
  EXPECT_EQ(round_profit(bids, std::nullopt, 0), Money{});
  EXPECT_THROW(round_profit(bids, 0, 7), DomainError);
}

TEST(RoundProfit, NegativeMarginIsKept) {
  std::vector<Bid> bids(1);
  bids[0].price = usd(10);
  bids[0].serving_cost = usd(12);
  EXPECT_EQ(round_profit(bids, 0, 0), usd(-2));
}

TEST(CheckConstraints, ReportsFirstViolation) {
  EXPECT_TRUE(check_constraints(usd(41.12), usd(200), usd(150), usd(2.18), usd(15.44)).feasible);
  EXPECT_EQ(check_constraints(usd(210), usd(200), usd(150), usd(2.18), usd(15.44)).violated, "wtp");
  EXPECT_EQ(check_constraints(usd(160), usd(200), usd(150), usd(2.18), usd(15.44)).violated,
            "license-plus-deployment");
  EXPECT_EQ(check_constraints(Money{}, usd(200), usd(150), usd(2.18), usd(15.44)).violated,
            "positive-price");
  EXPECT_EQ(check_constraints(usd(20), usd(200), usd(150), usd(2.18), Money{}).violated, "positive-cost");
  // Both upper bounds are inclusive.
  EXPECT_TRUE(check_constraints(usd(152.18), usd(152.18), usd(150), usd(2.18), usd(1)).feasible);
}

TEST(CheckConstraints, GridBidsAreFeasibleForGeneratedRequests) {
  MarketConfig c;
  c.seed = 9;
  const auto providers = generate_market(c, default_vm_catalog());
  const auto requests = generate_requests(c, providers);
  const auto grid = strategy_grid(c.gamma, 10);
  for (const auto& r : requests)
    for (const auto& p : providers) {
      const auto a = select_vms(p, r);
      if (!a) continue;
      const auto& app = *p.find_app(r.app_id);
      const Money dc = deployment_cost(r, *a);
      const Money cost = serving_cost(app.alpha, app.beta, app.theta, dc);
      for (double w : grid) {
        const Money price = offered_price(w, c.gamma, app.theta, dc);
        // Willingness is set from the cheapest host; costlier hosts may exceed it.
        if (price > r.willingness) continue;
        EXPECT_TRUE(check_constraints(price, r.willingness, app.theta, dc, cost).feasible);
      }
    }
}
