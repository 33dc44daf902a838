#include <gtest/gtest.h>

#include <cmath>

#include "rmprice/simulator.hpp"

using namespace rmprice;

namespace {

Money usd(double d) { return Money::from_dollars(d); }

Bid bid(ProviderId id, double price, bool feasible = true) {
  Bid b;
  b.provider_id = id;
  b.price = usd(price);
  b.serving_cost = usd(1);
  b.feasible = feasible;
  return b;
}

MarketConfig small(Technique t, std::uint64_t seed) {
  MarketConfig c;
  c.technique = t;
  c.seed = seed;
  return c;
}

RoundRecord record_with_probs(std::vector<std::vector<double>> probs) {
  RoundRecord r;
  for (auto& p : probs) {
    AgentOutcome a;
    a.probs = std::move(p);
    r.agents.push_back(std::move(a));
  }
  return r;
}

}  // namespace

TEST(SelectWinner, LowestFeasiblePrice) {
  const std::vector<Bid> bids{bid(0, 41.1), bid(1, 38.2), bid(2, 45.0)};
  EXPECT_EQ(select_winner(bids), 1u);
  const std::vector<Bid> cheaper_infeasible{bid(0, 41.1), bid(1, 10.0, false)};
  EXPECT_EQ(select_winner(cheaper_infeasible), 0u);
  const std::vector<Bid> none{bid(0, 41.1, false), bid(1, 38.2, false)};
  EXPECT_FALSE(select_winner(none));
  EXPECT_FALSE(select_winner({}));
}

TEST(SelectWinner, TieBreaks) {
  const std::vector<Bid> tie{bid(0, 40), bid(1, 40), bid(2, 41)};
  EXPECT_EQ(select_winner(tie), 0u);
  const std::vector<std::uint64_t> ranks{2, 0, 1};
  EXPECT_EQ(select_winner(tie, ranks), 1u);
}

TEST(CounterfactualProfit, OmniscientAgainstBestRival) {
  CounterfactualView v;
  v.best_rival = Standing{usd(38.2), 0};
  v.own_rank = 1;
  EXPECT_EQ(counterfactual_profit(usd(35), true, usd(10), v), usd(25));
  EXPECT_EQ(counterfactual_profit(usd(50), true, usd(10), v), Money{});
  EXPECT_EQ(counterfactual_profit(usd(38.2), true, usd(10), v), Money{});  // tie lost on rank
  v.own_rank = 0;
  v.best_rival = Standing{usd(38.2), 1};
  EXPECT_EQ(counterfactual_profit(usd(38.2), true, usd(10), v), usd(28.2));
  EXPECT_EQ(counterfactual_profit(usd(20), false, usd(10), v), Money{});
  v.best_rival.reset();
  EXPECT_EQ(counterfactual_profit(usd(90), true, usd(10), v), usd(80));
}

TEST(CounterfactualProfit, StrictInformation) {
  CounterfactualView v;
  v.strict_information = true;
  v.won = false;
  v.winning_price = usd(38.2);
  EXPECT_EQ(counterfactual_profit(usd(35), true, usd(10), v), usd(25));
  EXPECT_EQ(counterfactual_profit(usd(38.2), true, usd(10), v), Money{});
  v.won = true;
  v.own_price = usd(38.2);
  EXPECT_EQ(counterfactual_profit(usd(30), true, usd(10), v), usd(20));
  EXPECT_EQ(counterfactual_profit(usd(38.2), true, usd(10), v), usd(28.2));
  EXPECT_EQ(counterfactual_profit(usd(39), true, usd(10), v), Money{});
}

TEST(RunRound, SymmetricProvidersOneWinnerRestZero) {
  MarketConfig c = small(Technique::external, 4);
  c.symmetric_providers = true;
  const auto providers = generate_market(c, default_vm_catalog());
  const auto requests = generate_requests(c, providers);
  std::vector<ProviderAgent> agents;
  for (const auto& p : providers) agents.emplace_back(p, c.technique, c);
  Rng referee = make_rng(c.seed, stream::kReferee);
  const auto rec = run_round(1, requests[0], agents, c, referee);
  ASSERT_TRUE(rec.winner);
  int zero = 0;
  for (const auto& a : rec.agents) zero += a.profit == Money{};
  EXPECT_GE(zero, 4);
  for (const auto& a : rec.agents) {
    ASSERT_TRUE(a.bid);
    EXPECT_EQ(a.probs.size(), 10u);
  }
}

TEST(RunRound, BaselinesNeverUpdate) {
  for (Technique t : {Technique::non_competition, Technique::random}) {
    const auto g = run_game(small(t, 2));
    for (const auto& rec : g.rounds)
      for (const auto& a : rec.agents)
        for (double p : a.probs) EXPECT_DOUBLE_EQ(p, 0.1);
    EXPECT_FALSE(g.converged_at);
  }
}

TEST(RunRound, NonCompetitionBidsTheLargestFeasibleMargin) {
  const auto g = run_game(small(Technique::non_competition, 3));
  const double top = g.strategies.back();
  for (const auto& rec : g.rounds)
    for (const auto& a : rec.agents)
      if (a.bid) {
        EXPECT_EQ(a.bid->omega, top);
      }
}

TEST(RunGame, SmallPresetShape) {
  const auto g = run_game(small(Technique::external, 1));
  ASSERT_EQ(g.rounds.size(), 100u);
  ASSERT_EQ(g.cumulative_profit.size(), 5u);
  for (const auto& series : g.cumulative_profit) EXPECT_EQ(series.size(), 100u);
  for (const auto& series : g.avg_regret) EXPECT_EQ(series.size(), 100u);
  bool moved = false;
  for (const auto& series : g.cumulative_profit) moved = moved || series.front() != series.back();
  EXPECT_TRUE(moved);
  std::size_t wins = 0;
  for (auto w : g.wins) wins += w;
  EXPECT_LE(wins, 100u);
}

TEST(RunGame, EmptyWorkload) {
  MarketConfig c = small(Technique::external, 1);
  c.n_requests = 0;
  const auto g = run_game(c);
  EXPECT_TRUE(g.rounds.empty());
  EXPECT_FALSE(g.converged_at);
}

TEST(RunGame, DeterministicPerSeed) {
  for (Technique t : kAllTechniques) {
    const auto a = run_game(small(t, 6));
    const auto b = run_game(small(t, 6));
    ASSERT_EQ(a.rounds.size(), b.rounds.size());
    for (std::size_t r = 0; r < a.rounds.size(); ++r) {
      EXPECT_EQ(a.rounds[r].winner, b.rounds[r].winner);
      for (std::size_t i = 0; i < a.rounds[r].agents.size(); ++i) {
        EXPECT_EQ(a.rounds[r].agents[i].bid, b.rounds[r].agents[i].bid);
        EXPECT_EQ(a.rounds[r].agents[i].probs, b.rounds[r].agents[i].probs);
      }
    }
  }
}

TEST(RunGame, WinnerIsLowestFeasibleAndLosersEarnNothing) {
  for (Technique t : kAllTechniques) {
    const auto g = run_game(small(t, 8));
    for (const auto& rec : g.rounds) {
      const auto bids = rec.bids();
      std::optional<Money> low;
      for (const auto& b : bids)
        if (b.feasible && (!low || b.price < *low)) low = b.price;
      ASSERT_EQ(low.has_value(), rec.winner.has_value());
      if (rec.winner) {
        EXPECT_EQ(rec.agents[*rec.winner].bid->price, *low);
      }
      int payers = 0;
      for (std::size_t i = 0; i < rec.agents.size(); ++i) {
        payers += rec.agents[i].profit != Money{};
        if (!rec.winner || *rec.winner != i) {
          EXPECT_EQ(rec.agents[i].profit, Money{});
        }
      }
      EXPECT_LE(payers, 1);
    }
  }
}

TEST(RunGame, CounterfactualsMatchReplayedAuction) {
  // With lowest-id tie-breaking every counterfactual can be re-derived by
  // swapping the provider's bid and rerunning winner selection.
  for (Technique t : {Technique::external, Technique::swap, Technique::hmc_baseline}) {
    MarketConfig c = small(t, 12);
    c.tie_break = TieBreak::lowest_id;
    const auto g = run_game(c);
    for (const auto& rec : g.rounds) {
      const auto bids = rec.bids();
      const Request& req = g.requests[rec.round - 1];
      for (std::size_t i = 0; i < rec.agents.size(); ++i) {
        const auto& a = rec.agents[i];
        if (!a.bid) continue;
        for (std::size_t k = 0; k < g.strategies.size(); ++k) {
          auto alt = bids;
          for (auto& b : alt) {
            if (b.provider_id != i) continue;
            b.price = offered_price(g.strategies[k], c.gamma, b.theta, b.deploy_cost);
            b.feasible = check_constraints(b.price, req.willingness, b.theta, b.deploy_cost, b.serving_cost).feasible;
          }
          const auto w = select_winner(alt);
          const Money expected = round_profit(alt, w, i);
          EXPECT_EQ(a.counterfactual[k], expected) << "round " << rec.round << " provider " << i;
        }
      }
    }
  }
}

TEST(RunGame, StrictInformationKeepsPlayedConsistency) {
  MarketConfig c = small(Technique::internal, 5);
  c.strict_information = true;
  const auto g = run_game(c);
  for (const auto& rec : g.rounds)
    for (const auto& a : rec.agents)
      if (a.bid) {
        EXPECT_EQ(a.counterfactual[a.bid->strategy], a.profit);
      }
}

TEST(RunGame, ProbabilitiesStayValid) {
  for (Technique t : {Technique::external, Technique::internal, Technique::swap, Technique::hmc_baseline}) {
    const auto g = run_game(small(t, 10));
    for (const auto& rec : g.rounds)
      for (const auto& a : rec.agents) {
        double s = 0;
        for (double p : a.probs) {
          EXPECT_GE(p, 0.0);
          EXPECT_LE(p, 1.0);
          s += p;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
  }
}

TEST(RunGame, StopAtEquilibriumEndsTheRun) {
  MarketConfig c = small(Technique::internal, 1);
  c.n_requests = 1000;
  const auto full = run_game(c);
  ASSERT_TRUE(full.converged_at);
  c.stop_at_equilibrium = true;
  const auto stopped = run_game(c);
  EXPECT_EQ(stopped.converged_at, full.converged_at);
  EXPECT_EQ(stopped.rounds.size(), static_cast<std::size_t>(*full.converged_at));
}

TEST(RunGame, SymmetricTiesSplitEvenly) {
  // Identical providers bidding the same margin tie every round.
  MarketConfig c = small(Technique::non_competition, 21);
  c.symmetric_providers = true;
  c.n_requests = 1000;
  const auto g = run_game(c);
  std::size_t total = 0;
  for (auto w : g.wins) total += w;
  const double q = static_cast<double>(total), p = 0.2;
  ASSERT_GT(total, 0u);
  for (auto w : g.wins) EXPECT_NEAR(static_cast<double>(w), q * p, 4 * std::sqrt(q * p * (1 - p)));
  c.tie_break = TieBreak::lowest_id;
  const auto fixed = run_game(c);
  EXPECT_EQ(fixed.wins[0], total);
}

TEST(DetectEquilibrium, FrozenVersusMoving) {
  std::vector<RoundRecord> frozen(60, record_with_probs({{0.5, 0.5}, {0.2, 0.8}}));
  const std::vector<bool> learning{true, true};
  EXPECT_TRUE(detect_equilibrium(frozen, learning, 1e-3, 50));
  EXPECT_FALSE(detect_equilibrium(std::span<const RoundRecord>(frozen).first(40), learning, 1e-3, 50));

  auto moving = frozen;
  for (std::size_t t = 0; t < moving.size(); ++t) moving[t].agents[1].probs = {t % 2 ? 0.3 : 0.2, t % 2 ? 0.7 : 0.8};
  EXPECT_FALSE(detect_equilibrium(moving, learning, 1e-3, 50));
  EXPECT_TRUE(detect_equilibrium(moving, {true, false}, 1e-3, 50));
  EXPECT_FALSE(detect_equilibrium(frozen, {false, false}, 1e-3, 50));
}

TEST(DetectEquilibrium, StepAndDriftMeasuresDiffer) {
  // A slow ramp: every step is below eps but the window drifts past it.
  std::vector<RoundRecord> ramp;
  for (int t = 0; t < 60; ++t) {
    const double x = 0.5 + 1e-4 * t;
    ramp.push_back(record_with_probs({{x, 1 - x}}));
  }
  const std::vector<bool> learning{true};
  EXPECT_TRUE(detect_equilibrium(ramp, learning, 1e-3, 50, StabilityMeasure::step));
  EXPECT_FALSE(detect_equilibrium(ramp, learning, 1e-3, 50, StabilityMeasure::drift));
}

TEST(GameResult, CeResidualUsesRecordedCounterfactuals) {
  const auto g = run_game(small(Technique::external, 3));
  const auto res = g.ce_residual_at(g.rounds.size());
  // Entry (i, j, k) is the mean over rounds where i played j of cf[k] - cf[j], weighted by 1/q.
  const std::size_t i = 1, j = 4, k = 0;
  double expected = 0;
  for (const auto& rec : g.rounds) {
    const auto& a = rec.agents[i];
    if (!a.bid || a.bid->strategy != j) continue;
    expected += (a.counterfactual[k] - a.counterfactual[j]).dollars() / g.rounds.size();
  }
  EXPECT_NEAR(res.at(i, j, k), expected, 1e-9);
  for (std::size_t s = 0; s < g.strategies.size(); ++s) EXPECT_NEAR(res.at(i, s, s), 0.0, 1e-12);
}
