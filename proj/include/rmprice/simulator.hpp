#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rmprice/equilibrium.hpp"
#include "rmprice/errors.hpp"
#include "rmprice/market.hpp"
#include "rmprice/money.hpp"
#include "rmprice/pricing.hpp"
#include "rmprice/regret.hpp"
#include "rmprice/rng.hpp"
#include "rmprice/types.hpp"

namespace rmprice {

// ---------------------------------------------------------------------------
// Market manager

/// Ordering key for a bid: lower price first, then lower tie-break rank.
struct Standing {
  Money price;
  std::uint64_t rank = 0;

  friend bool operator<(Standing a, Standing b) {
    return a.price < b.price || (a.price == b.price && a.rank < b.rank);
  }
};

/// Provider with the lowest feasible price. `rank[provider_id]` orders equal
/// prices (lower wins); without ranks the lower provider id wins.
inline std::optional<ProviderId> select_winner(std::span<const Bid> bids,
                                               std::span<const std::uint64_t> rank = {}) {
  std::optional<ProviderId> winner;
  Standing best;
  for (const auto& bid : bids) {
    if (!bid.feasible) continue;
    const Standing s{bid.price, rank.empty() ? bid.provider_id : rank[bid.provider_id]};
    if (!winner || s < best) {
      winner = bid.provider_id;
      best = s;
    }
  }
  return winner;
}

/// What a provider knows when evaluating "what if I had bid differently".
///
/// In the default (omniscient referee) mode the evaluation uses the best
/// rival bid, which makes the counterfactual exact for winners and losers
/// alike. In strict-information mode only the announced winning price is
/// known: a winner assumes it would keep winning at any price up to its own
/// bid, a loser wins only by strictly undercutting the winning price.
struct CounterfactualView {
  bool strict_information = false;
  bool won = false;
  Money own_price;
  std::uint64_t own_rank = 0;
  std::optional<Standing> best_rival;
  std::optional<Money> winning_price;
};

inline Money counterfactual_profit(Money alt_price, bool alt_feasible, Money serving_cost,
                                   const CounterfactualView& view) {
  if (!alt_feasible) return Money{};
  bool wins = false;
  if (!view.strict_information)
    wins = !view.best_rival || Standing{alt_price, view.own_rank} < *view.best_rival;
  else if (view.won)
    wins = alt_price <= view.own_price;
  else
    wins = !view.winning_price || alt_price < *view.winning_price;
  return wins ? alt_price - serving_cost : Money{};
}

// ---------------------------------------------------------------------------
// Agents and round records

class ProviderAgent {
public:
  ProviderAgent(ProviderProfile profile, Technique technique, const MarketConfig& config)
      : profile_(std::move(profile)),
        technique_(technique),
        state_(strategy_grid(config.gamma, static_cast<std::size_t>(config.omega_grid_size)),
               config.r_max_floor),
        rng_(make_rng(config.seed, stream::kAgentBase + profile_.provider_id)) {}

  const ProviderProfile& profile() const { return profile_; }
  ProviderId id() const { return profile_.provider_id; }
  Technique technique() const { return technique_; }
  const StrategyState& state() const { return state_; }
  StrategyState& state() { return state_; }
  Rng& rng() { return rng_; }

private:
  ProviderProfile profile_;
  Technique technique_;
  StrategyState state_;
  Rng rng_;
};

struct AgentOutcome {
  std::optional<Bid> bid;  // nullopt: abstained (app not offered or not hostable)
  Money profit;
  std::vector<Money> counterfactual;  // profit per strategy; empty when abstained
  std::optional<StrategyIndex> recommended;
  Money regret;      // instantaneous regret fed to the learner this round
  Money avg_regret;  // average regret behind this round's update
  std::vector<double> probs;  // distribution after this round's update
};

struct RoundRecord {
  int round = 0;  // 1-based
  RequestId request_id = 0;
  AppId app_id = 0;
  std::optional<ProviderId> winner;
  std::vector<AgentOutcome> agents;  // indexed by provider id

  std::vector<Bid> bids() const {
    std::vector<Bid> out;
    for (const auto& a : agents)
      if (a.bid) out.push_back(*a.bid);
    return out;
  }
};

namespace detail {

inline std::vector<std::uint64_t> tie_ranks(std::size_t n, TieBreak mode, Rng& referee) {
  std::vector<std::uint64_t> ranks(n);
  std::iota(ranks.begin(), ranks.end(), std::uint64_t{0});
  if (mode == TieBreak::random_priority)
    for (std::size_t k = n; k > 1; --k) std::swap(ranks[k - 1], ranks[uniform_index(referee, k)]);
  return ranks;
}

inline StrategyIndex choose_strategy(ProviderAgent& agent, std::span<const Money> prices,
                                     std::span<const std::uint8_t> feasible, Money cost) {
  switch (agent.technique()) {
    case Technique::random:
      return uniform_index(agent.rng(), prices.size());
    case Technique::non_competition: {
      std::optional<StrategyIndex> best;
      for (std::size_t k = 0; k < prices.size(); ++k)
        if (feasible[k] && (!best || prices[k] - cost > prices[*best] - cost)) best = k;
      return best.value_or(prices.size() - 1);
    }
    default:
      return sample_strategy(agent.state().probs(), agent.rng());
  }
}

}  // namespace detail

/// One auction: every provider prices the request, the manager picks the
/// lowest feasible bid, profits are booked, and each agent evaluates every
/// alternative strategy against the outcome and updates its distribution.
inline RoundRecord run_round(int t, const Request& request, std::vector<ProviderAgent>& agents,
                             const MarketConfig& config, Rng& referee) {
  const std::size_t n = agents.size();
  RoundRecord rec;
  rec.round = t;
  rec.request_id = request.id;
  rec.app_id = request.app_id;
  rec.agents.resize(n);

  const auto ranks = detail::tie_ranks(n, config.tie_break, referee);

  struct Quote {
    std::vector<Money> prices;
    std::vector<std::uint8_t> feasible;
    Money cost;
  };
  std::vector<std::optional<Quote>> quotes(n);
  std::vector<Bid> bids;

  for (std::size_t i = 0; i < n; ++i) {
    auto& agent = agents[i];
    if (agent.id() != i) throw InvariantViolation("agents must be indexed by provider id");
    const auto assignment = select_vms(agent.profile(), request);
    if (!assignment) continue;
    const Application& app = *agent.profile().find_app(request.app_id);
    const Money c = deployment_cost(request, *assignment);
    const Money cost = serving_cost(app.alpha, app.beta, app.theta, c);

    Quote q;
    q.cost = cost;
    const auto& grid = agent.state().strategies();
    for (double omega : grid) {
      const Money price = offered_price(omega, config.gamma, app.theta, c);
      q.prices.push_back(price);
      q.feasible.push_back(
          check_constraints(price, request.willingness, app.theta, c, cost).feasible ? 1 : 0);
    }
    const StrategyIndex j = detail::choose_strategy(agent, q.prices, q.feasible, cost);

    Bid bid;
    bid.provider_id = i;
    bid.strategy = j;
    bid.omega = grid[j];
    bid.price = q.prices[j];
    bid.serving_cost = cost;
    bid.theta = app.theta;
    bid.deploy_cost = c;
    bid.feasible = q.feasible[j] != 0;
    bids.push_back(bid);
    rec.agents[i].bid = bid;
    quotes[i] = std::move(q);
  }

  rec.winner = select_winner(bids, ranks);
  const std::optional<Money> winning_price =
      rec.winner ? std::optional<Money>(rec.agents[*rec.winner].bid->price) : std::nullopt;

  for (std::size_t i = 0; i < n; ++i) {
    auto& out = rec.agents[i];
    auto& agent = agents[i];
    StrategyState& state = agent.state();
    if (out.bid) out.profit = round_profit(bids, rec.winner, i);
    if (!out.bid) {
      out.probs = state.probs();
      continue;
    }
    const Quote& q = *quotes[i];
    const Bid& own = *out.bid;

    CounterfactualView view;
    view.strict_information = config.strict_information;
    view.won = rec.winner && *rec.winner == i;
    view.own_price = own.price;
    view.own_rank = ranks[i];
    view.winning_price = winning_price;
    for (const auto& other : bids) {
      if (other.provider_id == i || !other.feasible) continue;
      const Standing s{other.price, ranks[other.provider_id]};
      if (!view.best_rival || s < *view.best_rival) view.best_rival = s;
    }

    out.counterfactual.resize(state.size());
    for (std::size_t k = 0; k < state.size(); ++k)
      out.counterfactual[k] = counterfactual_profit(q.prices[k], q.feasible[k] != 0, q.cost, view);
    if (out.counterfactual[own.strategy] != out.profit)
      throw InvariantViolation("counterfactual at the played strategy differs from the booked profit");

    state.observe(own.strategy, out.counterfactual);

    const Technique tech = agent.technique();
    if (tech == Technique::external || tech == Technique::internal || tech == Technique::swap) {
      const StrategyIndex rec_idx = recommend(tech, state, own.strategy, agent.rng());
      out.recommended = rec_idx;
      out.regret = instantaneous_regret(out.counterfactual[rec_idx], out.profit);
      out.avg_regret = state.average_regret(own.strategy, rec_idx, config.regret_averaging);
      update_rm(state, own.strategy, rec_idx, config.regret_averaging);
    } else {
      Money best_cf = out.profit;
      Money best_avg;
      for (std::size_t k = 0; k < state.size(); ++k) {
        best_cf = std::max(best_cf, out.counterfactual[k]);
        best_avg = std::max(best_avg, state.average_regret(own.strategy, k, RegretAveraging::rounds));
      }
      out.regret = instantaneous_regret(best_cf, out.profit);
      out.avg_regret = best_avg;
      if (tech == Technique::hmc_baseline)
        state.set_probs(update_hmc(state, own.strategy, default_hmc_mu(state)));
    }
    out.probs = state.probs();
  }
  return rec;
}

/// True iff, over the last `window` rounds, every learning provider's
/// per-strategy probability movement stays below `eps`.
inline bool detect_equilibrium(std::span<const RoundRecord> history,
                               const std::vector<bool>& learning, double eps, std::size_t window,
                               StabilityMeasure measure = StabilityMeasure::step) {
  if (window == 0 || history.size() < window) return false;
  if (std::none_of(learning.begin(), learning.end(), [](bool b) { return b; })) return false;
  // A step measure needs the round before the window as its baseline.
  const bool step = measure == StabilityMeasure::step;
  if (step && history.size() < window + 1) return false;
  const auto recent = history.subspan(history.size() - window - (step ? 1 : 0));
  for (std::size_t i = 0; i < learning.size(); ++i) {
    if (!learning[i]) continue;
    const std::size_t m = recent.front().agents.at(i).probs.size();
    for (std::size_t k = 0; k < m; ++k) {
      double lo = recent.front().agents[i].probs[k];
      double hi = lo;
      for (std::size_t t = 1; t < recent.size(); ++t) {
        const double p = recent[t].agents[i].probs[k];
        if (step && std::abs(p - recent[t - 1].agents[i].probs[k]) >= eps) return false;
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
      if (!step && hi - lo >= eps) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Whole games

struct GameResult {
  Technique technique = Technique::external;
  std::vector<double> strategies;
  std::vector<ProviderProfile> providers;
  std::vector<Request> requests;
  std::vector<RoundRecord> rounds;
  std::optional<int> converged_at;
  std::vector<std::vector<Money>> cumulative_profit;  // [provider][round]
  std::vector<std::vector<Money>> avg_regret;         // [provider][round]
  std::vector<std::size_t> wins;
  std::vector<StrategyState> final_states;

  std::size_t n_providers() const { return providers.size(); }

  /// Uniform weight on the strategy profiles of rounds [0, upto).
  /// Abstaining providers are recorded at strategy 0 with zero payoff.
  std::vector<JointSample> empirical_joint(std::size_t upto) const {
    upto = std::min(upto, rounds.size());
    std::vector<JointSample> psi;
    psi.reserve(upto);
    for (std::size_t t = 0; t < upto; ++t) {
      JointSample s;
      s.context = t;
      s.weight = 1.0 / static_cast<double>(upto);
      for (const auto& a : rounds[t].agents) s.profile.push_back(a.bid ? a.bid->strategy : 0);
      psi.push_back(std::move(s));
    }
    return psi;
  }

  /// Correlated-equilibrium residual of the play in rounds [0, upto), with
  /// payoffs of unilateral deviations read from the recorded counterfactuals.
  CeResidual ce_residual_at(std::size_t upto) const {
    const auto psi = empirical_joint(upto);
    const std::vector<std::size_t> sizes(providers.size(), strategies.size());
    return ce_residual(std::span<const JointSample>(psi), std::span<const std::size_t>(sizes),
                       [this](std::size_t i, std::span<const StrategyIndex> profile,
                              std::size_t ctx) -> double {
                         const auto& a = rounds[ctx].agents[i];
                         return a.bid ? a.counterfactual[profile[i]].dollars() : 0.0;
                       });
  }
};

inline GameResult run_game(const MarketConfig& config, std::vector<ProviderProfile> providers,
                           std::vector<Request> requests) {
  config.validate();
  GameResult result;
  result.technique = config.technique;
  result.strategies = strategy_grid(config.gamma, static_cast<std::size_t>(config.omega_grid_size));

  std::vector<ProviderAgent> agents;
  agents.reserve(providers.size());
  for (const auto& p : providers) agents.emplace_back(p, config.technique, config);
  const std::size_t n = agents.size();
  const std::vector<bool> learning(n, is_learning(config.technique));

  result.cumulative_profit.assign(n, {});
  result.avg_regret.assign(n, {});
  result.wins.assign(n, 0);
  result.rounds.reserve(requests.size());

  Rng referee = make_rng(config.seed, stream::kReferee);
  std::vector<Money> running(n);
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const int t = static_cast<int>(r) + 1;
    result.rounds.push_back(run_round(t, requests[r], agents, config, referee));
    const auto& rec = result.rounds.back();
    if (rec.winner) ++result.wins[*rec.winner];
    for (std::size_t i = 0; i < n; ++i) {
      running[i] += rec.agents[i].profit;
      result.cumulative_profit[i].push_back(running[i]);
      result.avg_regret[i].push_back(rec.agents[i].avg_regret);
    }
    if (!result.converged_at &&
        detect_equilibrium(result.rounds, learning, config.equilibrium_eps,
                           static_cast<std::size_t>(config.equilibrium_window), config.equilibrium_measure)) {
      result.converged_at = t;
      if (config.stop_at_equilibrium) break;
    }
  }

  result.final_states.reserve(n);
  for (const auto& a : agents) result.final_states.push_back(a.state());
  result.providers = std::move(providers);
  result.requests = std::move(requests);
  return result;
}

inline GameResult run_game(const MarketConfig& config, const std::vector<VMModel>& catalog) {
  auto providers = generate_market(config, catalog);
  auto requests = generate_requests(config, providers);
  return run_game(config, std::move(providers), std::move(requests));
}

inline GameResult run_game(const MarketConfig& config) {
  return run_game(config, default_vm_catalog());
}

}  // namespace rmprice
