#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rmprice/errors.hpp"
#include "rmprice/market.hpp"
#include "rmprice/money.hpp"
#include "rmprice/rng.hpp"

namespace rmprice {

/// u(s', s_-i) - u(s). Negative values are kept; clipping happens when
/// regrets are averaged.
inline Money instantaneous_regret(Money profit_counterfactual, Money profit_actual) {
  return profit_counterfactual - profit_actual;
}

/// max{mean(regrets), 0}. The clip applies to the average, not to the terms.
inline Money average_regret(std::span<const Money> regrets_for_pair) {
  if (regrets_for_pair.empty()) throw DomainError("average regret of an empty list");
  long double sum = 0;
  for (Money m : regrets_for_pair) sum += static_cast<long double>(m.micros());
  const auto mean = std::llround(sum / static_cast<long double>(regrets_for_pair.size()));
  return Money::from_micros(std::max<std::int64_t>(mean, 0));
}

/// Per-agent learning state: strategy grid, sampling distribution and the
/// regret ledger over every ordered (played, alternative) pair.
class StrategyState {
public:
  StrategyState() = default;

  StrategyState(std::vector<double> strategies, double r_max_floor)
      : strategies_(std::move(strategies)),
        probs_(strategies_.size(), strategies_.empty() ? 0.0 : 1.0 / static_cast<double>(strategies_.size())),
        regret_sum_(strategies_.size() * strategies_.size()),
        row_count_(strategies_.size(), 0),
        r_max_(strategies_.size(), r_max_floor),
        r_max_floor_(r_max_floor),
        internal_map_(strategies_.size()) {
    if (!(r_max_floor > 0.0)) throw DomainError("r_max_floor must be > 0");
    // Cyclic shift k -> k+1 (mod |S|).
    for (std::size_t k = 0; k < internal_map_.size(); ++k)
      internal_map_[k] = (k + 1) % internal_map_.size();
  }

  std::size_t size() const { return strategies_.size(); }
  const std::vector<double>& strategies() const { return strategies_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<StrategyIndex>& internal_map() const { return internal_map_; }
  std::uint64_t rounds() const { return rounds_; }
  std::uint64_t row_count(StrategyIndex played) const { return row_count_.at(played); }
  double r_max(StrategyIndex alt) const { return r_max_.at(alt); }
  double r_max_floor() const { return r_max_floor_; }
  double max_abs_regret() const { return max_abs_regret_; }

  Money regret_sum(StrategyIndex played, StrategyIndex alt) const {
    return regret_sum_.at(played * size() + alt);
  }

  void set_probs(std::vector<double> p) {
    if (p.size() != size()) throw InvariantViolation("probability vector has wrong length");
    probs_ = std::move(p);
  }

  void set_internal_map(std::vector<StrategyIndex> map) {
    std::vector<StrategyIndex> sorted = map;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k)
      if (sorted[k] != k || sorted.size() != size())
        throw DomainError("internal map must be a permutation of the strategy indices");
    internal_map_ = std::move(map);
  }

  /// Books one round: `counterfactual[k]` is the profit strategy k would have
  /// earned against the same opponents, so `counterfactual[played]` is the
  /// realised profit.
  void observe(StrategyIndex played, std::span<const Money> counterfactual) {
    if (counterfactual.size() != size()) throw InvariantViolation("counterfactual row has wrong length");
    const Money actual = counterfactual[played];
    for (std::size_t k = 0; k < size(); ++k) {
      const Money regret = instantaneous_regret(counterfactual[k], actual);
      regret_sum_[played * size() + k] += regret;
      r_max_[k] = std::max(r_max_[k], regret.dollars());
      max_abs_regret_ = std::max(max_abs_regret_, std::abs(regret.dollars()));
    }
    ++row_count_[played];
    ++rounds_;
  }

  /// Clipped average regret for having played `played` instead of `alt`.
  Money average_regret(StrategyIndex played, StrategyIndex alt, RegretAveraging mode) const {
    const std::uint64_t denom = mode == RegretAveraging::rounds ? rounds_ : row_count_.at(played);
    if (denom == 0) return Money{};
    const auto mean = std::llround(static_cast<long double>(regret_sum(played, alt).micros()) /
                                   static_cast<long double>(denom));
    return Money::from_micros(std::max<std::int64_t>(mean, 0));
  }

private:
  std::vector<double> strategies_;
  std::vector<double> probs_;
  std::vector<Money> regret_sum_;  // row-major [played][alt]
  std::vector<std::uint64_t> row_count_;
  std::vector<double> r_max_;
  double r_max_floor_ = 1e-6;
  double max_abs_regret_ = 0.0;
  std::vector<StrategyIndex> internal_map_;
  std::uint64_t rounds_ = 0;
};

/// Penalty-style update: the played strategy keeps (1 - r) of its mass and
/// every other strategy receives r / (|S| - 1) on top of (1 - r) of its own.
inline std::vector<double> apply_rm_update(std::span<const double> probs, StrategyIndex played,
                                           double ratio) {
  std::vector<double> out(probs.begin(), probs.end());
  const std::size_t n = out.size();
  if (n < 2) return out;
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("regret ratio outside [0,1]");
  const double keep = 1.0 - ratio;
  const double spread = ratio / static_cast<double>(n - 1);
  for (std::size_t x = 0; x < n; ++x) out[x] = x == played ? out[x] * keep : spread + out[x] * keep;
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12)
    for (auto& p : out) p /= total;
  return out;
}

/// Ratio R_T(played, alt) / R_max(alt) that drives the update; always in [0,1].
inline double regret_ratio(const StrategyState& state, StrategyIndex played, StrategyIndex alt,
                           RegretAveraging mode = RegretAveraging::rounds) {
  const double avg = state.average_regret(played, alt, mode).dollars();
  const double ratio = avg / state.r_max(alt);
  if (ratio > 1.0 + 1e-9) throw InvariantViolation("average regret exceeds its running maximum");
  return std::clamp(ratio, 0.0, 1.0);
}

/// Applies the probability update for (played, recommended) in place.
inline StrategyState& update_rm(StrategyState& state, StrategyIndex played,
                                StrategyIndex recommended,
                                RegretAveraging mode = RegretAveraging::rounds) {
  if (state.size() < 2) return state;
  const double r = regret_ratio(state, played, recommended, mode);
  state.set_probs(apply_rm_update(state.probs(), played, r));
  return state;
}

/// Row `current` of the regret-matching transition matrix:
/// (1/mu) R(j,k) off the diagonal, the remainder on the diagonal.
inline std::vector<double> hmc_row(std::span<const double> regrets_from_current,
                                   StrategyIndex current, double mu) {
  double off = 0.0;
  for (std::size_t k = 0; k < regrets_from_current.size(); ++k) {
    if (regrets_from_current[k] < 0.0) throw DomainError("transition regrets must be clipped at zero");
    if (k != current) off += regrets_from_current[k];
  }
  if (!(mu > 0.0) || mu < off)
    throw DomainError("mu too small: transition row needs mu >= " + std::to_string(off));
  std::vector<double> row(regrets_from_current.size());
  for (std::size_t k = 0; k < row.size(); ++k)
    row[k] = k == current ? 0.0 : regrets_from_current[k] / mu;
  row[current] = 1.0 - off / mu;
  return row;
}

/// Transition distribution from the state's ledger, using R(j,k) = [D_T(j,k)]^+.
inline std::vector<double> update_hmc(const StrategyState& state, StrategyIndex current, double mu) {
  std::vector<double> regrets(state.size());
  for (std::size_t k = 0; k < regrets.size(); ++k)
    regrets[k] = state.average_regret(current, k, RegretAveraging::rounds).dollars();
  return hmc_row(regrets, current, mu);
}

/// mu large enough that every transition row stays non-negative.
inline double default_hmc_mu(const StrategyState& state) {
  const double scale = state.max_abs_regret();
  return scale > 0.0 ? 2.0 * static_cast<double>(state.size()) * scale : 1.0;
}

/// Alternative strategy the coordinator proposes for this round.
inline StrategyIndex recommend(Technique technique, const StrategyState& state,
                               StrategyIndex current, Rng& rng) {
  switch (technique) {
    case Technique::external:
      // Grid is ascending, so index 0 is the lowest-price strategy.
      return 0;
    case Technique::internal:
      return state.internal_map().at(current);
    case Technique::swap: {
      if (state.size() < 2) return current;
      const StrategyIndex pick = uniform_index(rng, state.size() - 1);
      return pick >= current ? pick + 1 : pick;
    }
    default:
      throw DomainError("technique has no recommender: " + std::string(to_string(technique)));
  }
}

/// Inverse-CDF draw from a probability vector.
inline StrategyIndex sample_strategy(std::span<const double> probs, Rng& rng) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (probs.empty() || std::abs(total - 1.0) > 1e-9)
    throw InvariantViolation("sampling from a degenerate probability vector");
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  // u landed in the rounding slack; return the last strategy with mass.
  for (std::size_t k = probs.size(); k-- > 0;)
    if (probs[k] > 0.0) return k;
  return probs.size() - 1;
}

}  // namespace rmprice
