#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rmprice/errors.hpp"
#include "rmprice/money.hpp"
#include "rmprice/pricing.hpp"
#include "rmprice/simulator.hpp"

namespace rmprice {

inline Money update_investment(Money v_prev, Money round_profit) { return v_prev + round_profit; }

/// Request volume after which a provider's investment is expected to turn
/// positive: ceil(L n / E[sqrt(w)(1 + gamma sqrt(w))]) with the expectation
/// taken over `probs` on `omega_values`.
inline std::uint64_t roi_threshold(std::uint64_t apps, std::uint64_t n_providers,
                                   std::span<const double> omega_values,
                                   std::span<const double> probs, double gamma) {
  if (omega_values.size() != probs.size() || omega_values.empty())
    throw DomainError("omega values and probabilities must align");
  double expected = 0.0;
  for (std::size_t k = 0; k < omega_values.size(); ++k)
    expected += probs[k] * price_factor(omega_values[k], gamma);
  if (!(expected > 0.0)) throw DomainError("expected price factor is zero");
  if (apps == 0) return 0;
  const double x = static_cast<double>(apps) * static_cast<double>(n_providers) / expected;
  // Snap ratios within rounding noise of an integer, e.g. omega_max where the factor is exactly 1.
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(x));
}

/// The "10 x L x n" rule of thumb reported next to the threshold above.
inline std::uint64_t roi_rule_of_thumb(std::uint64_t apps, std::uint64_t n_providers) {
  return 10 * apps * n_providers;
}

struct ProviderInvestment {
  ProviderId provider_id = 0;
  Money initial;
  std::vector<Money> series;  // V^t for t = 1..q
  std::optional<int> recovery_round;

  Money final_value() const { return series.empty() ? initial : series.back(); }
  Money delta_v() const { return final_value() - initial; }
};

/// Investment trajectories V^t = V^{t-1} + u(t) for every provider of a run.
class InvestmentLedger {
public:
  static InvestmentLedger from_game(const GameResult& game) {
    InvestmentLedger ledger;
    for (const auto& p : game.providers) {
      ProviderInvestment inv;
      inv.provider_id = p.provider_id;
      inv.initial = p.initial_investment;
      Money v = inv.initial;
      bool dipped = false;
      for (const auto& rec : game.rounds) {
        v = update_investment(v, rec.agents.at(p.provider_id).profit);
        inv.series.push_back(v);
        if (v < inv.initial) dipped = true;
        if (dipped && !inv.recovery_round && v >= inv.initial) inv.recovery_round = rec.round;
      }
      ledger.providers_.push_back(std::move(inv));
    }
    return ledger;
  }

  const std::vector<ProviderInvestment>& providers() const { return providers_; }
  const ProviderInvestment& at(ProviderId id) const { return providers_.at(id); }

  /// V^q - V^0 must equal the sum of booked round profits, exactly.
  bool audit(const GameResult& game) const {
    for (const auto& inv : providers_) {
      Money total;
      for (const auto& rec : game.rounds) total += rec.agents.at(inv.provider_id).profit;
      if (inv.delta_v() != total) return false;
      Money v = inv.initial;
      for (std::size_t t = 0; t < inv.series.size(); ++t) {
        v += game.rounds[t].agents.at(inv.provider_id).profit;
        if (inv.series[t] != v) return false;
      }
    }
    return true;
  }

private:
  std::vector<ProviderInvestment> providers_;
};

}  // namespace rmprice
