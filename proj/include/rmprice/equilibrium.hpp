#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "rmprice/errors.hpp"
#include "rmprice/types.hpp"

namespace rmprice {

/// One atom of an empirical joint distribution over strategy profiles.
/// `context` lets the payoff depend on more than the profile (the request
/// being auctioned, for instance); toy games can leave it at zero.
struct JointSample {
  std::vector<StrategyIndex> profile;
  double weight = 0.0;
  std::size_t context = 0;
};

/// Correlated-equilibrium deviation gains, indexed by (player, s_i, s_i').
class CeResidual {
public:
  CeResidual() = default;
  explicit CeResidual(std::span<const std::size_t> strategies_per_player)
      : sizes_(strategies_per_player.begin(), strategies_per_player.end()) {
    for (auto m : sizes_) gains_.emplace_back(m * m, 0.0);
  }

  std::size_t players() const { return sizes_.size(); }
  std::size_t strategies(std::size_t player) const { return sizes_.at(player); }

  double& at(std::size_t player, StrategyIndex played, StrategyIndex alt) {
    return gains_.at(player).at(played * sizes_.at(player) + alt);
  }
  double at(std::size_t player, StrategyIndex played, StrategyIndex alt) const {
    return gains_.at(player).at(played * sizes_.at(player) + alt);
  }

  double max_entry() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& g : gains_)
      for (double v : g) m = std::max(m, v);
    return gains_.empty() ? 0.0 : m;
  }

  /// True iff every deviation gain is at most eps.
  bool is_epsilon_ce(double eps) const { return max_entry() <= eps; }

private:
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<double>> gains_;
};

/// Sum over profiles s with s_i = j of psi(s) [u_i(k, s_-i) - u_i(s)].
///
/// `profit(player, profile, context)` must return u_player at `profile`.
template <class ProfitFn>
CeResidual ce_residual(std::span<const JointSample> psi,
                       std::span<const std::size_t> strategies_per_player, ProfitFn&& profit) {
  CeResidual out(strategies_per_player);
  std::vector<StrategyIndex> deviated;
  for (const auto& atom : psi) {
    if (atom.profile.size() != strategies_per_player.size())
      throw DomainError("profile length does not match the number of players");
    for (std::size_t i = 0; i < atom.profile.size(); ++i) {
      const StrategyIndex played = atom.profile[i];
      const double base = profit(i, std::span<const StrategyIndex>(atom.profile), atom.context);
      deviated = atom.profile;
      for (StrategyIndex alt = 0; alt < strategies_per_player[i]; ++alt) {
        deviated[i] = alt;
        const double gain =
            profit(i, std::span<const StrategyIndex>(deviated), atom.context) - base;
        out.at(i, played, alt) += atom.weight * gain;
      }
    }
  }
  return out;
}

}  // namespace rmprice
