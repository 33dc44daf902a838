#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rmprice/errors.hpp"
#include "rmprice/money.hpp"
#include "rmprice/types.hpp"

namespace rmprice {

/// Sealed bid submitted to the market manager for one request.
struct Bid {
  ProviderId provider_id = 0;
  StrategyIndex strategy = 0;
  double omega = 0.0;
  Money price;
  Money serving_cost;
  Money theta;
  Money deploy_cost;
  bool feasible = false;

  friend bool operator==(const Bid&, const Bid&) = default;
};

/// Hosting cost of a request: tau times the summed hourly price of its VMs.
inline Money deployment_cost(double tau_hours, std::span<const VMModel> vms) {
  std::int64_t hourly = 0;
  for (const auto& vm : vms) hourly += vm.hour_cost.micros();
  return Money::from_micros(std::llround(tau_hours * static_cast<double>(hourly)));
}

inline Money deployment_cost(const Request& request, const VMAssignment& assignment) {
  if (assignment.size() != request.num_services())
    throw InvariantViolation("assignment does not cover every requested service");
  return deployment_cost(request.tau_hours, std::span<const VMModel>(assignment));
}

/// Largest omega whose price factor sqrt(w)(1 + gamma sqrt(w)) stays <= 1,
/// i.e. the square of the positive root of gamma x^2 + x - 1 = 0.
inline double omega_max(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma out of (0,1)");
  // 2 / (1 + sqrt(1 + 4 gamma)) is the cancellation-free form of the root.
  const double x = 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * gamma));
  return x * x;
}

/// sqrt(w)(1 + gamma sqrt(w)): the fraction of theta + c a bid asks for.
inline double price_factor(double omega, double gamma) {
  const double root = std::sqrt(omega);
  return root * (1.0 + gamma * root);
}

inline Money offered_price(double omega, double gamma, Money theta, Money deploy_cost) {
  const double upper = omega_max(gamma);
  if (!(omega > 0.0) || omega > upper * (1.0 + 1e-12))
    throw DomainError("omega outside (0, omega_max]");
  if (theta < Money{} || deploy_cost < Money{}) throw DomainError("theta and deploy cost must be >= 0");
  const double base = static_cast<double>((theta + deploy_cost).micros());
  return Money::from_micros(std::llround(price_factor(omega, gamma) * base));
}

inline Money serving_cost(double alpha, double beta, Money theta, Money deploy_cost) {
  if (alpha < 0.0 || beta < 0.0 || theta < Money{} || deploy_cost < Money{})
    throw DomainError("serving cost inputs must be non-negative");
  return Money::from_micros(std::llround(alpha * static_cast<double>(deploy_cost.micros()) +
                                         beta * static_cast<double>(theta.micros())));
}

/// Equally spaced omega values k * omega_max / size for k = 1..size.
inline std::vector<double> strategy_grid(double gamma, std::size_t size) {
  if (size < 2) throw DomainError("strategy grid needs at least two values");
  const double upper = omega_max(gamma);
  std::vector<double> grid(size);
  for (std::size_t k = 1; k <= size; ++k)
    grid[k - 1] = upper * static_cast<double>(k) / static_cast<double>(size);
  grid.back() = upper;
  return grid;
}

/// Winner's take is price minus serving cost; everyone else earns zero.
inline Money round_profit(std::span<const Bid> bids, std::optional<ProviderId> winner_id,
                          ProviderId provider_id) {
  for (const auto& bid : bids) {
    if (bid.provider_id != provider_id) continue;
    if (winner_id && *winner_id == provider_id) return bid.price - bid.serving_cost;
    return Money{};
  }
  throw DomainError("provider " + std::to_string(provider_id) + " has no bid this round");
}

struct ConstraintVerdict {
  bool feasible = true;
  std::string_view violated;  // empty when feasible

  explicit operator bool() const { return feasible; }
};

/// Checks price <= wtp, price <= theta + c, price > 0 and cost > 0, in that
/// order, reporting the first one that fails.
inline ConstraintVerdict check_constraints(Money price, Money wtp, Money theta, Money deploy_cost,
                                           Money cost) {
  if (price > wtp) return {false, "wtp"};
  if (price > theta + deploy_cost) return {false, "license-plus-deployment"};
  if (price <= Money{}) return {false, "positive-price"};
  if (cost <= Money{}) return {false, "positive-cost"};
  return {};
}

}  // namespace rmprice
