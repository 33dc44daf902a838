#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rmprice/errors.hpp"
#include "rmprice/money.hpp"
#include "rmprice/pricing.hpp"
#include "rmprice/rng.hpp"
#include "rmprice/types.hpp"

namespace rmprice {

enum class Technique { external, internal, swap, hmc_baseline, non_competition, random };

inline constexpr std::array kAllTechniques{Technique::external,     Technique::internal,
                                           Technique::swap,         Technique::hmc_baseline,
                                           Technique::non_competition, Technique::random};

inline std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::external: return "external";
    case Technique::internal: return "internal";
    case Technique::swap: return "swap";
    case Technique::hmc_baseline: return "hmc-baseline";
    case Technique::non_competition: return "non-competition";
    case Technique::random: return "random";
  }
  return "?";
}

inline std::optional<Technique> parse_technique(std::string_view name) {
  for (auto t : kAllTechniques)
    if (to_string(t) == name) return t;
  return std::nullopt;
}

/// True for the techniques that adapt their strategy distribution.
inline bool is_learning(Technique t) {
  return t == Technique::external || t == Technique::internal || t == Technique::swap ||
         t == Technique::hmc_baseline;
}

/// How probability movement inside the equilibrium window is measured.
enum class StabilityMeasure {
  step,   // largest single-round change |p^t - p^{t-1}|
  drift,  // max - min over the window
};

/// How the market manager settles equal lowest prices.
enum class TieBreak { random_priority, lowest_id };

/// Denominator of the per-pair average regret. `rounds` divides the pair's
/// regret sum by every round the agent has played (rounds where the pair did
/// not occur contribute zero); `occurrences` divides by the pair's own count.
enum class RegretAveraging { rounds, occurrences };

template <class T>
struct Range {
  T lo{};
  T hi{};

  bool contains(T v) const { return lo <= v && v <= hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

struct MarketConfig {
  int n_providers = 5;
  int n_requests = 100;
  Range<int> apps_per_provider{10, 100};
  int app_catalog_size = 0;  // 0: use apps_per_provider.hi
  Range<int> vms_per_provider{100, 1000};
  Range<int> services_per_app{1, 5};
  double gamma = 0.95;
  int omega_grid_size = 10;
  Range<double> wtp_multiplier{1.0, 1.5};
  Range<double> tau_hours{1.0, 100.0};
  Range<double> alpha{0.05, 0.3};
  Range<double> beta{0.05, 0.3};
  Range<double> investment{12000.0, 17000.0};
  Technique technique = Technique::external;
  std::uint64_t seed = 1;
  double equilibrium_eps = 1e-3;
  int equilibrium_window = 50;
  StabilityMeasure equilibrium_measure = StabilityMeasure::step;
  double r_max_floor = 1e-6;
  bool symmetric_providers = false;
  bool strict_information = false;
  bool stop_at_equilibrium = false;
  TieBreak tie_break = TieBreak::random_priority;
  RegretAveraging regret_averaging = RegretAveraging::rounds;

  int catalog_size() const {
    return app_catalog_size > 0 ? app_catalog_size : apps_per_provider.hi;
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    auto range_ok = [&](const auto& r, std::string_view name) {
      if (!(r.lo <= r.hi)) fail(std::string(name) + ": empty range (lo > hi)");
    };
    if (n_providers < 2) fail("n_providers must be >= 2");
    if (n_requests < 0) fail("n_requests must be >= 0");
    range_ok(apps_per_provider, "apps_per_provider");
    range_ok(vms_per_provider, "vms_per_provider");
    range_ok(services_per_app, "services_per_app");
    range_ok(wtp_multiplier, "wtp_multiplier");
    range_ok(tau_hours, "tau_hours");
    range_ok(alpha, "alpha");
    range_ok(beta, "beta");
    range_ok(investment, "investment");
    if (apps_per_provider.lo < 1) fail("apps_per_provider must be >= 1");
    if (catalog_size() < apps_per_provider.hi)
      fail("app_catalog_size smaller than apps_per_provider upper bound");
    if (vms_per_provider.lo < 1) fail("vms_per_provider must be >= 1");
    if (services_per_app.lo < 1) fail("services_per_app must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma out of (0,1)");
    if (omega_grid_size < 2) fail("omega_grid_size must be >= 2");
    if (wtp_multiplier.lo < 1.0) fail("wtp_multiplier lower bound must be >= 1");
    if (!(tau_hours.lo > 0.0)) fail("tau_hours must be > 0");
    if (alpha.lo < 0.0 || alpha.hi > 1.0) fail("alpha range must lie in [0,1]");
    if (beta.lo < 0.0 || beta.hi > 1.0) fail("beta range must lie in [0,1]");
    if (investment.lo < 0.0) fail("investment must be >= 0");
    if (!(equilibrium_eps > 0.0)) fail("equilibrium_eps must be > 0");
    if (equilibrium_window < 1) fail("equilibrium_window must be >= 1");
    if (!(r_max_floor > 0.0)) fail("r_max_floor must be > 0");
  }
};

// ---------------------------------------------------------------------------
// VM catalog

/// Amazon EC2 on-demand SKUs, December 2015.
inline std::vector<VMModel> default_vm_catalog() {
  auto usd = [](std::int64_t micros) { return Money::from_micros(micros); };
  return {
      {"t2.small", 1, 2.0, 4.0, usd(26'000)},   {"t2.medium", 2, 4.0, 4.0, usd(52'000)},
      {"m3.medium", 1, 3.75, 4.0, usd(70'000)}, {"c3.large", 2, 3.75, 32.0, usd(105'000)},
      {"m3.large", 2, 7.5, 32.0, usd(140'000)}, {"R3.large", 2, 15.0, 32.0, usd(175'000)},
  };
}

/// On-premise and online license prices used as the theta population.
inline constexpr std::array<std::int64_t, 10> kLicensePricesUsd{4922, 983, 787, 342, 236,
                                                                79,   150, 65,  30,  15};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

inline bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

}  // namespace detail

/// Parses a VM catalog in CSV form:
///
///     # comment
///     type_label, cores, memory_gb, storage_gb, hour_cost
///     t2.small,   1,     2,         4,          0.026
///
/// The header row is optional. Parse failures raise ConfigError naming the
/// line and field; semantically invalid rows raise ValidationError.
inline std::vector<VMModel> load_vm_catalog(std::string_view document) {
  static constexpr std::array<std::string_view, 5> kFields{"type_label", "cores", "memory_gb",
                                                           "storage_gb", "hour_cost"};
  std::vector<VMModel> catalog;
  std::istringstream in{std::string(document)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto cells = detail::split(body, ',');
    if (cells.size() == kFields.size() && cells[0] == kFields[0] && cells[1] == kFields[1]) continue;
    auto where = [&](std::size_t field) {
      return "vm catalog line " + std::to_string(lineno) + ", field '" +
             std::string(kFields[field]) + "'";
    };
    if (cells.size() != kFields.size())
      throw ConfigError("vm catalog line " + std::to_string(lineno) + ": expected 5 fields, got " +
                        std::to_string(cells.size()));
    VMModel vm;
    vm.type_label = cells[0];
    if (vm.type_label.empty()) throw ConfigError(where(0) + ": empty");
    long long cores = 0;
    if (!detail::parse_int(cells[1], cores)) throw ConfigError(where(1) + ": not an integer");
    vm.cores = static_cast<int>(cores);
    if (!detail::parse_double(cells[2], vm.memory_gb)) throw ConfigError(where(2) + ": not a number");
    if (!detail::parse_double(cells[3], vm.storage_gb)) throw ConfigError(where(3) + ": not a number");
    if (!Money::parse(cells[4], vm.hour_cost)) throw ConfigError(where(4) + ": not a decimal amount");
    try {
      vm.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("vm catalog line " + std::to_string(lineno) + ": " + e.what());
    }
    catalog.push_back(std::move(vm));
  }
  if (catalog.empty()) throw ValidationError("vm catalog is empty");
  return catalog;
}

// ---------------------------------------------------------------------------
// VM selection

/// Cheapest pool SKU hosting each service; equal prices go to the lower
/// catalog index. Returns nullopt when the provider does not offer the app or
/// some service fits no VM it owns.
inline std::optional<VMAssignment> select_vms(const ProviderProfile& provider,
                                              const Request& request) {
  if (provider.find_app(request.app_id) == nullptr) return std::nullopt;
  VMAssignment assignment;
  assignment.reserve(request.services.size());
  for (const auto& need : request.services) {
    const PoolEntry* best = nullptr;
    for (const auto& entry : provider.vm_pool) {
      if (entry.count <= 0 || !need.hosted_by(entry.model)) continue;
      if (best == nullptr || entry.model.hour_cost < best->model.hour_cost ||
          (entry.model.hour_cost == best->model.hour_cost &&
           entry.catalog_index < best->catalog_index))
        best = &entry;
    }
    if (best == nullptr) return std::nullopt;
    assignment.push_back(best->model);
  }
  return assignment;
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

struct CatalogApp {
  AppId id = 0;
  std::vector<ServiceRequirement> services;
  Money theta;
  int tenants = 0;
};

inline ServiceRequirement requirement_of(const VMModel& vm) {
  return {vm.cores, vm.memory_gb, vm.storage_gb};
}

inline ProviderProfile generate_provider(ProviderId id, const MarketConfig& config,
                                         const std::vector<VMModel>& catalog,
                                         const std::vector<CatalogApp>& apps, Rng& rng) {
  ProviderProfile p;
  p.provider_id = id;

  const int pool_count = uniform_int(rng, config.vms_per_provider.lo, config.vms_per_provider.hi);
  std::vector<int> counts(catalog.size(), 0);
  int remaining = pool_count;
  // Seed one of each SKU so every catalog requirement stays hostable.
  if (pool_count >= static_cast<int>(catalog.size())) {
    std::fill(counts.begin(), counts.end(), 1);
    remaining -= static_cast<int>(catalog.size());
  }
  for (int k = 0; k < remaining; ++k) ++counts[uniform_index(rng, catalog.size())];
  for (std::size_t k = 0; k < catalog.size(); ++k)
    if (counts[k] > 0) p.vm_pool.push_back({k, catalog[k], counts[k]});

  const int want = uniform_int(rng, config.apps_per_provider.lo, config.apps_per_provider.hi);
  std::vector<std::size_t> order(apps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < static_cast<std::size_t>(want); ++k)
    std::swap(order[k], order[k + uniform_index(rng, order.size() - k)]);
  order.resize(static_cast<std::size_t>(want));
  std::sort(order.begin(), order.end());

  for (auto idx : order) {
    const auto& src = apps[idx];
    Application app;
    app.app_id = src.id;
    app.services = src.services;
    app.theta = src.theta;
    app.tenants = src.tenants;
    app.alpha = uniform_real(rng, config.alpha.lo, config.alpha.hi);
    app.beta = uniform_real(rng, config.beta.lo, config.beta.hi);
    p.applications.push_back(std::move(app));
  }
  p.initial_investment =
      Money::from_dollars(std::round(uniform_real(rng, config.investment.lo, config.investment.hi) * 100.0) / 100.0);
  return p;
}

}  // namespace detail

/// Draws the provider population for a run. Applications come from a shared
/// catalog (same id means same product, license price and services); each
/// provider offers a random subset with its own benefit coefficients.
inline std::vector<ProviderProfile> generate_market(const MarketConfig& config,
                                                    const std::vector<VMModel>& catalog) {
  config.validate();
  if (catalog.empty()) throw ConfigError("vm catalog is empty");
  for (const auto& vm : catalog) vm.validate();

  Rng rng = make_rng(config.seed, stream::kMarket);

  std::vector<detail::CatalogApp> apps(static_cast<std::size_t>(config.catalog_size()));
  for (std::size_t k = 0; k < apps.size(); ++k) {
    auto& app = apps[k];
    app.id = static_cast<AppId>(k + 1);
    const int mu = uniform_int(rng, config.services_per_app.lo, config.services_per_app.hi);
    for (int s = 0; s < mu; ++s)
      app.services.push_back(detail::requirement_of(catalog[uniform_index(rng, catalog.size())]));
    app.theta = Money::from_micros(kLicensePricesUsd[uniform_index(rng, kLicensePricesUsd.size())] *
                                   Money::kMicrosPerDollar);
    app.tenants = uniform_int(rng, 0, 20);
  }

  std::vector<ProviderProfile> providers;
  providers.reserve(static_cast<std::size_t>(config.n_providers));
  if (config.symmetric_providers) {
    const auto prototype = detail::generate_provider(0, config, catalog, apps, rng);
    for (int i = 0; i < config.n_providers; ++i) {
      providers.push_back(prototype);
      providers.back().provider_id = static_cast<ProviderId>(i);
    }
  } else {
    for (int i = 0; i < config.n_providers; ++i)
      providers.push_back(
          detail::generate_provider(static_cast<ProviderId>(i), config, catalog, apps, rng));
  }
  return providers;
}

/// Emits the request stream. App ids are uniform over every app some
/// provider can serve; willingness to pay is (theta + c) times a multiplier
/// drawn from `wtp_multiplier`, with c the cheapest deployment any offering
/// provider can achieve.
inline std::vector<Request> generate_requests(const MarketConfig& config,
                                              const std::vector<ProviderProfile>& providers) {
  config.validate();
  if (providers.empty()) throw ConfigError("no providers to generate requests for");

  struct Servable {
    AppId id;
    const Application* app;
  };
  std::vector<Servable> servable;
  for (const auto& p : providers)
    for (const auto& app : p.applications) {
      const bool seen = std::any_of(servable.begin(), servable.end(),
                                    [&](const Servable& s) { return s.id == app.app_id; });
      if (seen) continue;
      Request probe;
      probe.app_id = app.app_id;
      probe.services = app.services;
      const bool hostable = std::any_of(providers.begin(), providers.end(), [&](const auto& q) {
        return select_vms(q, probe).has_value();
      });
      if (hostable) servable.push_back({app.app_id, &app});
    }
  std::sort(servable.begin(), servable.end(),
            [](const Servable& a, const Servable& b) { return a.id < b.id; });
  if (servable.empty() && config.n_requests > 0)
    throw ConfigError("no application in the market can be served");

  Rng rng = make_rng(config.seed, stream::kRequests);
  std::vector<Request> requests;
  requests.reserve(static_cast<std::size_t>(config.n_requests));
  for (int r = 0; r < config.n_requests; ++r) {
    const auto& pick = servable[uniform_index(rng, servable.size())];
    Request req;
    req.id = static_cast<RequestId>(r);
    req.app_id = pick.id;
    req.services = pick.app->services;
    req.tau_hours = uniform_real(rng, config.tau_hours.lo, config.tau_hours.hi);

    std::optional<Money> cheapest;
    for (const auto& p : providers)
      if (auto vms = select_vms(p, req)) {
        const Money c = deployment_cost(req, *vms);
        if (!cheapest || c < *cheapest) cheapest = c;
      }
    const double multiplier = uniform_real(rng, config.wtp_multiplier.lo, config.wtp_multiplier.hi);
    const auto base = static_cast<long double>((pick.app->theta + *cheapest).micros());
    req.willingness = Money::from_micros(static_cast<std::int64_t>(std::ceil(base * multiplier)));
    requests.push_back(std::move(req));
  }
  return requests;
}

}  // namespace rmprice
