#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rmprice/errors.hpp"
#include "rmprice/money.hpp"

namespace rmprice {

using ProviderId = std::size_t;
using AppId = std::uint32_t;
using RequestId = std::uint64_t;
using StrategyIndex = std::size_t;

/// A virtual-machine SKU: capacity plus hourly price.
struct VMModel {
  std::string type_label;
  int cores = 1;
  double memory_gb = 0.0;
  double storage_gb = 0.0;
  Money hour_cost;

  void validate() const {
    if (cores < 1) throw ValidationError("vm '" + type_label + "': cores must be >= 1");
    if (!(memory_gb > 0.0)) throw ValidationError("vm '" + type_label + "': memory_gb must be > 0");
    if (!(storage_gb > 0.0)) throw ValidationError("vm '" + type_label + "': storage_gb must be > 0");
    if (hour_cost <= Money{}) throw ValidationError("vm '" + type_label + "': hour_cost must be > 0");
  }

  friend bool operator==(const VMModel&, const VMModel&) = default;
};

/// Capacity a single application service needs from its host VM.
struct ServiceRequirement {
  int cores = 1;
  double memory_gb = 0.0;
  double storage_gb = 0.0;

  bool hosted_by(const VMModel& vm) const {
    return vm.cores >= cores && vm.memory_gb >= memory_gb && vm.storage_gb >= storage_gb;
  }

  friend bool operator==(const ServiceRequirement&, const ServiceRequirement&) = default;
};

/// A SaaS application as offered by one provider.
///
/// `alpha` weights the deployment cost and `beta` the license price in the
/// serving cost. `tenants` is carried for completeness; no pricing formula
/// reads it.
struct Application {
  AppId app_id = 0;
  std::vector<ServiceRequirement> services;
  Money theta;
  int tenants = 0;
  double alpha = 0.0;
  double beta = 0.0;

  std::size_t num_services() const { return services.size(); }

  void validate() const {
    const std::string where = "app " + std::to_string(app_id);
    if (services.empty()) throw ValidationError(where + ": needs at least one service");
    if (theta <= Money{}) throw ValidationError(where + ": theta must be > 0");
    if (tenants < 0) throw ValidationError(where + ": tenants must be >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError(where + ": alpha outside [0,1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError(where + ": beta outside [0,1]");
  }

  friend bool operator==(const Application&, const Application&) = default;
};

/// A user demand dispatched to every provider.
struct Request {
  RequestId id = 0;
  AppId app_id = 0;
  double tau_hours = 0.0;
  Money willingness;
  std::vector<ServiceRequirement> services;

  std::size_t num_services() const { return services.size(); }

  friend bool operator==(const Request&, const Request&) = default;
};

/// Hosts chosen for a request's services, one per service, in order.
using VMAssignment = std::vector<VMModel>;

/// Count of one SKU held by a provider.
struct PoolEntry {
  std::size_t catalog_index = 0;
  VMModel model;
  int count = 0;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

struct ProviderProfile {
  ProviderId provider_id = 0;
  std::vector<PoolEntry> vm_pool;  // sorted by catalog_index
  std::vector<Application> applications;
  Money initial_investment;

  const Application* find_app(AppId id) const {
    for (const auto& app : applications)
      if (app.app_id == id) return &app;
    return nullptr;
  }

  int pool_size() const {
    int n = 0;
    for (const auto& e : vm_pool) n += e.count;
    return n;
  }

  friend bool operator==(const ProviderProfile&, const ProviderProfile&) = default;
};

}  // namespace rmprice
