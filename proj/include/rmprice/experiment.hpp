#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rmprice/config.hpp"
#include "rmprice/economics.hpp"
#include "rmprice/errors.hpp"
#include "rmprice/market.hpp"
#include "rmprice/pricing.hpp"
#include "rmprice/simulator.hpp"

namespace rmprice {

inline constexpr const char* kRoundsHeader =
    "round,request_id,provider_id,omega,bid_price,feasible,winner_flag,profit,avg_regret";
inline constexpr const char* kProbsHeader = "round,provider_id,strategy_index,omega_value,probability";
inline constexpr const char* kInvestmentHeader = "round,provider_id,investment,delta_v_to_date";
inline constexpr const char* kRoiHeader =
    "provider_id,apps,roi_threshold,roi_rule_of_thumb,delta_v,recovery_round";
inline constexpr const char* kSummaryHeader =
    "technique,runs,profit_at_25,profit_at_50,profit_at_75,profit_at_100,mean_profit,"
    "converged_runs,converged_at,win_rate,delta_v";

// ---------------------------------------------------------------------------
// Audits

struct AuditReport {
  bool constraints = true;    // every feasible bid satisfies the request constraints
  bool one_winner = true;     // a single lowest feasible bidder collects, everyone else books 0
  bool ledger = true;         // V^q - V^0 equals the sum of profits
  bool counterfactual = true; // counterfactual at the played strategy equals the booked profit
  std::vector<std::string> failures;

  bool ok() const { return constraints && one_winner && ledger && counterfactual; }
};

inline AuditReport audit_game(const GameResult& game) {
  AuditReport report;
  auto fail = [&](bool& flag, const std::string& what) {
    if (flag) report.failures.push_back(what);
    flag = false;
  };
  for (const auto& rec : game.rounds) {
    const Request& req = game.requests.at(static_cast<std::size_t>(rec.round - 1));
    std::optional<Money> lowest;
    int payers = 0;
    for (const auto& a : rec.agents) {
      if (a.bid && a.bid->feasible) {
        const auto v = check_constraints(a.bid->price, req.willingness, a.bid->theta, a.bid->deploy_cost,
                                         a.bid->serving_cost);
        if (!v.feasible) fail(report.constraints, "round " + std::to_string(rec.round) + ": " + std::string(v.violated));
        if (!lowest || a.bid->price < *lowest) lowest = a.bid->price;
      }
      if (a.profit != Money{}) ++payers;
      if (a.bid && !a.counterfactual.empty() && a.counterfactual.at(a.bid->strategy) != a.profit)
        fail(report.counterfactual, "round " + std::to_string(rec.round) + ": counterfactual mismatch");
    }
    if (lowest.has_value() != rec.winner.has_value())
      fail(report.one_winner, "round " + std::to_string(rec.round) + ": winner presence mismatch");
    if (rec.winner) {
      const auto& w = rec.agents.at(*rec.winner);
      if (!w.bid || !w.bid->feasible || w.bid->price != *lowest)
        fail(report.one_winner, "round " + std::to_string(rec.round) + ": winner is not the lowest bid");
      else if (w.profit != w.bid->price - w.bid->serving_cost)
        fail(report.one_winner, "round " + std::to_string(rec.round) + ": winner profit mismatch");
    }
    for (std::size_t i = 0; i < rec.agents.size(); ++i)
      if ((!rec.winner || *rec.winner != i) && rec.agents[i].profit != Money{})
        fail(report.one_winner, "round " + std::to_string(rec.round) + ": loser booked a profit");
    if (payers > 1) fail(report.one_winner, "round " + std::to_string(rec.round) + ": several payers");
  }
  if (!InvestmentLedger::from_game(game).audit(game)) fail(report.ledger, "investment ledger mismatch");
  return report;
}

// ---------------------------------------------------------------------------
// Per-run metrics

/// Checkpoints q/4, q/2, 3q/4, q (1-based rounds; 25/50/75/100 when q = 100).
inline std::array<std::size_t, 4> checkpoints(std::size_t q) {
  return {std::max<std::size_t>(1, q / 4), std::max<std::size_t>(1, q / 2),
          std::max<std::size_t>(1, 3 * q / 4), std::max<std::size_t>(1, q)};
}

struct RunSummary {
  Technique technique = Technique::external;
  std::uint64_t seed = 0;
  std::array<double, 4> profit_at{};  // mean cumulative profit over providers at each checkpoint
  double mean_profit = 0.0;           // mean of the four checkpoints
  std::optional<int> converged_at;
  double win_rate = 0.0;  // share of rounds won by the most successful provider
  double delta_v = 0.0;   // mean over providers of V^q - V^0
  std::size_t rounds = 0;
  AuditReport audit;
};

inline double mean_cumulative_profit(const GameResult& game, std::size_t round) {
  if (game.rounds.empty() || game.n_providers() == 0) return 0.0;
  const std::size_t idx = std::min(round, game.rounds.size()) - 1;
  double total = 0.0;
  for (const auto& series : game.cumulative_profit) total += series.at(idx).dollars();
  return total / static_cast<double>(game.n_providers());
}

inline RunSummary summarize(const GameResult& game, std::uint64_t seed, std::size_t planned_rounds) {
  RunSummary s;
  s.technique = game.technique;
  s.seed = seed;
  s.rounds = game.rounds.size();
  s.converged_at = game.converged_at;
  if (!game.rounds.empty()) {
    const auto cps = checkpoints(planned_rounds);
    for (std::size_t k = 0; k < 4; ++k) s.profit_at[k] = mean_cumulative_profit(game, cps[k]);
    s.mean_profit = std::accumulate(s.profit_at.begin(), s.profit_at.end(), 0.0) / 4.0;
    const auto top = *std::max_element(game.wins.begin(), game.wins.end());
    s.win_rate = static_cast<double>(top) / static_cast<double>(game.rounds.size());
  }
  const auto ledger = InvestmentLedger::from_game(game);
  double dv = 0.0;
  for (const auto& p : ledger.providers()) dv += p.delta_v().dollars();
  if (!ledger.providers().empty()) dv /= static_cast<double>(ledger.providers().size());
  s.delta_v = dv;
  s.audit = audit_game(game);
  return s;
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_rounds_csv(const GameResult& game, std::ostream& out) {
  out << kRoundsHeader << '\n';
  for (const auto& rec : game.rounds)
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      const auto& a = rec.agents[i];
      if (!a.bid) continue;
      const bool won = rec.winner && *rec.winner == i;
      out << rec.round << ',' << rec.request_id << ',' << i << ',' << std::setprecision(10)
          << a.bid->omega << ',' << a.bid->price.str() << ',' << (a.bid->feasible ? 1 : 0) << ','
          << (won ? 1 : 0) << ',' << a.profit.str() << ',' << a.avg_regret.str() << '\n';
    }
}

inline void write_probs_csv(const GameResult& game, std::ostream& out) {
  out << kProbsHeader << '\n';
  out << std::setprecision(10);
  for (const auto& rec : game.rounds)
    for (std::size_t i = 0; i < rec.agents.size(); ++i) {
      const auto& probs = rec.agents[i].probs;
      for (std::size_t k = 0; k < probs.size(); ++k)
        out << rec.round << ',' << i << ',' << k << ',' << game.strategies.at(k) << ',' << probs[k]
            << '\n';
    }
}

inline void write_investment_csv(const GameResult& game, std::ostream& out) {
  out << kInvestmentHeader << '\n';
  const auto ledger = InvestmentLedger::from_game(game);
  for (std::size_t t = 0; t < game.rounds.size(); ++t)
    for (const auto& p : ledger.providers())
      out << game.rounds[t].round << ',' << p.provider_id << ',' << p.series[t].str() << ','
          << (p.series[t] - p.initial).str() << '\n';
}

inline void write_roi_csv(const GameResult& game, const MarketConfig& config, std::ostream& out) {
  out << kRoiHeader << '\n';
  const auto ledger = InvestmentLedger::from_game(game);
  const auto n = game.n_providers();
  for (std::size_t i = 0; i < n; ++i) {
    const auto apps = game.providers[i].applications.size();
    const auto& st = game.final_states.at(i);
    const auto& inv = ledger.at(i);
    out << i << ',' << apps << ','
        << roi_threshold(apps, n, st.strategies(), st.probs(), config.gamma) << ','
        << roi_rule_of_thumb(apps, n) << ',' << inv.delta_v().str() << ',';
    if (inv.recovery_round) out << *inv.recovery_round;
    out << '\n';
  }
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << body;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

}  // namespace detail

inline std::string run_dir_name(Technique t, std::uint64_t seed) {
  return std::string(to_string(t)) + "_seed" + std::to_string(seed);
}

/// Runs one (technique, seed) cell and, if `out_dir` is non-empty, writes its CSVs.
inline RunSummary run_single(const ExperimentSpec& spec, Technique technique, std::uint64_t seed,
                             const std::filesystem::path& out_dir) {
  MarketConfig config = spec.base;
  config.technique = technique;
  config.seed = seed;
  const GameResult game = run_game(config, spec.catalog);
  RunSummary summary = summarize(game, seed, static_cast<std::size_t>(config.n_requests));
  if (!out_dir.empty()) {
    const auto dir = out_dir / run_dir_name(technique, seed);
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "rounds.csv", detail::render([&](auto& o) { write_rounds_csv(game, o); }));
    detail::write_file(dir / "probs.csv", detail::render([&](auto& o) { write_probs_csv(game, o); }));
    detail::write_file(dir / "investment.csv",
                       detail::render([&](auto& o) { write_investment_csv(game, o); }));
    detail::write_file(dir / "roi.csv", detail::render([&](auto& o) { write_roi_csv(game, config, o); }));
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Aggregation

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};

inline Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct TechniqueRow {
  Technique technique = Technique::external;
  std::size_t runs = 0;
  std::array<Stat, 4> profit_at{};
  Stat mean_profit;
  Stat converged_at;  // over the runs that converged
  Stat win_rate;
  Stat delta_v;
};

/// One row per technique, in first-seen order.
inline std::vector<TechniqueRow> aggregate(const std::vector<RunSummary>& runs) {
  std::vector<Technique> order;
  for (const auto& r : runs)
    if (std::find(order.begin(), order.end(), r.technique) == order.end()) order.push_back(r.technique);
  std::vector<TechniqueRow> rows;
  for (Technique t : order) {
    TechniqueRow row;
    row.technique = t;
    std::array<std::vector<double>, 4> at;
    std::vector<double> mean, conv, win, dv;
    for (const auto& r : runs) {
      if (r.technique != t) continue;
      ++row.runs;
      for (std::size_t k = 0; k < 4; ++k) at[k].push_back(r.profit_at[k]);
      mean.push_back(r.mean_profit);
      if (r.converged_at) conv.push_back(*r.converged_at);
      win.push_back(r.win_rate);
      dv.push_back(r.delta_v);
    }
    for (std::size_t k = 0; k < 4; ++k) row.profit_at[k] = stat_of(at[k]);
    row.mean_profit = stat_of(mean);
    row.converged_at = stat_of(conv);
    row.win_rate = stat_of(win);
    row.delta_v = stat_of(dv);
    rows.push_back(row);
  }
  return rows;
}

inline void write_summary_csv(const std::vector<RunSummary>& runs, std::ostream& out) {
  out << kSummaryHeader << '\n' << std::fixed << std::setprecision(6);
  for (const auto& row : aggregate(runs)) {
    out << to_string(row.technique) << ',' << row.runs;
    for (const auto& s : row.profit_at) out << ',' << s.mean;
    out << ',' << row.mean_profit.mean << ',' << row.converged_at.n << ',';
    if (row.converged_at.n) out << row.converged_at.mean;
    out << ',' << row.win_rate.mean << ',' << row.delta_v.mean << '\n';
  }
}

/// Aligned text table, one row per technique; cells are mean or mean ± sd.
/// Returns false (after printing "no runs") when there is nothing to show.
inline bool emit_summary(const std::vector<RunSummary>& runs, std::ostream& out) {
  if (runs.empty()) {
    out << "no runs\n";
    return false;
  }
  const auto cell = [](const Stat& s, int precision) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(precision);
    if (s.n == 0) return std::string("-");
    o << s.mean;
    if (s.n > 1) o << " ± " << s.sd;
    return o.str();
  };
  const std::vector<std::string> header{"technique",  "runs",          "profit_at_25", "profit_at_50",
                                        "profit_at_75", "profit_at_100", "mean_profit",  "converged_at",
                                        "win_rate",   "delta_v"};
  std::vector<std::vector<std::string>> table{header};
  for (const auto& row : aggregate(runs)) {
    std::vector<std::string> line{std::string(to_string(row.technique)), std::to_string(row.runs)};
    for (const auto& s : row.profit_at) line.push_back(cell(s, 2));
    line.push_back(cell(row.mean_profit, 2));
    line.push_back(cell(row.converged_at, 1));
    line.push_back(cell(row.win_rate, 3));
    line.push_back(cell(row.delta_v, 2));
    table.push_back(std::move(line));
  }
  // "±" is two bytes but one column wide.
  const auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], width(line[c]));
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      const std::string pad(widths[c] - width(line[c]), ' ');
      out << (c == 0 ? line[c] + pad : "  " + pad + line[c]);
    }
    out << '\n';
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sweeps

struct ExperimentOutcome {
  std::vector<RunSummary> runs;  // technique-major, seeds in spec order
  std::vector<std::string> errors;

  bool ok() const {
    return errors.empty() && !runs.empty() &&
           std::all_of(runs.begin(), runs.end(), [](const RunSummary& r) { return r.audit.ok(); });
  }
};

/// Runs every (technique, seed) cell on up to `spec.workers` threads and
/// writes per-run CSVs plus summary.csv under `spec.out_dir` (if set).
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const std::filesystem::path out_dir = spec.out_dir;
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());
  }

  struct Job {
    Technique technique;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Technique t : spec.techniques)
    for (std::uint64_t s : spec.seeds) jobs.push_back({t, s});

  std::vector<std::optional<RunSummary>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        results[j] = run_single(spec, jobs[j].technique, jobs[j].seed, out_dir);
      } catch (const std::exception& e) {
        errors[j] = run_dir_name(jobs[j].technique, jobs[j].seed) + ": " + e.what();
      }
    }
  };
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), jobs.size());
  if (k <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < k; ++w) pool.emplace_back(worker);
  }

  ExperimentOutcome outcome;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (results[j]) outcome.runs.push_back(std::move(*results[j]));
    if (!errors[j].empty()) outcome.errors.push_back(errors[j]);
  }
  if (!out_dir.empty() && !outcome.runs.empty())
    detail::write_file(out_dir / "summary.csv",
                       detail::render([&](auto& o) { write_summary_csv(outcome.runs, o); }));
  return outcome;
}

}  // namespace rmprice
