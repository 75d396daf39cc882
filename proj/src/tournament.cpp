#include "qarena/tournament.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace qarena {

void validate_roster(const std::vector<RosterEntry>& roster) {
  if (roster.empty()) throw Error("empty_roster", "the roster has no agents");
  std::set<std::string> seen;
  for (const auto& entry : roster) {
    if (entry.name.empty()) throw Error("bad_roster", "agent without a name");
    if (!seen.insert(entry.name).second) throw Error("duplicate_agent", entry.name);
  }
}

std::optional<int> stability_index(const std::vector<int>& p1_losses, int window, int tolerance,
                                   int batch) {
  const int n = static_cast<int>(p1_losses.size());
  // tally[g] = losses in games g .. g + batch - 1 (0-based start)
  const int starts = n - batch + 1;
  if (starts <= 0) return std::nullopt;
  std::vector<int> tally(starts);
  int sum = 0;
  for (int i = 0; i < batch; ++i) sum += p1_losses[i];
  tally[0] = sum;
  for (int g = 1; g < starts; ++g) {
    sum += p1_losses[g + batch - 1] - p1_losses[g - 1];
    tally[g] = sum;
  }
  for (int g = 0; g + window < starts; ++g) {
    bool stable = true;
    for (int h = g + 1; h <= g + window; ++h) {
      if (std::abs(tally[h] - tally[g]) > tolerance) {
        stable = false;
        break;
      }
    }
    if (stable) return g + 1;
  }
  return std::nullopt;
}

StabilityReport stability_trials(const std::vector<std::pair<RosterEntry, RosterEntry>>& pairings,
                                 GameId game, AgentFactory& factory, std::uint64_t seed,
                                 const StabilityOptions& options) {
  if (pairings.empty()) throw Error("empty_roster", "no pairings to measure");
  StabilityReport report;
  report.n_trials = options.n1;
  const int cap = options.cap_factor * options.n1;
  for (std::size_t k = 0; k < pairings.size(); ++k) {
    const auto& [a, b] = pairings[k];
    const std::uint64_t pair_seed = Rng::derive_seed(seed, k);
    auto p1 = factory.make(a.spec, game, Rng::derive_seed(pair_seed, 1));
    auto p2 = factory.make(b.spec, game, Rng::derive_seed(pair_seed, 2));
    PairingStability result{a.name, b.name, std::nullopt, 0};
    std::vector<int> losses;
    // The earliest decision needs window + batch games past the candidate.
    const int first_check = options.window + options.batch;
    while (static_cast<int>(losses.size()) < cap) {
      const Outcome o = play_game(game, *p1, *p2);
      losses.push_back(o.winner == Player::P2 ? 1 : 0);
      const int n = static_cast<int>(losses.size());
      if (n < first_check) continue;
      if (auto g = stability_index(losses, options.window, options.tolerance, options.batch)) {
        result.stable_at = *g;
        break;
      }
    }
    result.games_played = static_cast<int>(losses.size());
    if (result.stable_at) {
      report.n_trials = std::max(report.n_trials, *result.stable_at);
    } else {
      report.any_unstable = true;
    }
    report.pairings.push_back(std::move(result));
  }
  return report;
}

int points(const std::vector<MatchRecord>& row) {
  int total = 0;
  for (const auto& r : row) total += 3 * r.p1_wins + r.draws;
  return total;
}

int TournamentTable::points(std::size_t i) const { return qarena::points(cells.at(i)); }

int TournamentTable::points_both(std::size_t i) const {
  int total = points(i);
  for (const auto& row : cells) total += 3 * row.at(i).p1_losses + row.at(i).draws;
  return total;
}

TournamentTable round_robin(const std::vector<RosterEntry>& roster, GameId game, int n_trials,
                            AgentFactory& factory, std::uint64_t seed, int jobs) {
  validate_roster(roster);
  if (n_trials < 1) throw Error("invalid_config", "n_trials must be >= 1");
  const std::size_t k = roster.size();
  TournamentTable table;
  table.game = game;
  table.n_trials = n_trials;
  for (const auto& e : roster) table.names.push_back(e.name);
  table.cells.assign(k, std::vector<MatchRecord>(k));

  // Build every agent up front so resolution errors surface before any game.
  std::vector<std::unique_ptr<Agent>> prototypes;
  for (const auto& e : roster) prototypes.push_back(factory.make(e.spec, game, seed));

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= k * k) return;
      const std::size_t i = idx / k;
      const std::size_t j = idx % k;
      try {
        const std::uint64_t pair_seed = Rng::derive_seed(seed, idx);
        auto p1 = prototypes[i]->clone(Rng::derive_seed(pair_seed, 1));
        auto p2 = prototypes[j]->clone(Rng::derive_seed(pair_seed, 2));
        MatchRecord record;
        record.p1 = roster[i].name;
        record.p2 = roster[j].name;
        for (int g = 0; g < n_trials; ++g) record.add(play_game(game, *p1, *p2));
        table.cells[i][j] = record;
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(k * k));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return table;
}

std::string render_text(const TournamentTable& table) {
  std::size_t width = 5;
  for (const auto& n : table.names) width = std::max(width, n.size());
  for (const auto& row : table.cells) {
    for (const auto& c : row) width = std::max(width, cell_text(c).size());
  }
  width += 2;
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "P1/P2";
  for (const auto& n : table.names) out << std::setw(static_cast<int>(width)) << n;
  out << std::setw(8) << "points" << "points(both seats)\n";
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    out << std::setw(static_cast<int>(width)) << table.names[i];
    for (const auto& c : table.cells[i]) out << std::setw(static_cast<int>(width)) << cell_text(c);
    out << std::setw(8) << table.points(i) << table.points_both(i) << '\n';
  }
  return out.str();
}

std::string render_csv(const TournamentTable& table) {
  std::ostringstream out;
  out << "p1,p2,n_games,p1_wins,draws,p1_losses\n";
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    for (std::size_t j = 0; j < table.names.size(); ++j) {
      const auto& c = table.cells[i][j];
      out << table.names[i] << ',' << table.names[j] << ',' << c.n_games << ',' << c.p1_wins << ','
          << c.draws << ',' << c.p1_losses << '\n';
    }
  }
  return out.str();
}

}  // namespace qarena
