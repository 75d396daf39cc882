#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qarena/agents.hpp"
#include "qarena/factory.hpp"
#include "qarena/match.hpp"

namespace qarena {

struct RosterEntry {
  std::string name;
  AgentSpec spec;
};

// Throws "empty_roster" or "duplicate_agent".
void validate_roster(const std::vector<RosterEntry>& roster);

struct PairingStability {
  std::string p1;
  std::string p2;
  std::optional<int> stable_at;  // 1-based game index; empty when unstable
  int games_played = 0;
};

struct StabilityReport {
  std::vector<PairingStability> pairings;
  int n_trials = 0;
  bool any_unstable = false;
};

struct StabilityOptions {
  int n1 = 100;
  int window = 20;
  int tolerance = 1;
  int batch = 5;          // games per loss tally
  int cap_factor = 10;    // give up after cap_factor * n1 games
};

// First 1-based game g at which the loss tally of the batch starting at g stays
// within +-tolerance for every batch start in (g, g + window]. p1_losses holds
// one 0/1 entry per game. Empty when the sequence is too short or never settles.
std::optional<int> stability_index(const std::vector<int>& p1_losses, int window, int tolerance,
                                   int batch);

StabilityReport stability_trials(const std::vector<std::pair<RosterEntry, RosterEntry>>& pairings,
                                 GameId game, AgentFactory& factory, std::uint64_t seed,
                                 const StabilityOptions& options = {});

struct TournamentTable {
  GameId game = GameId::TicTacToe;
  int n_trials = 0;
  std::vector<std::string> names;
  // cells[i][j]: names[i] as P1 against names[j] as P2.
  std::vector<std::vector<MatchRecord>> cells;

  // 3 per win plus 1 per draw over the agent's P1 row.
  int points(std::size_t i) const;
  // Same scoring over both seats (P1 row plus P2 column).
  int points_both(std::size_t i) const;
};

int points(const std::vector<MatchRecord>& row);

// Every ordered pair including self-pairs, n_trials games each. Pairs run on
// up to `jobs` threads; each pair has its own derived seed, so the result does
// not depend on jobs.
TournamentTable round_robin(const std::vector<RosterEntry>& roster, GameId game, int n_trials,
                            AgentFactory& factory, std::uint64_t seed, int jobs = 1);

std::string render_text(const TournamentTable& table);
// p1,p2,n_games,p1_wins,draws,p1_losses
std::string render_csv(const TournamentTable& table);

}  // namespace qarena
