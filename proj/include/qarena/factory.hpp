#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "qarena/agents.hpp"
#include "qarena/qtable.hpp"

namespace qarena {

// Turns AgentSpecs into playable agents. Snapshot tables are loaded once and
// shared between all agents built from the same file. Thread-safe.
class AgentFactory {
 public:
  explicit AgentFactory(HeuristicWeights weights = {}) : heuristic_(weights) {}

  // q-twin cannot be built here: it needs the live training table (see make_twin).
  std::unique_ptr<Agent> make(const AgentSpec& spec, GameId game, std::uint64_t seed);

  static std::unique_ptr<Agent> make_twin(std::shared_ptr<const QTable> table, std::uint64_t seed);

  // Table behind a q: or q-pct: spec. Errors: "snapshot_not_found", "game_mismatch",
  // plus the snapshot and run errors.
  std::shared_ptr<const QTable> table_for(const AgentSpec& spec, GameId game);

  const Heuristic& heuristic() const { return heuristic_; }

 private:
  std::shared_ptr<const QTable> load_cached(const std::filesystem::path& path);

  Heuristic heuristic_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const QTable>> tables_;
};

}  // namespace qarena
