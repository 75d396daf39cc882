#include "qarena/factory.hpp"

#include "qarena/snapshot.hpp"

namespace qarena {

std::unique_ptr<Agent> AgentFactory::make(const AgentSpec& spec, GameId game, std::uint64_t seed) {
  switch (spec.kind) {
    case AgentKind::Random:
      return std::make_unique<RandomAgent>(seed);
    case AgentKind::MinMaxDet:
    case AgentKind::MinMaxNonDet:
      return std::make_unique<MinimaxAgent>(spec, game, seed, heuristic_);
    case AgentKind::QGreedy:
    case AgentKind::QPercent:
      return std::make_unique<QGreedyAgent>(table_for(spec, game), seed, spec);
    case AgentKind::QTwin:
      throw Error("bad_agent_spec", "q-twin is only available as a training teacher");
  }
  throw Error("bad_agent_spec", spec.to_string());
}

std::unique_ptr<Agent> AgentFactory::make_twin(std::shared_ptr<const QTable> table,
                                               std::uint64_t seed) {
  return std::make_unique<QGreedyAgent>(std::move(table), seed, AgentSpec::of(AgentKind::QTwin));
}

std::shared_ptr<const QTable> AgentFactory::table_for(const AgentSpec& spec, GameId game) {
  std::filesystem::path path;
  if (spec.kind == AgentKind::QGreedy) {
    path = spec.source;
  } else if (spec.kind == AgentKind::QPercent) {
    if (!std::filesystem::exists(std::filesystem::path(spec.source) / "manifest.txt")) {
      throw Error("snapshot_not_found", "no training run at '" + spec.source + "'");
    }
    path = resolve_percent(read_run(spec.source), spec.percent).path;
  } else {
    throw Error("bad_agent_spec", spec.to_string() + " has no table");
  }
  if (!std::filesystem::exists(path)) {
    throw Error("snapshot_not_found", "no snapshot at '" + path.string() + "'");
  }
  auto table = load_cached(path);
  if (table->game() != game) {
    throw Error("game_mismatch", path.string() + " holds a " + std::string(game_name(table->game())) +
                                     " table, not " + std::string(game_name(game)));
  }
  return table;
}

std::shared_ptr<const QTable> AgentFactory::load_cached(const std::filesystem::path& path) {
  const std::string key = std::filesystem::weakly_canonical(path).string();
  {
    std::lock_guard lock(mu_);
    if (auto it = tables_.find(key); it != tables_.end()) return it->second;
  }
  auto table = std::make_shared<const QTable>(load_snapshot(path));
  std::lock_guard lock(mu_);
  return tables_.try_emplace(key, std::move(table)).first->second;
}

}  // namespace qarena
