#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "qarena/factory.hpp"
#include "qarena/game.hpp"

namespace qarena {

// Failure carrying the HTTP status the API should answer with.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& detail,
               std::vector<std::string> legal = {})
      : Error(std::move(code), detail), status_(status), legal_(std::move(legal)) {}
  int status() const { return status_; }
  const std::vector<std::string>& legal_actions() const { return legal_; }

 private:
  int status_;
  std::vector<std::string> legal_;
};

struct CatalogEntry {
  std::string id;  // what clients send as "agent"
  GameId game;
  AgentSpec spec;
  std::string label;
  std::optional<double> percent;
};

struct ServiceOptions {
  std::chrono::seconds idle_timeout{24 * 60 * 60};
  std::uint64_t seed = 42;
  std::function<std::chrono::steady_clock::time_point()> clock = [] {
    return std::chrono::steady_clock::now();
  };
};

// Live human-vs-agent matches. All public methods are safe to call
// concurrently; calls on one session are serialized.
class PlayService {
 public:
  // snapshot_dir may be empty (built-in agents only). Runs found below it are
  // offered as percent agents Q-<T|N|M>-10 ... Q-<T|N|M>-100.
  PlayService(std::filesystem::path snapshot_dir, AgentFactory& factory,
              ServiceOptions options = {});

  nlohmann::json list_agents() const;
  nlohmann::json list_games() const;
  nlohmann::json create_match(const nlohmann::json& body);
  nlohmann::json get_state(const std::string& id);
  nlohmann::json post_move(const std::string& id, const nlohmann::json& body);

  std::size_t session_count() const;
  std::size_t evict_idle();

  const std::vector<CatalogEntry>& catalog() const { return catalog_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Move {
    Player player;
    bool by_human;
    Action action;
  };
  struct Session {
    std::mutex mu;
    std::string id;
    GameId game;
    Player human;
    std::string agent_id;
    std::unique_ptr<Agent> agent;
    GameState state;
    std::vector<Move> history;
    std::chrono::steady_clock::time_point last_access;
  };

  void scan_snapshots(const std::filesystem::path& dir);
  AgentSpec resolve_agent(const std::string& agent, GameId game) const;
  std::shared_ptr<Session> find(const std::string& id);
  // Plays agent moves until the human is to move or the game ends; returns
  // the number of moves made.
  std::size_t advance(Session& s);
  nlohmann::json session_json(const Session& s) const;
  std::string new_id();

  AgentFactory& factory_;
  ServiceOptions options_;
  std::vector<CatalogEntry> catalog_;
  std::vector<std::string> warnings_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mu_;
  Rng id_rng_;
  std::uint64_t created_ = 0;
};

}  // namespace qarena
