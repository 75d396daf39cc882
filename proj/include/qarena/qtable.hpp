#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "qarena/game.hpp"

namespace qarena {

inline constexpr double kDefaultAlpha = 0.4;
inline constexpr double kDefaultGamma = 0.9;

// Learned action values. Each visited state stores one value per legal
// action, aligned to the canonical legal_actions order. Unvisited states and
// actions read as 0.
class QTable {
 public:
  using Entries = std::unordered_map<StateKey, std::vector<double>, StateKeyHash>;

  explicit QTable(GameId game, double alpha = kDefaultAlpha, double gamma = kDefaultGamma)
      : game_(game), alpha_(alpha), gamma_(gamma) {}

  GameId game() const { return game_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double epsilon) { epsilon_ = epsilon; }
  std::uint64_t episodes_trained() const { return episodes_; }
  void set_episodes_trained(std::uint64_t n) { episodes_ = n; }

  std::size_t size() const { return entries_.size(); }
  const Entries& entries() const { return entries_; }

  const std::vector<double>* find(const StateKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Creates a zero-initialised row on first access.
  std::vector<double>& row(const StateKey& key, std::size_t action_count) {
    auto [it, inserted] = entries_.try_emplace(key);
    if (inserted) it->second.assign(action_count, 0.0);
    return it->second;
  }

  void insert(StateKey key, std::vector<double> values) {
    entries_.insert_or_assign(std::move(key), std::move(values));
  }

  double value(const StateKey& key, std::size_t action) const {
    const auto* r = find(key);
    return r && action < r->size() ? (*r)[action] : 0.0;
  }

  double max_value(const StateKey& key) const;

  // Largest |Q| over all entries (0 for an empty table).
  double max_abs_value() const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  GameId game_;
  double alpha_;
  double gamma_;
  double epsilon_ = 0.0;
  std::uint64_t episodes_ = 0;
  Entries entries_;
};

// Temporal-difference update:
//   (1 - alpha) * q_sa + alpha * (reward + gamma * max_next)
constexpr double q_update(double q_sa, double reward, double max_next, double alpha,
                          double gamma) {
  return (1.0 - alpha) * q_sa + alpha * (reward + gamma * max_next);
}

}  // namespace qarena
