#include "qarena/agents.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace qarena {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Values closer than this are treated as tied at the root.
constexpr double kTieEps = 1e-9;
constexpr std::size_t kCacheLimit = 1u << 21;

int parse_depth(std::string_view options, std::string_view text) {
  if (!options.starts_with("depth=")) {
    throw Error("bad_agent_spec", "expected depth=N in '" + std::string(text) + "'");
  }
  options.remove_prefix(6);
  int depth = 0;
  auto [ptr, ec] = std::from_chars(options.data(), options.data() + options.size(), depth);
  if (ec != std::errc() || ptr != options.data() + options.size() || depth < 1) {
    throw Error("bad_agent_spec", "depth must be a positive integer in '" + std::string(text) + "'");
  }
  return depth;
}

// Negamax over a reusable per-ply action buffer.
class Search {
 public:
  explicit Search(const Heuristic& h) : h_(h) {}

  // Value of s for the player to move.
  double negamax(const GameState& s, int depth, double alpha, double beta) {
    if (auto o = outcome(s)) return o->value_for(s.to_move);
    if (depth <= 0) return h_(s, s.to_move);
    auto& actions = buffer(depth);
    actions.clear();
    generate_actions(s, actions);
    double best = -kInf;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const GameState child = apply_legal(s, actions[i]);
      double v;
      if (child.to_move == s.to_move) {
        v = negamax(child, depth - 1, alpha, beta);
      } else {
        v = -negamax(child, depth - 1, -beta, -alpha);
      }
      if (v > best) best = v;
      if (best > alpha) alpha = best;
      if (alpha >= beta) break;
    }
    return best;
  }

  double plain(const GameState& s, int depth) {
    if (auto o = outcome(s)) return o->value_for(s.to_move);
    if (depth <= 0) return h_(s, s.to_move);
    std::vector<Action> actions;
    generate_actions(s, actions);
    double best = -kInf;
    for (const Action& a : actions) {
      const GameState child = apply_legal(s, a);
      const double v = child.to_move == s.to_move ? plain(child, depth - 1)
                                                  : -plain(child, depth - 1);
      best = std::max(best, v);
    }
    return best;
  }

  // Root search. With all_ties the window keeps every child within kTieEps of
  // the running best exact; otherwise only strict improvements are resolved.
  std::vector<std::size_t> best_indices(const GameState& s, const std::vector<Action>& actions,
                                        int depth, bool all_ties) {
    std::vector<std::size_t> ties;
    double best = -kInf;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const GameState child = apply_legal(s, actions[i]);
      double lo = -kInf;
      if (best > -kInf) lo = all_ties ? best - 2 * kTieEps : best;
      double v;
      if (child.to_move == s.to_move) {
        v = negamax(child, depth - 1, lo, kInf);
      } else {
        v = -negamax(child, depth - 1, -kInf, -lo);
      }
      if (v > best + kTieEps || ties.empty()) {
        best = v;
        ties.assign(1, i);
      } else if (all_ties && v >= best - kTieEps) {
        ties.push_back(i);
      }
    }
    return ties;
  }

 private:
  std::vector<Action>& buffer(int depth) {
    if (static_cast<std::size_t>(depth) >= buffers_.size()) buffers_.resize(depth + 1);
    return buffers_[depth];
  }

  const Heuristic& h_;
  std::vector<std::vector<Action>> buffers_;
};

}  // namespace

AgentSpec AgentSpec::parse(std::string_view text) {
  AgentSpec spec;
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view rest =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  if (head == "random" && colon == std::string_view::npos) {
    spec.kind = AgentKind::Random;
  } else if (head == "minmax-det" || head == "minmax-nd") {
    spec.kind = head == "minmax-det" ? AgentKind::MinMaxDet : AgentKind::MinMaxNonDet;
    if (colon != std::string_view::npos) spec.depth = parse_depth(rest, text);
  } else if (head == "q") {
    if (rest.empty()) throw Error("bad_agent_spec", "q: needs a snapshot path");
    spec.kind = AgentKind::QGreedy;
    spec.source = std::string(rest);
  } else if (head == "q-pct") {
    const auto last = rest.rfind(':');
    if (last == std::string_view::npos || last == 0) {
      throw Error("bad_agent_spec", "expected q-pct:<run-dir>:<percent>");
    }
    spec.kind = AgentKind::QPercent;
    spec.source = std::string(rest.substr(0, last));
    const std::string pct(rest.substr(last + 1));
    try {
      std::size_t used = 0;
      spec.percent = std::stod(pct, &used);
      if (used != pct.size()) throw std::invalid_argument(pct);
    } catch (const std::exception&) {
      throw Error("bad_agent_spec", "bad percent '" + pct + "'");
    }
    if (!(spec.percent > 0.0 && spec.percent <= 100.0)) {
      throw Error("bad_agent_spec", "percent must be in (0, 100]");
    }
  } else if (head == "q-twin" && colon == std::string_view::npos) {
    spec.kind = AgentKind::QTwin;
  } else {
    throw Error("bad_agent_spec", "unknown agent '" + std::string(text) + "'");
  }
  return spec;
}

std::string AgentSpec::to_string() const {
  switch (kind) {
    case AgentKind::Random:
      return "random";
    case AgentKind::MinMaxDet:
    case AgentKind::MinMaxNonDet: {
      std::string out = kind == AgentKind::MinMaxDet ? "minmax-det" : "minmax-nd";
      if (depth) out += ":depth=" + std::to_string(*depth);
      return out;
    }
    case AgentKind::QGreedy:
      return "q:" + source;
    case AgentKind::QPercent: {
      std::string pct = std::to_string(percent);
      pct.erase(pct.find_last_not_of('0') + 1);
      if (pct.back() == '.') pct.pop_back();
      return "q-pct:" + source + ":" + pct;
    }
    case AgentKind::QTwin:
      return "q-twin";
  }
  return "?";
}

int default_depth(GameId game) { return game == GameId::TicTacToe ? 9 : 6; }

int resolved_depth(const AgentSpec& spec, GameId game) {
  return spec.depth.value_or(default_depth(game));
}

double Heuristic::operator()(const GameState& s, Player perspective) const {
  if (auto o = outcome(s)) return o->value_for(perspective);
  const Player other = opponent(perspective);
  switch (s.game) {
    case GameId::TicTacToe:
      return 0.0;
    case GameId::Mancala:
      return (static_cast<double>(s.board[mancala::bank(perspective)]) -
              static_cast<double>(s.board[mancala::bank(other)])) /
             kMancalaSeeds;
    case GameId::NineMensMorris: {
      const double pieces = morris::total_pieces(s, perspective) - morris::total_pieces(s, other);
      const double mills = morris::mill_count(s, perspective) - morris::mill_count(s, other);
      return std::clamp(weights_.morris_piece * pieces + weights_.morris_mill * mills, -1.0, 1.0);
    }
  }
  return 0.0;
}

double minimax_value(const GameState& s, int depth, const Heuristic& h, Player perspective) {
  Search search(h);
  const double v = search.negamax(s, depth, -kInf, kInf);
  return perspective == s.to_move ? v : -v;
}

double minimax_value_unpruned(const GameState& s, int depth, const Heuristic& h,
                              Player perspective) {
  Search search(h);
  const double v = search.plain(s, depth);
  return perspective == s.to_move ? v : -v;
}

std::vector<std::size_t> minimax_best_indices(const GameState& s, int depth, const Heuristic& h) {
  const auto actions = legal_actions(s);
  Search search(h);
  return search.best_indices(s, actions, std::max(depth, 1), true);
}

Action select_random(const GameState& s, Rng& rng) {
  const auto actions = legal_actions(s);
  return actions[rng.uniform_index(actions.size())];
}

Action select_minmax(const GameState& s, const AgentSpec& spec, Rng& rng, const Heuristic& h) {
  const auto actions = legal_actions(s);
  const int depth = std::max(resolved_depth(spec, s.game), 1);
  Search search(h);
  const bool all = spec.kind == AgentKind::MinMaxNonDet;
  const auto best = search.best_indices(s, actions, depth, all);
  if (!all) return actions[best.front()];
  return actions[best[rng.uniform_index(best.size())]];
}

Action select_q(const GameState& s, const QTable& q, Rng& rng) {
  const auto actions = legal_actions(s);
  const auto* row = q.find(state_key(s));
  if (!row) return actions[rng.uniform_index(actions.size())];
  double best = -kInf;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    best = std::max(best, i < row->size() ? (*row)[i] : 0.0);
  }
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double v = i < row->size() ? (*row)[i] : 0.0;
    if (v == best) ties.push_back(i);
  }
  return actions[ties[rng.uniform_index(ties.size())]];
}

MinimaxAgent::MinimaxAgent(AgentSpec spec, GameId game, std::uint64_t seed, Heuristic h)
    : spec_(std::move(spec)),
      game_(game),
      depth_(resolved_depth(spec_, game)),
      heuristic_(h),
      rng_(seed) {
  if (!spec_.is_minimax()) throw Error("bad_agent_spec", "not a minimax spec");
  if (depth_ < 1) throw Error("bad_agent_spec", "depth must be >= 1");
}

Action MinimaxAgent::select(const GameState& s) {
  const auto actions = legal_actions(s);
  StateKey key = state_key(s);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    Search search(heuristic_);
    const bool all = spec_.kind == AgentKind::MinMaxNonDet;
    const auto best = search.best_indices(s, actions, depth_, all);
    if (cache_.size() >= kCacheLimit) cache_.clear();
    std::vector<std::uint8_t> compact(best.begin(), best.end());
    it = cache_.emplace(std::move(key), std::move(compact)).first;
  }
  const auto& best = it->second;
  if (spec_.kind == AgentKind::MinMaxDet) return actions[best.front()];
  return actions[best[rng_.uniform_index(best.size())]];
}

std::unique_ptr<Agent> MinimaxAgent::clone(std::uint64_t seed) const {
  auto copy = std::make_unique<MinimaxAgent>(spec_, game_, seed, heuristic_);
  copy->cache_ = cache_;
  return copy;
}

QGreedyAgent::QGreedyAgent(std::shared_ptr<const QTable> table, std::uint64_t seed, AgentSpec spec)
    : table_(std::move(table)), rng_(seed), spec_(std::move(spec)) {
  if (!table_) throw Error("bad_agent_spec", "q agent without a table");
}

}  // namespace qarena
