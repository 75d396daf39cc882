#include "qarena/play_service.hpp"

#include <cstdio>
#include <set>

#include "qarena/snapshot.hpp"

namespace qarena {
namespace {

using nlohmann::json;

char game_letter(GameId game) {
  switch (game) {
    case GameId::TicTacToe:
      return 'T';
    case GameId::NineMensMorris:
      return 'N';
    case GameId::Mancala:
      return 'M';
  }
  return '?';
}

std::vector<std::string> action_texts(GameId game, const std::vector<Action>& actions) {
  std::vector<std::string> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(to_string(game, a));
  return out;
}

std::string string_field(const json& body, const char* name) {
  if (!body.is_object() || !body.contains(name) || !body[name].is_string()) {
    throw ServiceError(400, "bad_request", std::string("missing string field '") + name + "'");
  }
  return body[name].get<std::string>();
}

}  // namespace

PlayService::PlayService(std::filesystem::path snapshot_dir, AgentFactory& factory,
                         ServiceOptions options)
    : factory_(factory), options_(std::move(options)), id_rng_(options_.seed) {
  for (GameId game : kAllGames) {
    const std::string depth = std::to_string(default_depth(game));
    catalog_.push_back({"random", game, AgentSpec::parse("random"), "Random", std::nullopt});
    catalog_.push_back({"minmax-det", game, AgentSpec::parse("minmax-det:depth=" + depth),
                        "Min-Max (deterministic)", std::nullopt});
    catalog_.push_back({"minmax-nd", game, AgentSpec::parse("minmax-nd:depth=" + depth),
                        "Min-Max (non-deterministic)", std::nullopt});
  }
  if (!snapshot_dir.empty()) {
    if (!std::filesystem::is_directory(snapshot_dir)) {
      throw Error("bad_snapshot_dir", snapshot_dir.string() + " is not a directory");
    }
    scan_snapshots(snapshot_dir);
  }
}

void PlayService::scan_snapshots(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> runs;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "manifest.txt") {
      runs.push_back(entry.path().parent_path());
    }
  }
  std::sort(runs.begin(), runs.end());
  std::set<std::string> ids;
  for (const auto& run_dir : runs) {
    TrainingRun run;
    try {
      run = read_run(run_dir);
    } catch (const Error& e) {
      warnings_.push_back(run_dir.string() + ": " + e.what());
      continue;
    }
    if (!run.convergence_fs) {
      warnings_.push_back(run_dir.string() + ": run did not converge, no percent agents");
      continue;
    }
    for (int pct = 10; pct <= 100; pct += 10) {
      std::string id = std::string("Q-") + game_letter(run.config.game) + "-" + std::to_string(pct);
      if (ids.contains(id)) id += "@" + run_dir.filename().string();
      try {
        AgentSpec spec = percent_agent(run, pct);
        factory_.table_for(spec, run.config.game);
        catalog_.push_back({id, run.config.game, spec, id, static_cast<double>(pct)});
        ids.insert(id);
      } catch (const Error& e) {
        warnings_.push_back(id + " skipped: " + e.what());
      }
    }
  }
}

json PlayService::list_agents() const {
  json agents = json::array();
  for (const auto& e : catalog_) {
    json item = {{"id", e.id},
                 {"game", game_name(e.game)},
                 {"label", e.label},
                 {"spec", e.spec.to_string()}};
    item["percent"] = e.percent ? json(*e.percent) : json(nullptr);
    agents.push_back(std::move(item));
  }
  return {{"api_version", 1}, {"agents", agents}, {"warnings", warnings_}};
}

json PlayService::list_games() const {
  json games = json::array();
  for (GameId game : kAllGames) {
    const GameState s = initial_state(game);
    json item = {{"id", game_name(game)}};
    switch (game) {
      case GameId::TicTacToe:
        item["board_size"] = 9;
        break;
      case GameId::NineMensMorris:
        item["board_size"] = 24;
        item["pieces_per_player"] = kMorrisPieces;
        break;
      case GameId::Mancala:
        item["board_size"] = 14;
        item["seeds"] = kMancalaSeeds;
        break;
    }
    item["initial_legal_actions"] = action_texts(game, legal_actions(s));
    games.push_back(std::move(item));
  }
  return {{"api_version", 1}, {"games", games}};
}

AgentSpec PlayService::resolve_agent(const std::string& agent, GameId game) const {
  for (const auto& e : catalog_) {
    if (e.game == game && e.id == agent) return e.spec;
  }
  AgentSpec spec;
  try {
    spec = AgentSpec::parse(agent);
  } catch (const Error&) {
    throw ServiceError(404, "unknown_agent", "no agent '" + agent + "' for " +
                                                 std::string(game_name(game)));
  }
  if (spec.kind == AgentKind::QTwin) {
    throw ServiceError(400, "bad_agent", "q-twin is a training teacher only");
  }
  return spec;
}

std::string PlayService::new_id() {
  std::lock_guard lock(id_mu_);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_.next()));
  return buf;
}

json PlayService::create_match(const json& body) {
  evict_idle();
  const std::string game_text = string_field(body, "game");
  const std::string seat_text = string_field(body, "seat");
  const std::string agent_text = string_field(body, "agent");
  GameId game;
  try {
    game = parse_game(game_text);
  } catch (const Error&) {
    throw ServiceError(400, "unknown_game", "no game '" + game_text + "'");
  }
  Player human;
  if (seat_text == "p1") {
    human = Player::P1;
  } else if (seat_text == "p2") {
    human = Player::P2;
  } else {
    throw ServiceError(400, "bad_seat", "seat must be 'p1' or 'p2'");
  }
  const AgentSpec spec = resolve_agent(agent_text, game);

  auto session = std::make_shared<Session>();
  std::uint64_t serial;
  {
    std::lock_guard lock(id_mu_);
    serial = ++created_;
  }
  try {
    session->agent = factory_.make(spec, game, Rng::derive_seed(options_.seed, serial));
  } catch (const Error& e) {
    const bool missing = e.code() == "snapshot_not_found" || e.code() == "run_not_found" ||
                         e.code() == "io_error";
    throw ServiceError(missing ? 404 : 400, missing ? "unknown_agent" : e.code(), e.detail());
  }
  session->id = new_id();
  session->game = game;
  session->human = human;
  session->agent_id = agent_text;
  session->state = initial_state(game);
  session->last_access = options_.clock();

  std::lock_guard session_lock(session->mu);
  advance(*session);
  {
    std::unique_lock lock(sessions_mu_);
    sessions_[session->id] = session;
  }
  return session_json(*session);
}

std::shared_ptr<PlayService::Session> PlayService::find(const std::string& id) {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no match '" + id + "'");
  return it->second;
}

json PlayService::get_state(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mu);
  session->last_access = options_.clock();
  return session_json(*session);
}

json PlayService::post_move(const std::string& id, const json& body) {
  auto session = find(id);
  const std::string text = string_field(body, "action");
  std::lock_guard lock(session->mu);
  Session& s = *session;
  s.last_access = options_.clock();
  if (outcome(s.state)) throw ServiceError(409, "game_over", "the match has finished");
  if (s.state.to_move != s.human) throw ServiceError(409, "not_your_turn", "the agent is to move");

  const auto legal = legal_actions(s.state);
  std::optional<Action> action;
  try {
    action = parse_action(s.game, text);
  } catch (const Error&) {
  }
  if (!action || std::find(legal.begin(), legal.end(), *action) == legal.end()) {
    throw ServiceError(422, "illegal_action", "'" + text + "' is not legal here",
                       action_texts(s.game, legal));
  }
  s.history.push_back({s.human, true, *action});
  s.state = apply(s.state, *action);
  const std::size_t before = s.history.size();
  advance(s);
  json out = session_json(s);
  json replies = json::array();
  for (std::size_t i = before; i < s.history.size(); ++i) {
    replies.push_back(to_string(s.game, s.history[i].action));
  }
  out["agent_moves"] = replies;
  return out;
}

std::size_t PlayService::advance(Session& s) {
  std::size_t moves = 0;
  while (!outcome(s.state) && s.state.to_move != s.human) {
    const Action a = s.agent->select(s.state);
    s.history.push_back({s.state.to_move, false, a});
    s.state = apply(s.state, a);
    ++moves;
  }
  return moves;
}

json PlayService::session_json(const Session& s) const {
  const auto result = outcome(s.state);
  json out = {{"api_version", 1},
              {"id", s.id},
              {"game", game_name(s.game)},
              {"human_seat", player_name(s.human)},
              {"agent", s.agent_id},
              {"status", result ? "finished" : "in_progress"},
              {"to_move", player_name(s.state.to_move)},
              {"phase", phase_name(s.state.phase)},
              {"ply", s.state.ply}};
  out["outcome"] = result ? json(to_string(*result)) : json(nullptr);
  std::size_t cells = 9;
  if (s.game == GameId::NineMensMorris) cells = 24;
  if (s.game == GameId::Mancala) cells = 14;
  out["board"] = std::vector<int>(s.state.board.begin(), s.state.board.begin() + cells);
  if (s.game == GameId::NineMensMorris) {
    out["in_hand"] = {s.state.in_hand[0], s.state.in_hand[1]};
  }
  if (s.game == GameId::Mancala) {
    out["scores"] = {mancala::score(s.state, Player::P1), mancala::score(s.state, Player::P2)};
  }
  if (!result && s.state.to_move == s.human) {
    out["legal_actions"] = action_texts(s.game, legal_actions(s.state));
  } else {
    out["legal_actions"] = json::array();
  }
  json history = json::array();
  for (const auto& m : s.history) {
    history.push_back({{"player", player_name(m.player)},
                       {"by", m.by_human ? "human" : "agent"},
                       {"action", to_string(s.game, m.action)}});
  }
  out["history"] = history;
  return out;
}

std::size_t PlayService::session_count() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

std::size_t PlayService::evict_idle() {
  const auto now = options_.clock();
  std::unique_lock lock(sessions_mu_);
  return std::erase_if(sessions_, [&](const auto& kv) {
    std::lock_guard session_lock(kv.second->mu);
    return now - kv.second->last_access > options_.idle_timeout;
  });
}

}  // namespace qarena
