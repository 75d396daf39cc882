#include "qarena/cli.hpp"

#include <httplib.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <thread>

#include "qarena/factory.hpp"
#include "qarena/http_api.hpp"
#include "qarena/play_service.hpp"
#include "qarena/snapshot.hpp"
#include "qarena/tournament.hpp"
#include "qarena/trainer.hpp"

namespace qarena {
namespace {

using nlohmann::json;

const std::vector<std::string> kCommands = {"train",    "evaluate", "tournament",
                                            "enumerate", "snapshot", "serve"};

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

struct Globals {
  std::string seed = "42";
  std::string out;
  std::string config;
  double morris_piece = HeuristicWeights{}.morris_piece;
  double morris_mill = HeuristicWeights{}.morris_mill;
};

std::uint64_t resolve_seed(const std::string& text) {
  if (text == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error("invalid_argument", "--seed must be an integer or 'random'");
  }
  return v;
}

std::filesystem::path resolve_out(const Globals& g, const std::string& command) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("QARENA_OUT"); env && *env) return env;
  return std::filesystem::path("qarena-out") / command;
}

void write_result(const std::filesystem::path& dir, const json& result) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "result.json", std::ios::trunc);
  out << result.dump(2) << '\n';
  if (!out) throw Error("io_error", (dir / "result.json").string() + ": write failed");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("invalid_argument", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json optional_json(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

// Moves the contents of --config (if any) right after the subcommand, so the
// command line still wins (options take their last value).
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw Error("invalid_argument", "--config needs a file");
      config = args[++i];
    } else if (args[i].starts_with("--config=")) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config.empty()) return rest;
  const auto extra = config_arguments(read_file(config));
  auto cmd = std::find_if(rest.begin(), rest.end(), [](const std::string& a) {
    return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
  });
  if (cmd == rest.end()) throw Error("invalid_argument", "--config needs a subcommand");
  rest.insert(cmd + 1, extra.begin(), extra.end());
  return rest;
}

struct TrainArgs {
  std::string game;
  std::string teacher = "minmax-det";
  std::string evaluator;
  double alpha = kDefaultAlpha;
  double gamma = kDefaultGamma;
  double epsilon = 0.1;
  std::optional<double> epsilon_final;
  double reward_win = 1.0;
  double reward_loss = -1.0;
  double reward_draw = 0.0;
  std::uint64_t max_episodes = 50000;
  std::uint64_t eval_every = 100;
  std::uint64_t eval_games = 100;
  std::uint64_t snapshot_every = 0;
  int st_window = 20;
  int st_tolerance = 1;
  int fs_window = 20;
  std::uint64_t fs_confirm = 5000;
  bool progress = false;
};

int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  cfg.game = parse_game(a.game);
  cfg.teacher = AgentSpec::parse(a.teacher);
  if (!a.evaluator.empty()) cfg.evaluator = AgentSpec::parse(a.evaluator);
  cfg.alpha = a.alpha;
  cfg.gamma = a.gamma;
  cfg.epsilon = a.epsilon;
  cfg.epsilon_final = a.epsilon_final;
  cfg.rewards = {a.reward_win, a.reward_loss, a.reward_draw};
  cfg.max_episodes = a.max_episodes;
  cfg.eval_every = a.eval_every;
  cfg.eval_games = a.eval_games;
  cfg.snapshot_every = a.snapshot_every;
  cfg.seed = resolve_seed(g.seed);
  cfg.st_window = a.st_window;
  cfg.st_tolerance = a.st_tolerance;
  cfg.fs_window = a.fs_window;
  cfg.fs_confirm = a.fs_confirm;
  cfg.out_dir = resolve_out(g, "train");
  cfg.validate();

  AgentFactory factory({g.morris_piece, g.morris_mill});
  TrainObserver observer;
  if (a.progress) {
    observer = [&err](const EvalPoint& p) {
      err << "episode " << p.episode << ": " << p.learner_wins << ':' << p.draws << ':'
          << p.teacher_wins << '\n';
    };
  }
  const TrainingRun run = train(cfg, factory, observer);
  const double max_q = run.table->max_abs_value();

  out << "episodes_run=" << run.episodes_run << '\n';
  out << "convergence_st=" << (run.convergence_st ? std::to_string(*run.convergence_st) : "none")
      << '\n';
  out << "convergence_fs=" << (run.convergence_fs ? std::to_string(*run.convergence_fs) : "none")
      << '\n';
  out << "converged=" << (run.convergence_fs ? "true" : "false") << '\n';
  out << "run_dir=" << cfg.out_dir.string() << '\n';

  write_result(cfg.out_dir, {{"command", "train"},
                             {"exit_code", 0},
                             {"seed", cfg.seed},
                             {"episodes_run", run.episodes_run},
                             {"converged", run.convergence_fs.has_value()},
                             {"convergence_st", optional_json(run.convergence_st)},
                             {"convergence_fs", optional_json(run.convergence_fs)},
                             {"states", run.table->size()},
                             {"max_abs_q", max_q},
                             {"manifest", "manifest.txt"},
                             {"curve", "curve.csv"}});
  return kExitOk;
}

struct EvaluateArgs {
  std::string game;
  std::string p1;
  std::string p2;
  int games = 100;
};

int cmd_evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out) {
  const GameId game = parse_game(a.game);
  if (a.games < 1) throw Error("invalid_argument", "--games must be >= 1");
  const AgentSpec p1 = AgentSpec::parse(a.p1);
  const AgentSpec p2 = AgentSpec::parse(a.p2);
  const std::uint64_t seed = resolve_seed(g.seed);
  AgentFactory factory({g.morris_piece, g.morris_mill});
  const MatchRecord r = evaluate(p1, p2, game, a.games, factory, seed);
  out << a.p1 << " vs " << a.p2 << ": " << cell_text(r) << " (P1 wins:draws:P1 losses)\n";
  write_result(resolve_out(g, "evaluate"), {{"command", "evaluate"},
                                            {"exit_code", 0},
                                            {"game", game_name(game)},
                                            {"seed", seed},
                                            {"p1", a.p1},
                                            {"p2", a.p2},
                                            {"n_games", r.n_games},
                                            {"p1_wins", r.p1_wins},
                                            {"draws", r.draws},
                                            {"p1_losses", r.p1_losses}});
  return kExitOk;
}

struct TournamentArgs {
  std::string game;
  std::vector<std::string> agents;
  std::optional<int> n_trials;
  int n1 = 100;
  int window = 20;
  int tolerance = 1;
  int batch = 5;
  int jobs = 1;
};

int cmd_tournament(const TournamentArgs& a, const Globals& g, std::ostream& out) {
  const GameId game = parse_game(a.game);
  std::vector<RosterEntry> roster;
  for (const auto& text : a.agents) {
    const auto eq = text.find('=');
    RosterEntry e;
    e.name = eq == std::string::npos ? text : text.substr(0, eq);
    e.spec = AgentSpec::parse(eq == std::string::npos ? text : text.substr(eq + 1));
    roster.push_back(std::move(e));
  }
  validate_roster(roster);
  if (a.jobs < 1) throw Error("invalid_argument", "--jobs must be >= 1");
  const std::uint64_t seed = resolve_seed(g.seed);
  const auto dir = resolve_out(g, "tournament");
  AgentFactory factory({g.morris_piece, g.morris_mill});
  for (const auto& e : roster) factory.make(e.spec, game, seed);

  json stability = nullptr;
  int n_trials = 0;
  std::filesystem::create_directories(dir);
  if (a.n_trials) {
    if (*a.n_trials < 1) throw Error("invalid_argument", "--n-trials must be >= 1");
    n_trials = *a.n_trials;
  } else {
    std::vector<std::pair<RosterEntry, RosterEntry>> pairings;
    for (const auto& x : roster) {
      for (const auto& y : roster) pairings.emplace_back(x, y);
    }
    StabilityOptions opts;
    opts.n1 = a.n1;
    opts.window = a.window;
    opts.tolerance = a.tolerance;
    opts.batch = a.batch;
    const auto report = stability_trials(pairings, game, factory, Rng::derive_seed(seed, 7), opts);
    n_trials = report.n_trials;
    std::ofstream csv(dir / "stability.csv", std::ios::trunc);
    csv << "p1,p2,stable_at,games_played\n";
    stability = json::array();
    for (const auto& p : report.pairings) {
      csv << p.p1 << ',' << p.p2 << ',' << (p.stable_at ? std::to_string(*p.stable_at) : "unstable")
          << ',' << p.games_played << '\n';
      stability.push_back({{"p1", p.p1},
                           {"p2", p.p2},
                           {"stable_at", p.stable_at ? json(*p.stable_at) : json(nullptr)},
                           {"games_played", p.games_played}});
      if (!p.stable_at) out << "warning: " << p.p1 << " vs " << p.p2 << " never stabilised\n";
    }
    out << "n_trials=" << n_trials << '\n';
  }

  const TournamentTable table = round_robin(roster, game, n_trials, factory, seed, a.jobs);
  const std::string text = render_text(table);
  out << text;
  std::ofstream(dir / "tournament.txt", std::ios::trunc) << text;
  std::ofstream(dir / "tournament.csv", std::ios::trunc) << render_csv(table);

  json points = json::object();
  json points_both = json::object();
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    points[table.names[i]] = table.points(i);
    points_both[table.names[i]] = table.points_both(i);
  }
  write_result(dir, {{"command", "tournament"},
                     {"exit_code", 0},
                     {"game", game_name(game)},
                     {"seed", seed},
                     {"n_trials", n_trials},
                     {"stability", stability},
                     {"points", points},
                     {"points_both_seats", points_both},
                     {"table", "tournament.txt"},
                     {"csv", "tournament.csv"}});
  return kExitOk;
}

struct EnumerateArgs {
  std::string game;
  std::size_t cap = 10'000'000;
  std::optional<int> depth;
};

int cmd_enumerate(const EnumerateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const GameId game = parse_game(a.game);
  if (a.depth && *a.depth < 0) throw Error("invalid_argument", "--depth must be >= 0");
  const auto dir = resolve_out(g, "enumerate");
  try {
    const std::size_t count = enumerate_reachable(game, a.cap, a.depth);
    out << count << '\n';
    write_result(dir, {{"command", "enumerate"},
                       {"exit_code", 0},
                       {"game", game_name(game)},
                       {"count", count},
                       {"depth", a.depth ? json(*a.depth) : json(nullptr)}});
    return kExitOk;
  } catch (const CapExceeded& e) {
    err << "error: cap of " << a.cap << " states exceeded; partial count " << e.partial_count()
        << '\n';
    out << e.partial_count() << '\n';
    write_result(dir, {{"command", "enumerate"},
                       {"exit_code", kExitCapExceeded},
                       {"game", game_name(game)},
                       {"error", "cap_exceeded"},
                       {"partial_count", e.partial_count()}});
    return kExitCapExceeded;
  }
}

struct SnapshotArgs {
  std::string file;
  std::string run;
  std::optional<double> percent;
};

int cmd_snapshot(const SnapshotArgs& a, const Globals& g, std::ostream& out) {
  json result = {{"command", "snapshot"}, {"exit_code", 0}};
  std::filesystem::path file = a.file;
  if (!a.run.empty()) {
    if (!a.percent) throw Error("invalid_argument", "--run needs --percent");
    const TrainingRun run = read_run(a.run);
    const ResolvedSnapshot r = resolve_percent(run, *a.percent);
    out << "target_episode=" << r.target << "\nsnapshot_episode=" << r.episode
        << "\nsnapshot=" << r.path.string() << '\n';
    result["target_episode"] = r.target;
    result["snapshot_episode"] = r.episode;
    result["snapshot"] = r.path.string();
    file = r.path;
  } else if (file.empty()) {
    throw Error("invalid_argument", "give --file or --run with --percent");
  }
  const QTable q = load_snapshot(file);
  out << "game=" << game_name(q.game()) << "\nalpha=" << q.alpha() << "\ngamma=" << q.gamma()
      << "\nepsilon=" << q.epsilon() << "\nepisodes=" << q.episodes_trained()
      << "\nentries=" << q.size() << "\nmax_abs_q=" << q.max_abs_value() << '\n';
  result["file"] = file.string();
  result["game"] = game_name(q.game());
  result["alpha"] = q.alpha();
  result["gamma"] = q.gamma();
  result["epsilon"] = q.epsilon();
  result["episodes"] = q.episodes_trained();
  result["entries"] = q.size();
  write_result(resolve_out(g, "snapshot"), result);
  return kExitOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshots;
  std::string ui;
};

int cmd_serve(const ServeArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  if (!a.snapshots.empty() && !std::filesystem::is_directory(a.snapshots)) {
    throw Error("invalid_argument", "snapshot directory '" + a.snapshots + "' does not exist");
  }
  if (!a.ui.empty() && !std::filesystem::is_directory(a.ui)) {
    throw Error("invalid_argument", "ui directory '" + a.ui + "' does not exist");
  }
  AgentFactory factory({g.morris_piece, g.morris_mill});
  ServiceOptions options;
  options.seed = resolve_seed(g.seed);
  PlayService service(a.snapshots, factory, options);
  for (const auto& w : service.warnings()) err << "warning: " << w << '\n';
  auto server = make_http_server(service, a.ui);

  int port = a.port;
  if (port == 0) {
    port = server->bind_to_any_port(a.host);
    if (port < 0) throw Error("port_busy", "cannot bind " + a.host);
  } else if (!server->bind_to_port(a.host, port)) {
    throw Error("port_busy", "cannot bind " + a.host + ":" + std::to_string(port));
  }
  out << "listening on http://" << a.host << ':' << port << std::endl;

  g_interrupted.store(false);
  auto previous_int = std::signal(SIGINT, on_sigint);
  auto previous_term = std::signal(SIGTERM, on_sigint);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done.load()) {
      if (g_interrupted.load()) {
        server->stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });
  server->listen_after_bind();
  done.store(true);
  watcher.join();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);

  out << "shutting down, " << service.session_count() << " active matches discarded" << std::endl;
  write_result(resolve_out(g, "serve"), {{"command", "serve"},
                                         {"exit_code", 0},
                                         {"host", a.host},
                                         {"port", port},
                                         {"agents", service.catalog().size()},
                                         {"discarded_matches", service.session_count()}});
  return kExitOk;
}

}  // namespace

std::vector<std::string> config_arguments(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error("bad_config", "line " + std::to_string(number) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value = line.substr(eq + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    out.push_back("--" + key);
    out.push_back(value);
  }
  return out;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tabular Q-learning arena for TicTacToe, Nine Men's Morris and Mancala", "qarena"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "RNG seed, or 'random'")->capture_default_str();
  app.add_option("--out", g.out, "Output directory (falls back to $QARENA_OUT)");
  app.add_option("--config", g.config, "key=value file with option defaults");
  app.add_option("--morris-piece-weight", g.morris_piece, "Morris heuristic piece weight")
      ->capture_default_str();
  app.add_option("--morris-mill-weight", g.morris_mill, "Morris heuristic mill weight")
      ->capture_default_str();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a Q-learning agent against a teacher");
  train_cmd->add_option("--game", ta.game, "tictactoe | ninemensmorris | mancala")->required();
  train_cmd->add_option("--teacher", ta.teacher, "Teacher agent spec")->capture_default_str();
  train_cmd->add_option("--evaluator", ta.evaluator, "Evaluation opponent (default: teacher)");
  train_cmd->add_option("--alpha", ta.alpha)->capture_default_str();
  train_cmd->add_option("--gamma", ta.gamma)->capture_default_str();
  train_cmd->add_option("--epsilon", ta.epsilon)->capture_default_str();
  train_cmd->add_option("--epsilon-final", ta.epsilon_final, "Linear decay target");
  train_cmd->add_option("--reward-win", ta.reward_win)->capture_default_str();
  train_cmd->add_option("--reward-loss", ta.reward_loss)->capture_default_str();
  train_cmd->add_option("--reward-draw", ta.reward_draw)->capture_default_str();
  train_cmd->add_option("--max-episodes", ta.max_episodes)->capture_default_str();
  train_cmd->add_option("--eval-every", ta.eval_every)->capture_default_str();
  train_cmd->add_option("--eval-games", ta.eval_games)->capture_default_str();
  train_cmd->add_option("--snapshot-every", ta.snapshot_every, "0 = max(1, max_episodes/100)")
      ->capture_default_str();
  train_cmd->add_option("--st-window", ta.st_window)->capture_default_str();
  train_cmd->add_option("--st-tolerance", ta.st_tolerance)->capture_default_str();
  train_cmd->add_option("--fs-window", ta.fs_window)->capture_default_str();
  train_cmd->add_option("--fs-confirm", ta.fs_confirm)->capture_default_str();
  train_cmd->add_flag("--progress", ta.progress, "Print each evaluation point");

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "Play greedy games between two agents");
  eval_cmd->add_option("--game", ea.game)->required();
  eval_cmd->add_option("--p1", ea.p1, "Agent spec playing first")->required();
  eval_cmd->add_option("--p2", ea.p2, "Agent spec playing second")->required();
  eval_cmd->add_option("--games", ea.games)->capture_default_str();

  TournamentArgs tra;
  auto* tour_cmd = app.add_subcommand("tournament", "Stability trials and round robin");
  tour_cmd->add_option("--game", tra.game)->required();
  tour_cmd->add_option("--agent", tra.agents, "NAME=SPEC, repeatable")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  tour_cmd->add_option("--n-trials", tra.n_trials, "Skip the stability search");
  tour_cmd->add_option("--n1", tra.n1, "Minimum trial count")->capture_default_str();
  tour_cmd->add_option("--window", tra.window)->capture_default_str();
  tour_cmd->add_option("--tolerance", tra.tolerance)->capture_default_str();
  tour_cmd->add_option("--batch", tra.batch)->capture_default_str();
  tour_cmd->add_option("--jobs", tra.jobs)->capture_default_str();

  EnumerateArgs ena;
  auto* enum_cmd = app.add_subcommand("enumerate", "Count reachable states");
  enum_cmd->add_option("--game", ena.game)->required();
  enum_cmd->add_option("--cap", ena.cap)->capture_default_str();
  enum_cmd->add_option("--depth", ena.depth, "Maximum plies from the start");

  SnapshotArgs sa;
  auto* snap_cmd = app.add_subcommand("snapshot", "Inspect snapshots or resolve percent agents");
  snap_cmd->add_option("--file", sa.file, "Snapshot file to inspect");
  snap_cmd->add_option("--run", sa.run, "Training run directory");
  snap_cmd->add_option("--percent", sa.percent, "Percent of the FS episode count");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP play API");
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  serve_cmd->add_option("--snapshots", sv.snapshots, "Directory searched for training runs");
  serve_cmd->add_option("--ui", sv.ui, "Static web UI directory");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, g, out, err);
    if (eval_cmd->parsed()) return cmd_evaluate(ea, g, out);
    if (tour_cmd->parsed()) return cmd_tournament(tra, g, out);
    if (enum_cmd->parsed()) return cmd_enumerate(ena, g, out, err);
    if (snap_cmd->parsed()) return cmd_snapshot(sa, g, out);
    if (serve_cmd->parsed()) return cmd_serve(sv, g, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace qarena
