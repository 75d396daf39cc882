#include <doctest.h>

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>

#include "qarena/game.hpp"
#include "qarena/playout.hpp"
#include "qarena/rng.hpp"

using namespace qarena;

namespace {

GameState play(GameId game, const std::vector<std::string>& moves) {
  GameState s = initial_state(game);
  for (const auto& m : moves) s = apply(s, parse_action(game, m));
  return s;
}

std::vector<std::string> texts(GameId game, const std::vector<Action>& actions) {
  std::vector<std::string> out;
  for (const auto& a : actions) out.push_back(to_string(game, a));
  return out;
}

int count_cells(const GameState& s, std::uint8_t v) {
  return static_cast<int>(std::count(s.board.begin(), s.board.begin() + 9, v));
}

void check_invariants(const GameState& s) {
  switch (s.game) {
    case GameId::TicTacToe: {
      const int diff = count_cells(s, 1) - count_cells(s, 2);
      REQUIRE((diff == 0 || diff == 1));
      break;
    }
    case GameId::NineMensMorris:
      for (Player p : {Player::P1, Player::P2}) {
        REQUIRE(morris::pieces_on_board(s, p) + s.in_hand[index_of(p)] +
                    morris::captured_from(s, p) ==
                kMorrisPieces);
      }
      break;
    case GameId::Mancala:
      REQUIRE(mancala::seed_total(s) == kMancalaSeeds);
      break;
  }
}

}  // namespace

TEST_SUITE("game-core") {
  TEST_CASE("initial states") {
    const GameState t = initial_state(GameId::TicTacToe);
    CHECK(t.to_move == Player::P1);
    CHECK(t.ply == 0);
    CHECK(count_cells(t, 0) == 9);

    const GameState m = initial_state(GameId::Mancala);
    for (int i = 0; i < 14; ++i) CHECK(m.board[i] == (i == 6 || i == 13 ? 0 : 4));
    CHECK(mancala::seed_total(m) == 48);

    const GameState n = initial_state(GameId::NineMensMorris);
    CHECK(n.phase == Phase::Placement);
    CHECK(n.in_hand[0] == 9);
    CHECK(n.in_hand[1] == 9);
    CHECK(morris::pieces_on_board(n, Player::P1) == 0);
    CHECK(morris::pieces_on_board(n, Player::P2) == 0);
  }

  TEST_CASE("legal actions at the start") {
    auto ttt = legal_actions(initial_state(GameId::TicTacToe));
    REQUIRE(ttt.size() == 9);
    for (int i = 0; i < 9; ++i) CHECK(ttt[i] == Action::place(i));
    CHECK(legal_actions(initial_state(GameId::Mancala)).size() == 6);
    CHECK(legal_actions(initial_state(GameId::NineMensMorris)).size() == 24);
  }

  TEST_CASE("tictactoe with two cells taken has seven actions") {
    const GameState s = play(GameId::TicTacToe, {"0", "4"});
    CHECK(texts(GameId::TicTacToe, legal_actions(s)) ==
          std::vector<std::string>{"1", "2", "3", "5", "6", "7", "8"});
  }

  TEST_CASE("tictactoe placement flips the mover") {
    const GameState s = play(GameId::TicTacToe, {"4"});
    CHECK(s.board[4] == 1);
    CHECK(s.to_move == Player::P2);
    CHECK(s.ply == 1);
  }

  TEST_CASE("occupied cell is illegal") {
    const GameState s = play(GameId::TicTacToe, {"4"});
    try {
      apply(s, Action::place(4));
      FAIL("expected illegal_action");
    } catch (const Error& e) {
      CHECK(e.code() == "illegal_action");
      CHECK(e.detail() == "4");
    }
  }

  TEST_CASE("tictactoe outcomes") {
    const GameState top = play(GameId::TicTacToe, {"0", "3", "1", "4", "2"});
    CHECK(outcome(top) == Outcome::win(Player::P1));
    CHECK_THROWS_WITH_AS(legal_actions(top), doctest::Contains("terminal"), Error);

    // X O X / X O O / O X X
    const GameState full =
        play(GameId::TicTacToe, {"0", "1", "2", "4", "3", "5", "7", "6", "8"});
    CHECK(outcome(full) == Outcome::draw());
    CHECK_FALSE(outcome(play(GameId::TicTacToe, {"0"})).has_value());
  }

  TEST_CASE("mancala sowing into the bank grants another turn") {
    const GameState s = play(GameId::Mancala, {"2"});
    CHECK(s.board[2] == 0);
    CHECK(s.board[3] == 5);
    CHECK(s.board[4] == 5);
    CHECK(s.board[5] == 5);
    CHECK(s.board[6] == 1);
    CHECK(s.to_move == Player::P1);
  }

  TEST_CASE("mancala ordinary sow passes the turn") {
    const GameState s = play(GameId::Mancala, {"0"});
    CHECK(s.board[0] == 0);
    CHECK(s.board[4] == 5);
    CHECK(s.board[6] == 0);
    CHECK(s.to_move == Player::P2);
  }

  TEST_CASE("mancala capture takes the opposite house") {
    GameState s = initial_state(GameId::Mancala);
    s.board[0] = 1;
    s.board[1] = 0;
    s.board[6] = 7;
    REQUIRE(mancala::seed_total(s) == 48);
    const GameState t = apply(s, Action::sow(0));
    CHECK(t.board[1] == 0);
    CHECK(t.board[11] == 0);
    CHECK(t.board[6] == 12);
    CHECK(t.to_move == Player::P2);
    CHECK(mancala::seed_total(t) == 48);
  }

  TEST_CASE("mancala no capture when the opposite house is empty") {
    GameState s = initial_state(GameId::Mancala);
    s.board[0] = 1;
    s.board[1] = 0;
    s.board[11] = 0;
    s.board[6] = 7;
    s.board[13] = 4;
    const GameState t = apply(s, Action::sow(0));
    CHECK(t.board[1] == 1);
    CHECK(t.board[6] == 7);
  }

  TEST_CASE("mancala sowing skips the opponent bank") {
    GameState s = initial_state(GameId::Mancala);
    s.board[5] = 10;
    s.board[6] = 4;
    s.board[0] = 0;
    s.board[1] = 0;
    s.board[2] = 2;
    REQUIRE(mancala::seed_total(s) == 48);
    const GameState t = apply(s, Action::sow(5));
    CHECK(t.board[13] == 0);
    CHECK(t.board[6] == 5);
    // 10 seeds from house 5: bank, 7..12, skip 13, then 0, 1 and 2.
    CHECK(t.board[0] == 1);
    CHECK(t.board[1] == 1);
    CHECK(t.board[2] == 3);
    CHECK(t.to_move == Player::P2);
    CHECK(mancala::seed_total(t) == 48);
  }

  TEST_CASE("mancala empty houses are not legal") {
    const GameState s = play(GameId::Mancala, {"0", "0"});
    CHECK(texts(GameId::Mancala, legal_actions(s)) ==
          std::vector<std::string>{"1", "2", "3", "4", "5"});
  }

  TEST_CASE("mancala end of game counts house seeds for their owner") {
    GameState s = initial_state(GameId::Mancala);
    s.board.fill(0);
    s.board[6] = 25;
    s.board[7] = 3;
    s.board[13] = 20;
    s.to_move = Player::P1;
    CHECK(outcome(s) == Outcome::win(Player::P1));
    CHECK(mancala::score(s, Player::P1) == 25);
    CHECK(mancala::score(s, Player::P2) == 23);

    s.board[6] = 24;
    s.board[7] = 4;
    CHECK(outcome(s) == Outcome::draw());
  }

  TEST_CASE("morris mill enters removal for the mover") {
    const GameState s = play(GameId::NineMensMorris, {"P0", "P21", "P1", "P22", "P2"});
    CHECK(s.phase == Phase::Removal);
    CHECK(s.to_move == Player::P1);
    CHECK(texts(GameId::NineMensMorris, legal_actions(s)) ==
          std::vector<std::string>{"R21", "R22"});

    const GameState t = apply(s, parse_action(GameId::NineMensMorris, "R21"));
    CHECK(t.phase == Phase::Placement);
    CHECK(t.to_move == Player::P2);
    CHECK(morris::captured_from(t, Player::P2) == 1);
    CHECK(t.board[21] == 0);
  }

  TEST_CASE("morris pieces in a mill are protected") {
    const GameState s = play(GameId::NineMensMorris, {"P3", "P21", "P4", "P22", "P6", "P23", "R6",
                                                      "P7", "P15", "P5"});
    REQUIRE(s.phase == Phase::Removal);
    CHECK(texts(GameId::NineMensMorris, legal_actions(s)) == std::vector<std::string>{"R15"});
  }

  TEST_CASE("morris mill pieces are removable when every piece is in a mill") {
    const GameState s =
        play(GameId::NineMensMorris, {"P3", "P21", "P4", "P22", "P6", "P23", "R6", "P5"});
    REQUIRE(s.phase == Phase::Removal);
    CHECK(texts(GameId::NineMensMorris, legal_actions(s)) ==
          std::vector<std::string>{"R21", "R22", "R23"});
  }

  TEST_CASE("morris movement is restricted to neighbours") {
    CHECK(morris::neighbours(0) == std::vector<int>{1, 9});
    CHECK(morris::neighbours(4) == std::vector<int>{1, 3, 5, 7});
    // Play out placement without mills, then check the movement list.
    Rng rng(5);
    GameState s = initial_state(GameId::NineMensMorris);
    while (!outcome(s) && s.phase != Phase::Movement) {
      const auto acts = legal_actions(s);
      s = apply(s, acts[rng.uniform_index(acts.size())]);
    }
    if (!outcome(s)) {
      for (const Action& a : legal_actions(s)) {
        if (a.kind != Action::Kind::Move) continue;
        const auto& adj = morris::neighbours(a.from);
        CHECK(std::find(adj.begin(), adj.end(), a.to) != adj.end());
        CHECK(s.board[a.to] == 0);
      }
    }
  }

  TEST_CASE("canonical action order is ascending") {
    Rng rng(11);
    for (GameId g : kAllGames) {
      GameState s = initial_state(g);
      for (int i = 0; i < 300 && !outcome(s); ++i) {
        const auto acts = legal_actions(s);
        CHECK(std::is_sorted(acts.begin(), acts.end()));
        s = apply(s, acts[rng.uniform_index(acts.size())]);
      }
    }
  }

  TEST_CASE("state keys") {
    for (GameId g : kAllGames) CHECK(state_key(initial_state(g)) == state_key(initial_state(g)));
    CHECK(state_key(play(GameId::TicTacToe, {"0"})) != state_key(play(GameId::TicTacToe, {"1"})));
    // Same position through different move orders.
    CHECK(state_key(play(GameId::TicTacToe, {"0", "4", "8"})) ==
          state_key(play(GameId::TicTacToe, {"8", "4", "0"})));
  }

  TEST_CASE("morris keys separate phase and hand counts") {
    const GameState removal = play(GameId::NineMensMorris, {"P0", "P21", "P1", "P22", "P2"});
    GameState same_board = removal;
    same_board.phase = Phase::Placement;
    CHECK(state_key(removal) != state_key(same_board));
    GameState other_hand = removal;
    other_hand.in_hand[0] = 5;
    CHECK(state_key(removal) != state_key(other_hand));
  }

  TEST_CASE("state key is injective over the tictactoe closure") {
    std::map<StateKey, GameState> seen;
    std::deque<GameState> queue{initial_state(GameId::TicTacToe)};
    while (!queue.empty()) {
      GameState s = queue.front();
      queue.pop_front();
      s.ply = 0;
      auto [it, inserted] = seen.emplace(state_key(s), s);
      if (!inserted) {
        REQUIRE(it->second == s);
        continue;
      }
      if (outcome(s)) continue;
      for (const Action& a : legal_actions(s)) queue.push_back(apply(s, a));
    }
    CHECK(seen.size() == 5478);
  }

  TEST_CASE("reachable state counts") {
    CHECK(enumerate_reachable(GameId::TicTacToe, 1000000) == 5478);
    CHECK(enumerate_reachable(GameId::TicTacToe, 1000000, 1) == 10);
    CHECK(enumerate_reachable(GameId::TicTacToe, 1000000, 0) == 1);
    for (GameId g : kAllGames) {
      try {
        enumerate_reachable(g, 1);
        FAIL("expected cap_exceeded");
      } catch (const CapExceeded& e) {
        CHECK(e.code() == "cap_exceeded");
        CHECK(e.partial_count() == 1);
      }
    }
  }

  TEST_CASE("action text round trip") {
    for (GameId g : kAllGames) {
      Rng rng(3);
      GameState s = initial_state(g);
      for (int i = 0; i < 200 && !outcome(s); ++i) {
        for (const Action& a : legal_actions(s)) CHECK(parse_action(g, to_string(g, a)) == a);
        const auto acts = legal_actions(s);
        s = apply(s, acts[rng.uniform_index(acts.size())]);
      }
    }
    CHECK_THROWS_AS(parse_action(GameId::TicTacToe, "9"), Error);
    CHECK_THROWS_AS(parse_action(GameId::NineMensMorris, "X1"), Error);
  }

  TEST_CASE("playout format round trip and replay") {
    for (GameId g : kAllGames) {
      Rng rng(17);
      Playout p;
      p.game = g;
      GameState s = initial_state(g);
      while (!outcome(s)) {
        const auto acts = legal_actions(s);
        p.actions.push_back(acts[rng.uniform_index(acts.size())]);
        s = apply(s, p.actions.back());
      }
      p.result = outcome(s);
      const std::string line = format_playout(p);
      const Playout back = parse_playout(line);
      CHECK(back.game == g);
      CHECK(back.actions == p.actions);
      CHECK(back.result == p.result);
      CHECK(format_playout(back) == line);
      CHECK(state_key(replay(g, back.actions)) == state_key(s));
    }
    const Playout empty = parse_playout("tictactoe - none");
    CHECK(empty.actions.empty());
    CHECK_FALSE(empty.result.has_value());
    CHECK_THROWS_AS(replay(GameId::TicTacToe, std::vector<Action>{Action::place(0), Action::place(0)}),
                    Error);
  }
}

TEST_SUITE("game-core properties") {
  // Random playouts through the checked apply, at least 1e5 plies per game.
  TEST_CASE("legality closure, invariants, determinism and the removal guard") {
    for (GameId g : kAllGames) {
      CAPTURE(game_name(g));
      Rng rng(Rng::derive_seed(2024, static_cast<std::uint64_t>(g)));
      std::size_t plies = 0;
      std::size_t removals = 0;
      std::size_t games = 0;
      while (plies < 100000) {
        GameState s = initial_state(g);
        check_invariants(s);
        while (!outcome(s)) {
          const auto acts = legal_actions(s);
          REQUIRE_FALSE(acts.empty());
          const Action a = acts[rng.uniform_index(acts.size())];
          const GameState next = apply(s, a);
          REQUIRE(state_key(apply(s, a)) == state_key(next));
          check_invariants(next);
          if (next.phase == Phase::Removal) {
            ++removals;
            REQUIRE(s.phase != Phase::Removal);
            REQUIRE(a.kind != Action::Kind::Remove);
            REQUIRE(next.to_move == s.to_move);
            REQUIRE(morris::in_mill(next, a.to));
          }
          s = next;
          ++plies;
        }
        const auto o = outcome(s);
        if (o->winner) CHECK(o->value_for(*o->winner) == -o->value_for(opponent(*o->winner)));
        ++games;
      }
      CHECK(plies >= 100000);
      if (g == GameId::NineMensMorris) CHECK(removals > 0);
      MESSAGE(game_name(g) << ": " << plies << " plies over " << games << " games");
    }
  }

  TEST_CASE("mancala seed conservation over long random play") {
    Rng rng(99);
    std::size_t plies = 0;
    while (plies < 200000) {
      GameState s = initial_state(GameId::Mancala);
      while (!outcome(s)) {
        const auto acts = legal_actions(s);
        s = apply_legal(s, acts[rng.uniform_index(acts.size())]);
        REQUIRE(mancala::seed_total(s) == 48);
        ++plies;
      }
    }
  }

  TEST_CASE("morris games end by the ply cap at the latest") {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
      GameState s = initial_state(GameId::NineMensMorris);
      while (!outcome(s)) {
        const auto acts = legal_actions(s);
        s = apply(s, acts[rng.uniform_index(acts.size())]);
      }
      CHECK(s.ply <= Rules{}.morris_ply_cap);
    }
  }
}
