#include "qarena/playout.hpp"

#include <sstream>

namespace qarena {

std::string format_playout(const Playout& playout) {
  std::string line(game_name(playout.game));
  line.push_back(' ');
  if (playout.actions.empty()) {
    line.push_back('-');
  } else {
    for (std::size_t i = 0; i < playout.actions.size(); ++i) {
      if (i > 0) line.push_back(';');
      line += to_string(playout.game, playout.actions[i]);
    }
  }
  line.push_back(' ');
  line += playout.result ? to_string(*playout.result) : "none";
  return line;
}

Playout parse_playout(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string game, actions, result, extra;
  if (!(in >> game >> actions >> result) || (in >> extra)) {
    throw Error("bad_playout", "expected three fields: '" + std::string(line) + "'");
  }
  Playout playout;
  playout.game = parse_game(game);
  if (actions != "-") {
    std::string_view rest = actions;
    while (!rest.empty()) {
      const auto semi = rest.find(';');
      playout.actions.push_back(parse_action(playout.game, rest.substr(0, semi)));
      if (semi == std::string_view::npos) break;
      rest.remove_prefix(semi + 1);
    }
  }
  if (result != "none") playout.result = parse_outcome(result);
  return playout;
}

GameState replay(GameId game, std::span<const Action> actions) {
  GameState s = initial_state(game);
  for (const Action& a : actions) s = apply(s, a);
  return s;
}

}  // namespace qarena
