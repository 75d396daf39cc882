#include "qarena/qtable.hpp"

#include <algorithm>
#include <cmath>

namespace qarena {

double QTable::max_value(const StateKey& key) const {
  const auto* r = find(key);
  if (!r || r->empty()) return 0.0;
  return *std::max_element(r->begin(), r->end());
}

double QTable::max_abs_value() const {
  double m = 0.0;
  for (const auto& [key, values] : entries_) {
    for (double v : values) m = std::max(m, std::abs(v));
  }
  return m;
}

}  // namespace qarena
