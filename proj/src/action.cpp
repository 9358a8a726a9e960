#include "spectune/action.hpp"

#include <charconv>

namespace spectune {

bool Action::feasible() const {
  if (tt < 1 || d < 1 || k < 1) return false;
  // Saturating k^(d-1); stops as soon as the bound is met.
  long long cap = 1;
  for (int i = 0; i < d - 1; ++i) {
    cap *= k;
    if (cap >= tt) return true;
  }
  return tt <= cap;
}

std::string Action::to_string() const {
  return std::to_string(tt) + "," + std::to_string(d) + "," + std::to_string(k);
}

const std::vector<Action>& enumerate_actions() {
  static const std::vector<Action> actions = [] {
    std::vector<Action> out;
    for (int tt : kTotalTokenChoices) {
      for (int d : kDepthChoices) {
        for (int k : kTopKChoices) {
          Action a{tt, d, k, -1};
          if (!a.feasible()) continue;
          a.index = static_cast<int>(out.size());
          out.push_back(a);
        }
      }
    }
    return out;
  }();
  return actions;
}

std::optional<Action> find_action(int tt, int d, int k) {
  for (const Action& a : enumerate_actions()) {
    if (a.tt == tt && a.d == d && a.k == k) return a;
  }
  return std::nullopt;
}

std::optional<Action> parse_action(std::string_view text) {
  int values[3] = {0, 0, 0};
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 3; ++i) {
    auto [next, ec] = std::from_chars(p, end, values[i]);
    if (ec != std::errc()) return std::nullopt;
    p = next;
    if (i < 2) {
      if (p == end || *p != ',') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  Action a{values[0], values[1], values[2], -1};
  if (auto on_grid = find_action(a.tt, a.d, a.k)) return on_grid;
  if (!a.feasible()) return std::nullopt;
  return a;
}

}  // namespace spectune
