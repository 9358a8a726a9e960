#ifndef SPECTUNE_ACTION_HPP_
#define SPECTUNE_ACTION_HPP_

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spectune {

inline constexpr std::array<int, 6> kTotalTokenChoices = {32, 48, 64, 80, 96, 128};
inline constexpr std::array<int, 6> kDepthChoices = {3, 4, 5, 6, 7, 8};
inline constexpr std::array<int, 5> kTopKChoices = {8, 12, 16, 20, 32};

// Upper limits on one draft tree: total non-root tokens, depth, per-layer
// width. `index` is the position in enumerate_actions(), or -1 for an
// off-grid action (tests build those).
struct Action {
  int tt = 0;
  int d = 0;
  int k = 0;
  int index = -1;

  // tt <= k^(d-1)
  bool feasible() const;
  std::string to_string() const;  // "tt,d,k"

  friend bool operator==(const Action& a, const Action& b) {
    return a.tt == b.tt && a.d == b.d && a.k == b.k;
  }
};

// All feasible grid triples in lexicographic (tt, d, k) order. Stable.
const std::vector<Action>& enumerate_actions();

std::optional<Action> find_action(int tt, int d, int k);

// Parses "tt,d,k"; the result carries its grid index when on-grid.
std::optional<Action> parse_action(std::string_view text);

}  // namespace spectune

#endif  // SPECTUNE_ACTION_HPP_
