#include "spectune/draft_tree.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>

#include "spectune/errors.hpp"

namespace spectune {

namespace {

struct Proposal {
  double cum_v;
  double confidence;
  Token token;
  int parent;
  std::size_t bucket;
};

bool proposal_before(const Proposal& a, const Proposal& b) {
  if (a.cum_v != b.cum_v) return a.cum_v > b.cum_v;
  if (a.token != b.token) return a.token < b.token;
  return a.parent < b.parent;
}

}  // namespace

std::vector<Token> DraftTree::path_tokens(int node) const {
  std::vector<Token> path;
  for (int i = node; i != kRoot; i = nodes[static_cast<std::size_t>(i)].parent) {
    path.push_back(nodes[static_cast<std::size_t>(i)].token);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

TreeStats DraftTree::stats(int candidates) const {
  return TreeStats{max_depth(), expanded, static_cast<int>(nodes.size()), candidates};
}

DraftTree build_tree(const ModelPair& models, std::span<const Token> context,
                     const Action& action) {
  DraftTree tree = build_tree_at(models, models.bucket_of(context), action);
  tree.root_context.assign(context.begin(), context.end());
  return tree;
}

DraftTree build_tree_at(const ModelPair& models, std::size_t root_bucket, const Action& action) {
  if (!action.feasible()) {
    throw ContractViolation("build_tree: infeasible action " + action.to_string());
  }
  DraftTree tree;
  tree.root_bucket = root_bucket;

  const auto k = static_cast<std::size_t>(action.k);
  const auto tt = static_cast<std::size_t>(action.tt);
  const std::size_t per_parent = std::min(k, static_cast<std::size_t>(models.vocab_size()));
  tree.nodes.reserve(tt);
  tree.layers.reserve(static_cast<std::size_t>(action.d));

  std::vector<int> frontier = {kRoot};
  // Each frontier node's proposals come out of its draft ranking already
  // sorted, so the layer is a k-way merge of those streams cut after `keep`.
  // (Within a stream, cum_v ties between different confidences would need
  // rounding to collide; the merge keeps ranking order there.)
  struct Stream {
    double parent_v;
    std::span<const Token> ranking;
    std::span<const double> probs;
    std::size_t bucket;
    int parent;
  };
  std::vector<Stream> streams;
  streams.reserve(k);
  std::vector<std::pair<Proposal, std::size_t>> heap;
  heap.reserve(k);
  std::vector<std::size_t> next(k);
  auto heap_after = [](const std::pair<Proposal, std::size_t>& a,
                       const std::pair<Proposal, std::size_t>& b) {
    return proposal_before(b.first, a.first);
  };
  auto proposal_at = [&](std::size_t s, std::size_t r) -> std::optional<Proposal> {
    const Stream& st = streams[s];
    if (r >= per_parent) return std::nullopt;
    const double c = st.probs[r];
    if (!(c > 0.0)) return std::nullopt;
    const Token t = st.ranking[r];
    return Proposal{st.parent_v * c, c, t, st.parent, models.extend(st.bucket, t)};
  };

  for (int depth = 1; depth <= action.d; ++depth) {
    streams.clear();
    heap.clear();
    for (int parent : frontier) {
      const bool root = parent == kRoot;
      const TreeNode* node = root ? nullptr : &tree.nodes[static_cast<std::size_t>(parent)];
      const std::size_t bucket = root ? tree.root_bucket : node->bucket;
      streams.push_back({root ? 1.0 : node->cum_v, models.draft_ranking(bucket),
                         models.draft_ranked_probs(bucket), bucket, parent});
    }
    tree.expanded += static_cast<int>(frontier.size());
    for (std::size_t s = 0; s < streams.size(); ++s) {
      next[s] = 1;
      if (auto p = proposal_at(s, 0)) heap.emplace_back(*p, s);
    }
    if (heap.empty()) break;
    std::make_heap(heap.begin(), heap.end(), heap_after);

    const std::size_t keep = std::min(k, tt - tree.nodes.size());
    frontier.clear();
    auto& layer = tree.layers.emplace_back();
    layer.reserve(keep);
    while (layer.size() < keep && !heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), heap_after);
      const auto [p, s] = heap.back();
      heap.pop_back();
      const int index = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({p.token, p.parent, p.confidence, p.cum_v, depth, p.bucket});
      layer.push_back(index);
      frontier.push_back(index);
      if (auto q = proposal_at(s, next[s]++)) {
        heap.emplace_back(*q, s);
        std::push_heap(heap.begin(), heap.end(), heap_after);
      }
    }
    if (tree.nodes.size() >= tt) break;
  }
  return tree;
}

std::vector<int> rerank(const DraftTree& tree, std::size_t budget) {
  const auto& nodes = tree.nodes;
  // True when a should be verified before b.
  auto before = [&](int a, int b) {
    const TreeNode& x = nodes[static_cast<std::size_t>(a)];
    const TreeNode& y = nodes[static_cast<std::size_t>(b)];
    if (x.cum_v != y.cum_v) return x.cum_v > y.cum_v;
    if (x.depth != y.depth) return x.depth < y.depth;
    if (x.token != y.token) return x.token < y.token;
    return tree.path_tokens(a) < tree.path_tokens(b);
  };
  // A child never beats its parent (cum_v cannot grow, and on equal cum_v
  // the shallower node wins), so every prefix of this order is
  // ancestor-closed and a plain sort is enough. Built trees store each layer
  // almost always already in this order, which turns the sort into merges.
  std::size_t listed = 0;
  for (const auto& layer : tree.layers) listed += layer.size();
  std::vector<int> order;
  order.reserve(nodes.size());
  if (listed == nodes.size()) {
    for (const auto& layer : tree.layers) {
      const auto mid = order.insert(order.end(), layer.begin(), layer.end());
      if (!std::is_sorted(mid, order.end(), before)) std::sort(mid, order.end(), before);
      std::inplace_merge(order.begin(), mid, order.end(), before);
    }
  } else {
    order.resize(nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), before);
  }
  order.resize(std::min(budget, order.size()));
  return order;
}

LinearTree linearize(const DraftTree& tree) {
  LinearTree out;
  out.tokens.reserve(tree.nodes.size());
  out.parents.reserve(tree.nodes.size());
  for (const TreeNode& n : tree.nodes) {
    out.tokens.push_back(n.token);
    out.parents.push_back(n.parent);
  }
  return out;
}

DraftTree tree_from_linear(const ModelPair& models, std::span<const Token> context,
                           const LinearTree& linear) {
  if (linear.tokens.size() != linear.parents.size()) {
    throw ContractViolation("tree_from_linear: token/parent length mismatch");
  }
  DraftTree tree;
  tree.root_bucket = models.bucket_of(context);
  tree.root_context.assign(context.begin(), context.end());
  std::vector<bool> is_parent(linear.tokens.size(), false);
  bool root_expanded = false;
  for (std::size_t i = 0; i < linear.tokens.size(); ++i) {
    const int p = linear.parents[i];
    const Token t = linear.tokens[i];
    models.check_token(t);
    if (p != kRoot && (p < 0 || static_cast<std::size_t>(p) >= i)) {
      throw ContractViolation("tree_from_linear: parent must precede child");
    }
    const std::size_t bucket =
        p == kRoot ? tree.root_bucket : tree.nodes[static_cast<std::size_t>(p)].bucket;
    const double parent_v = p == kRoot ? 1.0 : tree.nodes[static_cast<std::size_t>(p)].cum_v;
    const int depth = p == kRoot ? 1 : tree.nodes[static_cast<std::size_t>(p)].depth + 1;
    const double c = models.draft_row(bucket)[static_cast<std::size_t>(t)];
    tree.nodes.push_back({t, p, c, parent_v * c, depth, models.extend(bucket, t)});
    if (static_cast<int>(tree.layers.size()) < depth) tree.layers.resize(static_cast<std::size_t>(depth));
    tree.layers[static_cast<std::size_t>(depth - 1)].push_back(static_cast<int>(i));
    if (p == kRoot) {
      root_expanded = true;
    } else {
      is_parent[static_cast<std::size_t>(p)] = true;
    }
  }
  tree.expanded = static_cast<int>(std::count(is_parent.begin(), is_parent.end(), true)) +
                  (root_expanded ? 1 : 0);
  return tree;
}

void check_tree_invariants(const DraftTree& tree, const Action& action) {
  auto fail = [](const std::string& what) { throw ContractViolation("draft tree: " + what); };
  if (tree.nodes.size() > static_cast<std::size_t>(action.tt)) fail("more nodes than TT");
  if (tree.max_depth() > action.d) fail("deeper than d");
  for (const auto& layer : tree.layers) {
    if (layer.size() > static_cast<std::size_t>(action.k)) fail("layer wider than k");
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    if (n.parent != kRoot && (n.parent < 0 || static_cast<std::size_t>(n.parent) >= i)) {
      fail("parent does not precede child");
    }
    const int parent_depth =
        n.parent == kRoot ? 0 : tree.nodes[static_cast<std::size_t>(n.parent)].depth;
    if (n.depth != parent_depth + 1) fail("depth is not parent depth + 1");
    if (!(n.confidence > 0.0 && n.confidence <= 1.0)) fail("confidence outside (0, 1]");
    const double pv = tree.parent_cum_v(static_cast<int>(i));
    if (n.cum_v != pv * n.confidence) fail("cum_v is not parent cum_v * confidence");
    if (n.cum_v > pv) fail("cum_v increases along a path");
  }
}

}  // namespace spectune
