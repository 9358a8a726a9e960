#ifndef SPECTUNE_DRAFT_TREE_HPP_
#define SPECTUNE_DRAFT_TREE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "spectune/action.hpp"
#include "spectune/lm_sim.hpp"

namespace spectune {

// Parent index of first-layer nodes. The root itself (the last accepted
// token, cumulative confidence 1) is implicit and not stored in `nodes`.
inline constexpr int kRoot = -1;

struct TreeNode {
  Token token = 0;
  int parent = kRoot;
  double confidence = 0.0;  // draft probability given the path
  double cum_v = 0.0;       // product of confidences from the root
  int depth = 0;            // 1 for children of the root
  std::size_t bucket = 0;   // model row for extending this node
};

struct DraftTree {
  std::vector<Token> root_context;
  std::size_t root_bucket = 0;
  std::vector<TreeNode> nodes;
  // layers[i] holds the indices of nodes at depth i + 1.
  std::vector<std::vector<int>> layers;
  // Number of nodes (root included) whose children were proposed.
  int expanded = 0;

  int max_depth() const { return static_cast<int>(layers.size()); }
  double parent_cum_v(int node) const {
    const int p = nodes[static_cast<std::size_t>(node)].parent;
    return p == kRoot ? 1.0 : nodes[static_cast<std::size_t>(p)].cum_v;
  }
  // Tokens from the root's child down to `node`.
  std::vector<Token> path_tokens(int node) const;
  TreeStats stats(int candidates) const;
};

// Layer-wise expansion: every node of the current layer proposes its top-k
// draft tokens; the k proposals with the highest cumulative confidence form
// the next layer. Stops at depth d, on an empty layer, or once the node count
// reaches TT (the last layer is cut to land exactly on TT).
DraftTree build_tree(const ModelPair& models, std::span<const Token> context,
                     const Action& action);
// Same, for a context already reduced to its model row; root_context is left
// empty. The generation loop uses this to avoid rescanning a long context.
DraftTree build_tree_at(const ModelPair& models, std::size_t root_bucket,
                        const Action& action);

// Up to `budget` non-root node indices ordered by cum_v desc, then depth asc,
// then token asc, then path. The result is ancestor-closed.
std::vector<int> rerank(const DraftTree& tree, std::size_t budget);

struct LinearTree {
  std::vector<Token> tokens;
  std::vector<int> parents;  // kRoot or an earlier position
};

LinearTree linearize(const DraftTree& tree);

// Rebuilds a tree from its flattening, recomputing confidences from the draft
// model. Throws ContractViolation if a parent index does not precede its child.
DraftTree tree_from_linear(const ModelPair& models,
                           std::span<const Token> context,
                           const LinearTree& linear);

// Throws ContractViolation when the tree breaks the budget, depth, width,
// ordering or confidence-product invariants for `action`.
void check_tree_invariants(const DraftTree& tree, const Action& action);

}  // namespace spectune

#endif  // SPECTUNE_DRAFT_TREE_HPP_
