#ifndef SPECTUNE_REPORT_HPP_
#define SPECTUNE_REPORT_HPP_

#include <iosfwd>
#include <span>

#include "json.hpp"
#include "spectune/bench.hpp"
#include "spectune/draft_tree.hpp"
#include "spectune/engine.hpp"

namespace spectune {

// JSON views of the run artifacts. Nothing here reads a clock, so equal
// inputs give equal documents; wall-clock figures go to the metadata sidecar.
nlohmann::json action_json(const Action& a);
nlohmann::json train_report_json(const TrainReport& report);
nlohmann::json eval_report_json(const EvalReport& report);
nlohmann::json bench_report_json(const BenchReport& report);
nlohmann::json sweep_json(std::span<const SweepPoint> points);
nlohmann::json profile_json(const ProfileBreakdown& profile);
nlohmann::json ablation_json(std::span<const AblationRow> rows);
// Nodes in index order; `order` is the rerank result (may be empty).
nlohmann::json tree_json(const DraftTree& tree, const Action& action,
                         std::span<const int> order);

// Aligned text tables.
void write_train_text(std::ostream& out, const TrainReport& report);
void write_eval_text(std::ostream& out, const EvalReport& report);
void write_bench_text(std::ostream& out, const BenchReport& report);
void write_sweep_text(std::ostream& out, std::span<const SweepPoint> points);
void write_profile_text(std::ostream& out, const ProfileBreakdown& profile);

// Graphviz; reranked nodes are drawn filled.
void write_tree_dot(std::ostream& out, const DraftTree& tree, std::span<const int> order);

// Every conditional row: bucket, the context tokens it stands for (oldest
// first), the row's class, epsilon, then target and draft probabilities per
// next token.
void write_model_csv(std::ostream& out, const ModelPair& models);

}  // namespace spectune

#endif  // SPECTUNE_REPORT_HPP_
