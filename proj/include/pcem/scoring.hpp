#ifndef PCEM_SCORING_HPP_
#define PCEM_SCORING_HPP_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcem/corpus.hpp"
#include "pcem/taxonomy.hpp"

namespace pcem {

// Hard scores come from (weak) labels and are integers in [0, d]. Soft scores
// are posterior probabilities and sum to 1.
enum class ScoreMode { kHard, kSoft };

struct PathScoreVector {
  std::vector<double> scores;
  ScoreMode mode = ScoreMode::kHard;

  std::size_t size() const { return scores.size(); }
  double total() const;
  // Index of the largest score, lowest index on ties.
  std::size_t argmax() const;
};

// Node score S_i(c), indexed by node id. The root entry is always 0.
using NodeScores = std::vector<double>;

// 1 for every labeled node, 0 elsewhere; a dummy node takes the score of the
// real leaf it extends. Labels are used as given (call complete_path() first
// to credit the ancestors of a leaf).
NodeScores node_scores_from_gold(const GoldLabels& labels, const Taxonomy& t);

// S_ij = sum of node scores along path j.
PathScoreVector path_scores(const NodeScores& node_scores, const PathTable& paths);

// Path scores of the per-depth argmax classes. The argmax nodes need not form
// a path.
PathScoreVector scores_from_weak(const WeakSimilarities& sims, const Taxonomy& t, const PathTable& paths);

// Wraps a posterior as soft scores. Throws Error unless entries are
// non-negative and sum to 1 within 1e-9.
PathScoreVector soft_scores_from_posterior(std::vector<double> posterior);

// Hard scores for either kind of supervision.
PathScoreVector supervised_scores(const Supervision& label, const Taxonomy& t, const PathTable& paths);

// Path whose leaf is `leaf` or the end of `leaf`'s dummy chain.
std::optional<std::size_t> path_of_real_leaf(const Taxonomy& t, const PathTable& paths, NodeId leaf);

// One-hot scores at the labeled leaf's path, as used by the flat baselines.
// nullopt when the supervision does not name a leaf (gold labels that stop at
// an internal node).
std::optional<PathScoreVector> leaf_one_hot_scores(const Supervision& label, const Taxonomy& t,
                                                   const PathTable& paths);

// Debug dump: `doc_id,path_index,score` rows with a header line.
void write_score_csv(std::ostream& out, std::span<const std::string> doc_ids,
                     std::span<const PathScoreVector> rows);

}  // namespace pcem

#endif  // PCEM_SCORING_HPP_
