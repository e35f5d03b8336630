#include "pcem/scoring.hpp"

#include <cmath>
#include <ostream>

#include "pcem/error.hpp"

namespace pcem {

double PathScoreVector::total() const {
  double s = 0.0;
  for (double v : scores) s += v;
  return s;
}

std::size_t PathScoreVector::argmax() const {
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return best;
}

NodeScores node_scores_from_gold(const GoldLabels& labels, const Taxonomy& t) {
  NodeScores s(t.size(), 0.0);
  for (NodeId id : labels.nodes) {
    if (index(id) >= t.size()) throw LabelError("label refers to an unknown node");
    if (t.node(id).depth > t.depth()) throw LabelError("label deeper than the hierarchy");
    if (id == t.root()) throw LabelError("the root cannot be a label");
    s[index(id)] = 1.0;
  }
  for (const TaxonomyNode& n : t.nodes()) {
    if (n.is_dummy) s[index(n.id)] = s[index(*n.extends)];
  }
  return s;
}

PathScoreVector path_scores(const NodeScores& node_scores, const PathTable& paths) {
  PathScoreVector out;
  out.scores.resize(paths.size(), 0.0);
  for (std::size_t j = 0; j < paths.size(); ++j) {
    for (NodeId id : paths.path(j)) out.scores[j] += node_scores.at(index(id));
  }
  return out;
}

PathScoreVector scores_from_weak(const WeakSimilarities& sims, const Taxonomy& t, const PathTable& paths) {
  return path_scores(node_scores_from_gold(weak_label_nodes(sims, t), t), paths);
}

PathScoreVector soft_scores_from_posterior(std::vector<double> posterior) {
  double sum = 0.0;
  for (double p : posterior) {
    if (!(p >= 0.0)) throw Error("posterior has a negative or NaN entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("posterior does not sum to 1");
  return PathScoreVector{std::move(posterior), ScoreMode::kSoft};
}

PathScoreVector supervised_scores(const Supervision& label, const Taxonomy& t, const PathTable& paths) {
  if (const auto* gold = std::get_if<GoldLabels>(&label)) {
    return path_scores(node_scores_from_gold(*gold, t), paths);
  }
  return scores_from_weak(std::get<WeakSimilarities>(label), t, paths);
}

std::optional<std::size_t> path_of_real_leaf(const Taxonomy& t, const PathTable& paths, NodeId leaf) {
  NodeId cur = leaf;
  while (!t.is_leaf(cur)) {
    const auto& kids = t.node(cur).children;
    if (kids.size() != 1 || !t.node(kids.front()).is_dummy) return std::nullopt;
    cur = kids.front();
  }
  return paths.path_of_leaf(cur);
}

std::optional<PathScoreVector> leaf_one_hot_scores(const Supervision& label, const Taxonomy& t,
                                                   const PathTable& paths) {
  GoldLabels nodes = std::holds_alternative<GoldLabels>(label)
                         ? std::get<GoldLabels>(label)
                         : weak_label_nodes(std::get<WeakSimilarities>(label), t);
  if (nodes.nodes.empty()) return std::nullopt;
  auto j = path_of_real_leaf(t, paths, nodes.nodes.back());
  if (!j) return std::nullopt;
  PathScoreVector out;
  out.scores.assign(paths.size(), 0.0);
  out.scores[*j] = 1.0;
  return out;
}

void write_score_csv(std::ostream& out, std::span<const std::string> doc_ids,
                     std::span<const PathScoreVector> rows) {
  if (doc_ids.size() != rows.size()) throw DimensionError("score dump: id/row count mismatch");
  out << "doc_id,path_index,score\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out << doc_ids[i] << ',' << j << ',' << rows[i].scores[j] << '\n';
    }
  }
}

}  // namespace pcem
