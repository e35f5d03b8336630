#ifndef PCEM_BASELINES_HPP_
#define PCEM_BASELINES_HPP_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcem/corpus.hpp"
#include "pcem/model.hpp"
#include "pcem/taxonomy.hpp"

namespace pcem {

// Flat baselines: one class per leaf path, trained on one-hot scores at the
// labeled leaf (no credit for correct ancestors). Documents whose gold labels
// stop above the leaves carry no leaf class and are left out of the labeled
// rows. Predictions are projected onto the leaf's ancestor chain.
PathModel train_flat_nb(const Dataset& data, const Taxonomy& t, const PathTable& paths);
EmResult train_flat_em(const Dataset& data, const Taxonomy& t, const PathTable& paths, const EmConfig& cfg,
                       const EmObserver& observer = {});

// Multinomial classifier over the children of one internal node.
struct LocalClassifier {
  NodeId node{};
  std::vector<NodeId> children;
  PathModel model;

  bool operator==(const LocalClassifier&) const = default;
};

// One local classifier per internal node (dummies included), applied from the
// root down.
class TopDownModel {
 public:
  TopDownModel() = default;
  TopDownModel(Taxonomy t, std::vector<LocalClassifier> locals);

  const Taxonomy& taxonomy() const { return taxonomy_; }
  std::span<const LocalClassifier> locals() const { return locals_; }
  const LocalClassifier& local(NodeId internal) const;

  bool operator==(const TopDownModel& other) const { return locals_ == other.locals_; }

 private:
  Taxonomy taxonomy_;
  std::vector<LocalClassifier> locals_;
  std::vector<std::optional<std::size_t>> local_of_node_;
};

// How unlabeled documents reach local classifiers during top-down EM.
enum class RoutingMode {
  kSoft,  // weight of a child = weight of its parent * local posterior
  kHard,  // all weight follows the greedy argmax route
};

struct TopDownOptions {
  RoutingMode routing = RoutingMode::kSoft;
};

struct TopDownResult {
  TopDownModel model;
  EmTrace trace;
};

// Each local classifier is trained on the labeled documents whose labels
// include its node (the root takes every document) and one of its children.
// A node no document reaches keeps the smoothing-only model.
TopDownModel train_topdown_nb(const Dataset& data, const Taxonomy& t);

// Top-down NB initializer, then EM in which unlabeled documents are routed
// to every local classifier with the weights of routing_weights(). The trace
// objective sums the local classifiers' objectives under the current routing;
// routing moves with the parameters, so it is recorded but not monotone.
TopDownResult train_topdown_em(const Dataset& data, const Taxonomy& t, const EmConfig& cfg,
                               const TopDownOptions& opts = {});

// Probability of reaching each node (indexed by node id) when descending from
// the root. Children of a node always sum to the node's own weight.
std::vector<double> routing_weights(const Document& doc, const TopDownModel& m,
                                    RoutingMode mode = RoutingMode::kSoft);

// Greedy descent, argmax child at each step (lowest child index on ties).
// Returns the visited classes without root and dummies.
std::vector<NodeId> predict_topdown(const Document& doc, const TopDownModel& m);

// Same conventions as the path-model text format:
//   pcem-topdown 1
//   kind <kind>
//   vocab <V> / words
//   locals <N>
//   per local: `node<TAB><name><TAB><child>...`, `prior ...`, one `word ...`
//   line per child
void save_topdown_model(std::ostream& out, const std::string& kind, const TopDownModel& m,
                        const Vocabulary& vocab);
struct SavedTopDownModel {
  std::string kind;
  std::vector<std::string> vocab;
  TopDownModel model;
};
// `t` must be the taxonomy the model was trained on.
SavedTopDownModel load_topdown_model(std::istream& in, const Taxonomy& t);

}  // namespace pcem

#endif  // PCEM_BASELINES_HPP_
