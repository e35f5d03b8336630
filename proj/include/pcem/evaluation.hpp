#ifndef PCEM_EVALUATION_HPP_
#define PCEM_EVALUATION_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pcem/baselines.hpp"
#include "pcem/corpus.hpp"
#include "pcem/model.hpp"
#include "pcem/taxonomy.hpp"

namespace pcem {

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  double precision() const;
  double recall() const;
  // 0 when precision + recall is 0, including the all-zero case.
  double f1() const;
};

// Per-class TP/FP/FN over every non-root, non-dummy class.
class ConfusionCounts {
 public:
  explicit ConfusionCounts(const Taxonomy& t);
  // Raw counts, one entry per class; for tests and re-aggregation.
  explicit ConfusionCounts(std::vector<ClassCounts> counts);

  // Root and dummy nodes in either set are ignored.
  void add(std::span<const NodeId> gold, std::span<const NodeId> predicted);

  std::size_t num_classes() const { return counts_.size(); }
  const ClassCounts& counts(std::size_t i) const { return counts_.at(i); }
  // Class node of entry i; empty when built from raw counts.
  std::span<const NodeId> classes() const { return classes_; }
  ClassCounts pooled() const;

 private:
  std::vector<NodeId> classes_;
  std::vector<std::optional<std::size_t>> slot_;
  std::vector<ClassCounts> counts_;
};

// F1 of pooled precision and recall. Throws Error for an empty class set.
double micro_f1(const ConfusionCounts& c);
// Unweighted mean of per-class F1; classes with no TP, FP or FN count as 0.
// Throws Error for an empty class set.
double macro_f1(const ConfusionCounts& c);

enum class Algorithm { kPcnb, kPcem, kFlatNb, kFlatEm, kTdNb, kTdEm };

std::string_view algorithm_name(Algorithm a);
// Accepts pcnb, pcem, flat-nb, flat-em, td-nb, td-em.
Algorithm parse_algorithm(std::string_view name);
bool uses_em(Algorithm a);

class TrainedClassifier {
 public:
  TrainedClassifier(Algorithm algo, std::variant<PathModel, TopDownModel> model, EmTrace trace = {});

  Algorithm algorithm() const { return algo_; }
  const std::variant<PathModel, TopDownModel>& model() const { return model_; }
  const EmTrace& trace() const { return trace_; }

  // Predicted classes, by depth, without root and dummies.
  std::vector<NodeId> predict(const Document& doc, const Taxonomy& t, const PathTable& paths) const;

 private:
  Algorithm algo_;
  std::variant<PathModel, TopDownModel> model_;
  EmTrace trace_;
};

// The observer is forwarded to the path-model EM variants (pcem, flat-em).
TrainedClassifier train_classifier(Algorithm algo, const Dataset& data, const Taxonomy& t, const PathTable& paths,
                                   const EmConfig& cfg, const TopDownOptions& td = {},
                                   const EmObserver& observer = {});

// Gold labels of test documents come from their GoldLabels.
ConfusionCounts evaluate(const TrainedClassifier& clf, std::span<const LabeledDocument> test, const Taxonomy& t,
                         const PathTable& paths);

struct ClassReport {
  std::string name;
  ClassCounts counts;
};

struct RunResult {
  Algorithm algorithm{};
  double rate = 1.0;
  std::uint64_t seed = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::vector<ClassReport> per_class;
};

struct AggregateRow {
  Algorithm algorithm{};
  double rate = 1.0;
  std::size_t seeds = 0;
  double micro_f1 = 0.0;  // mean over seeds
  double macro_f1 = 0.0;
  double iterations = 0.0;
};

struct EvalReport {
  std::vector<RunResult> runs;
  std::vector<AggregateRow> aggregate;
};

struct ExperimentConfig {
  std::vector<Algorithm> algorithms{Algorithm::kPcem};
  std::vector<double> rates{1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  EmConfig em;
  TopDownOptions topdown;
  std::string hierarchy;
  std::string train;
  std::string test;
  std::optional<std::string> sims;
  std::optional<std::filesystem::path> out_dir;

  // Throws Error unless rates lie in (0, 1], seeds are distinct and the
  // algorithm and seed lists are nonempty.
  void validate() const;
};

// Runs every (rate, seed, algorithm) cell on an in-memory dataset: split,
// train, predict the test set, score. Errors are rethrown with the cell's
// context.
EvalReport run_sweep(const Dataset& data, const Taxonomy& t, const PathTable& paths, const ExperimentConfig& cfg);

// Loads the configured files, runs the sweep and, when out_dir is set, writes
// runs.csv, aggregate.csv, per_class.csv and metadata.json there.
EvalReport run_experiment(const ExperimentConfig& cfg);

// CSV writers. aggregate.csv holds no timings, so it is byte-identical for
// identical inputs.
void write_runs_csv(std::ostream& out, const EvalReport& r);
void write_aggregate_csv(std::ostream& out, const EvalReport& r);
void write_per_class_csv(std::ostream& out, const EvalReport& r);
std::string metadata_json(const ExperimentConfig& cfg);

struct LengthRange {
  std::uint32_t min = 10;
  std::uint32_t max = 50;
};

// Samples documents from `truth`: a path from the prior, a length uniform in
// `lengths`, then i.i.d. words from the path's word distribution. Every
// document is labeled with the real classes of its path. Words are named
// w0, w1, ... in id order. Throws Error when n_docs is 0.
Dataset generate_synthetic(const Taxonomy& t, const PathTable& paths, const PathModel& truth, std::size_t n_docs,
                           LengthRange lengths, std::uint64_t seed);

// Random generator model for synthetic corpora: a near-uniform prior and,
// for each path, a word distribution that puts extra mass on a few
// path-specific words. `sharpness` scales that extra mass.
PathModel random_generator_model(std::size_t num_paths, std::size_t vocab_size, double sharpness,
                                 std::uint64_t seed);

}  // namespace pcem

#endif  // PCEM_EVALUATION_HPP_
