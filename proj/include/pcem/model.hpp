#ifndef PCEM_MODEL_HPP_
#define PCEM_MODEL_HPP_

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pcem/corpus.hpp"
#include "pcem/scoring.hpp"
#include "pcem/taxonomy.hpp"

namespace pcem {

// Mixture of multinomials with one component per path. Parameters are kept
// as natural logs; log_word is row-major, one row of vocab_size() entries per
// path.
class PathModel {
 public:
  PathModel() = default;
  PathModel(std::size_t num_paths, std::size_t vocab_size, std::vector<double> log_prior,
            std::vector<double> log_word);

  std::size_t num_paths() const { return num_paths_; }
  std::size_t vocab_size() const { return vocab_size_; }

  double log_prior(std::size_t j) const { return log_prior_[j]; }
  std::span<const double> log_prior() const { return log_prior_; }
  double log_word(std::size_t j, WordId t) const { return log_word_[j * vocab_size_ + t]; }
  std::span<const double> log_word_row(std::size_t j) const {
    return std::span<const double>(log_word_).subspan(j * vocab_size_, vocab_size_);
  }
  std::span<const double> log_word() const { return log_word_; }

  bool operator==(const PathModel&) const = default;

 private:
  std::size_t num_paths_ = 0;
  std::size_t vocab_size_ = 0;
  std::vector<double> log_prior_;
  std::vector<double> log_word_;
};

// Score-weighted event counts: path_mass[j] = sum_i S_ij and
// word_mass[j][t] = sum_i S_ij * x_it. Documents are folded in the order
// add() is called, so a fixed call order gives bit-identical estimates.
class ScoreCounts {
 public:
  ScoreCounts(std::size_t num_paths, std::size_t vocab_size);

  // Throws DimensionError on a score/word index outside the model shape.
  void add(const Document& doc, std::span<const double> scores);
  void add(const Document& doc, const PathScoreVector& scores) { add(doc, std::span<const double>(scores.scores)); }

  // Add-one smoothed MAP estimate:
  //   prior_j  = (1 + path_mass_j) / (M + sum_k path_mass_k)
  //   word_t|j = (1 + word_mass_jt) / (|V| + sum_s word_mass_js)
  PathModel to_model() const;

  std::size_t num_paths() const { return num_paths_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::span<const double> path_mass() const { return path_mass_; }
  double word_mass(std::size_t j, WordId t) const { return word_mass_[j * vocab_size_ + t]; }

 private:
  std::size_t num_paths_;
  std::size_t vocab_size_;
  std::vector<double> path_mass_;
  std::vector<double> word_mass_;
};

// Estimates a model from documents and their path scores (hard, soft or a
// mix). No documents gives the uniform smoothing-only model.
PathModel estimate(std::span<const Document> docs, std::span<const PathScoreVector> scores,
                   std::size_t num_paths, std::size_t vocab_size);

// log P(p_j) + sum_t x_t log P(w_t | p_j), for every j. Throws DimensionError
// for words outside the model vocabulary.
std::vector<double> log_joint(const Document& doc, const PathModel& m);
double log_sum_exp(std::span<const double> values);
// P(p_j | x) by Bayes' rule, normalized in log space with a max shift.
std::vector<double> posterior(const Document& doc, const PathModel& m);

struct PathPrediction {
  std::size_t path = 0;
  // Classes on the predicted path, dummies and root excluded, by depth.
  std::vector<NodeId> nodes;
};

// Highest-posterior path; ties go to the lowest path index.
std::size_t predict_path(const Document& doc, const PathModel& m);
PathPrediction predict(const Document& doc, const PathModel& m, const Taxonomy& t, const PathTable& paths);

// Log posterior of the parameters up to an additive constant:
//   log P(theta)                               (Dirichlet, alpha = 2)
//   + sum over labeled x, paths j of S_xj log(P(p_j) P(x | p_j))
//   + sum over unlabeled x of log sum_j P(p_j) P(x | p_j)
// This is the function the estimate maximizes for fixed scores, so EM never
// decreases it.
// The document-length factor is constant in theta and left out.
double objective(std::span<const Document> labeled, std::span<const PathScoreVector> labeled_scores,
                 std::span<const Document> unlabeled, const PathModel& m);

// Dirichlet(alpha = 2) log density of the parameters, without its constant.
double log_parameter_prior(const PathModel& m);

struct EmConfig {
  int max_iters = 50;
  double rel_tol = 1e-4;
  int min_iters = 2;

  // Throws Error unless max_iters >= min_iters >= 1 and rel_tol > 0.
  void validate() const;
};

// objective[0] is the initializer's objective; objective[i] follows EM
// iteration i. seconds[i] is the wall time of iteration i (seconds[0]: the
// initializer).
struct EmTrace {
  std::vector<double> objective;
  std::vector<double> seconds;
  bool converged = false;

  int iterations() const { return objective.empty() ? 0 : static_cast<int>(objective.size()) - 1; }
};

struct EmResult {
  PathModel model;
  EmTrace trace;
};

// Called after every E-step with the score rows the following M-step uses.
using EmObserver = std::function<void(int iteration, std::span<const PathScoreVector> labeled,
                                      std::span<const PathScoreVector> unlabeled)>;

// EM over a path mixture. Starts from the estimate on the labeled rows alone,
// then alternates: posterior of every unlabeled document as its soft scores,
// re-estimate from labeled and soft rows. Stops after max_iters, or once at
// least min_iters iterations ran and the relative objective change is below
// rel_tol.
EmResult run_em(std::span<const Document> labeled, std::span<const PathScoreVector> labeled_scores,
                std::span<const Document> unlabeled, std::size_t num_paths, std::size_t vocab_size,
                const EmConfig& cfg, const EmObserver& observer = {});

// Hard path scores of every labeled document in `data`.
std::vector<PathScoreVector> labeled_path_scores(const Dataset& data, const Taxonomy& t, const PathTable& paths);

// Path cost-sensitive naive Bayes on the labeled documents. Throws Error when
// there are none.
PathModel train_pcnb(const Dataset& data, const Taxonomy& t, const PathTable& paths);

// PCNB-initialized EM over labeled and unlabeled documents.
EmResult train_pcem(const Dataset& data, const Taxonomy& t, const PathTable& paths, const EmConfig& cfg,
                    const EmObserver& observer = {});

// ---------------------------------------------------------------------------
// Text serialization. Doubles are written in shortest round-trip form, so
// save/load reproduces every parameter exactly.
//
//   pcem-model 1
//   kind <kind>
//   vocab <V>
//   <one word per line>
//   paths <M> <d>
//   <per path: d node names, tab separated>
//   prior <M values>
//   word <V values>            (M lines)
// ---------------------------------------------------------------------------

struct SavedPathModel {
  std::string kind;
  std::vector<std::string> vocab;
  std::vector<std::vector<std::string>> path_names;
  PathModel model;
};

void save_path_model(std::ostream& out, const std::string& kind, const PathModel& m, const Vocabulary& vocab,
                     const Taxonomy& t, const PathTable& paths);
SavedPathModel load_path_model(std::istream& in);

namespace io {

void write_doubles(std::ostream& out, std::string_view tag, std::span<const double> values);
std::vector<double> read_doubles(std::istream& in, std::string_view tag, std::size_t expected);
std::string expect_line(std::istream& in, std::string_view what);

}  // namespace io

}  // namespace pcem

#endif  // PCEM_MODEL_HPP_
