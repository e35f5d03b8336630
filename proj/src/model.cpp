#include "pcem/model.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "pcem/error.hpp"

namespace pcem {

PathModel::PathModel(std::size_t num_paths, std::size_t vocab_size, std::vector<double> log_prior,
                     std::vector<double> log_word)
    : num_paths_(num_paths),
      vocab_size_(vocab_size),
      log_prior_(std::move(log_prior)),
      log_word_(std::move(log_word)) {
  if (log_prior_.size() != num_paths_ || log_word_.size() != num_paths_ * vocab_size_) {
    throw DimensionError("path model parameter arrays do not match its shape");
  }
}

ScoreCounts::ScoreCounts(std::size_t num_paths, std::size_t vocab_size)
    : num_paths_(num_paths),
      vocab_size_(vocab_size),
      path_mass_(num_paths, 0.0),
      word_mass_(num_paths * vocab_size, 0.0) {
  if (num_paths == 0) throw DimensionError("a path model needs at least one path");
}

void ScoreCounts::add(const Document& doc, std::span<const double> scores) {
  if (scores.size() != num_paths_) {
    throw DimensionError("document '" + doc.id + "' has " + std::to_string(scores.size()) +
                         " path scores, model has " + std::to_string(num_paths_) + " paths");
  }
  if (!doc.counts.empty() && doc.counts.back().word >= vocab_size_) {
    throw DimensionError("document '" + doc.id + "' uses a word outside the vocabulary");
  }
  for (std::size_t j = 0; j < num_paths_; ++j) {
    const double s = scores[j];
    if (s == 0.0) continue;
    path_mass_[j] += s;
    double* row = word_mass_.data() + j * vocab_size_;
    for (const WordCount& wc : doc.counts) row[wc.word] += s * static_cast<double>(wc.count);
  }
}

PathModel ScoreCounts::to_model() const {
  double total_paths = 0.0;
  for (double m : path_mass_) total_paths += m;
  const double log_prior_norm = std::log(static_cast<double>(num_paths_) + total_paths);

  std::vector<double> log_prior(num_paths_);
  std::vector<double> log_word(num_paths_ * vocab_size_);
  for (std::size_t j = 0; j < num_paths_; ++j) {
    log_prior[j] = std::log(1.0 + path_mass_[j]) - log_prior_norm;
    const double* row = word_mass_.data() + j * vocab_size_;
    double row_total = 0.0;
    for (std::size_t t = 0; t < vocab_size_; ++t) row_total += row[t];
    const double log_norm = std::log(static_cast<double>(vocab_size_) + row_total);
    double* out = log_word.data() + j * vocab_size_;
    for (std::size_t t = 0; t < vocab_size_; ++t) out[t] = std::log(1.0 + row[t]) - log_norm;
  }
  return PathModel(num_paths_, vocab_size_, std::move(log_prior), std::move(log_word));
}

PathModel estimate(std::span<const Document> docs, std::span<const PathScoreVector> scores,
                   std::size_t num_paths, std::size_t vocab_size) {
  if (docs.size() != scores.size()) throw DimensionError("estimate: document/score row count mismatch");
  ScoreCounts counts(num_paths, vocab_size);
  for (std::size_t i = 0; i < docs.size(); ++i) counts.add(docs[i], scores[i]);
  return counts.to_model();
}

std::vector<double> log_joint(const Document& doc, const PathModel& m) {
  if (!doc.counts.empty() && doc.counts.back().word >= m.vocab_size()) {
    throw DimensionError("document '" + doc.id + "' uses a word outside the model vocabulary");
  }
  std::vector<double> out(m.num_paths());
  for (std::size_t j = 0; j < m.num_paths(); ++j) {
    const auto row = m.log_word_row(j);
    double s = m.log_prior(j);
    for (const WordCount& wc : doc.counts) s += static_cast<double>(wc.count) * row[wc.word];
    out[j] = s;
  }
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

std::vector<double> posterior(const Document& doc, const PathModel& m) {
  std::vector<double> lj = log_joint(doc, m);
  const double mx = *std::max_element(lj.begin(), lj.end());
  double sum = 0.0;
  for (double& v : lj) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : lj) v /= sum;
  return lj;
}

std::size_t predict_path(const Document& doc, const PathModel& m) {
  const std::vector<double> lj = log_joint(doc, m);
  return static_cast<std::size_t>(std::max_element(lj.begin(), lj.end()) - lj.begin());
}

PathPrediction predict(const Document& doc, const PathModel& m, const Taxonomy& t, const PathTable& paths) {
  PathPrediction out;
  out.path = predict_path(doc, m);
  out.nodes = real_nodes_of_path(t, paths, out.path);
  return out;
}

double log_parameter_prior(const PathModel& m) {
  double s = 0.0;
  for (double v : m.log_prior()) s += v;
  for (double v : m.log_word()) s += v;
  return s;
}

double objective(std::span<const Document> labeled, std::span<const PathScoreVector> labeled_scores,
                 std::span<const Document> unlabeled, const PathModel& m) {
  if (labeled.size() != labeled_scores.size()) throw DimensionError("objective: labeled row count mismatch");
  double total = log_parameter_prior(m);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const std::vector<double> joint = log_joint(labeled[i], m);
    const std::vector<double>& s = labeled_scores[i].scores;
    if (s.size() != joint.size()) throw DimensionError("objective: score row has the wrong number of paths");
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] != 0.0) total += s[j] * joint[j];
    }
  }
  for (const Document& doc : unlabeled) total += log_sum_exp(log_joint(doc, m));
  return total;
}

void EmConfig::validate() const {
  if (min_iters < 1) throw Error("min_iters must be at least 1");
  if (max_iters < min_iters) throw Error("max_iters must be at least min_iters");
  if (!(rel_tol > 0.0)) throw Error("rel_tol must be positive");
}

EmResult run_em(std::span<const Document> labeled, std::span<const PathScoreVector> labeled_scores,
                std::span<const Document> unlabeled, std::size_t num_paths, std::size_t vocab_size,
                const EmConfig& cfg, const EmObserver& observer) {
  cfg.validate();
  if (labeled.size() != labeled_scores.size()) throw DimensionError("run_em: labeled row count mismatch");
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  auto start = Clock::now();
  ScoreCounts labeled_counts(num_paths, vocab_size);
  for (std::size_t i = 0; i < labeled.size(); ++i) labeled_counts.add(labeled[i], labeled_scores[i]);

  EmResult result{labeled_counts.to_model(), {}};
  result.trace.objective.push_back(objective(labeled, labeled_scores, unlabeled, result.model));
  result.trace.seconds.push_back(seconds_since(start));

  std::vector<PathScoreVector> soft(unlabeled.size());
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    start = Clock::now();
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
      soft[i] = PathScoreVector{posterior(unlabeled[i], result.model), ScoreMode::kSoft};
    }
    if (observer) observer(iter, labeled_scores, soft);

    ScoreCounts counts = labeled_counts;
    for (std::size_t i = 0; i < unlabeled.size(); ++i) counts.add(unlabeled[i], soft[i]);
    result.model = counts.to_model();

    const double prev = result.trace.objective.back();
    const double cur = objective(labeled, labeled_scores, unlabeled, result.model);
    result.trace.objective.push_back(cur);
    result.trace.seconds.push_back(seconds_since(start));

    if (unlabeled.empty()) {
      result.trace.converged = true;
      break;
    }
    if (iter >= cfg.min_iters && std::abs(cur - prev) <= cfg.rel_tol * std::abs(prev)) {
      result.trace.converged = true;
      break;
    }
  }
  return result;
}

std::vector<PathScoreVector> labeled_path_scores(const Dataset& data, const Taxonomy& t, const PathTable& paths) {
  std::vector<PathScoreVector> rows;
  rows.reserve(data.labeled.size());
  for (const LabeledDocument& ld : data.labeled) rows.push_back(supervised_scores(ld.label, t, paths));
  return rows;
}

namespace {

std::vector<Document> labeled_docs(const Dataset& data) {
  std::vector<Document> docs;
  docs.reserve(data.labeled.size());
  for (const LabeledDocument& ld : data.labeled) docs.push_back(ld.doc);
  return docs;
}

}  // namespace

PathModel train_pcnb(const Dataset& data, const Taxonomy& t, const PathTable& paths) {
  if (data.labeled.empty()) throw Error("PCNB needs at least one labeled document");
  return estimate(labeled_docs(data), labeled_path_scores(data, t, paths), paths.size(), data.vocab.size());
}

EmResult train_pcem(const Dataset& data, const Taxonomy& t, const PathTable& paths, const EmConfig& cfg,
                    const EmObserver& observer) {
  if (data.labeled.empty()) throw Error("PCEM needs at least one labeled document");
  return run_em(labeled_docs(data), labeled_path_scores(data, t, paths), data.unlabeled, paths.size(),
                data.vocab.size(), cfg, observer);
}

namespace io {

void write_doubles(std::ostream& out, std::string_view tag, std::span<const double> values) {
  std::string line(tag);
  char buf[32];
  for (double v : values) {
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    line += ' ';
    line.append(buf, r.ptr);
  }
  out << line << '\n';
}

std::string expect_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw Error("model file truncated: expected " + std::string(what));
  return line;
}

std::vector<double> read_doubles(std::istream& in, std::string_view tag, std::size_t expected) {
  const std::string line = expect_line(in, tag);
  std::string_view rest(line);
  if (!rest.starts_with(tag)) throw Error("model file: expected '" + std::string(tag) + "' line");
  rest.remove_prefix(tag.size());
  std::vector<double> out;
  out.reserve(expected);
  while (!rest.empty()) {
    if (rest.front() == ' ') {
      rest.remove_prefix(1);
      continue;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (ec != std::errc()) throw Error("model file: bad number in '" + std::string(tag) + "' line");
    out.push_back(v);
    rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
  }
  if (out.size() != expected) {
    throw Error("model file: '" + std::string(tag) + "' line has " + std::to_string(out.size()) +
                " values, expected " + std::to_string(expected));
  }
  return out;
}

}  // namespace io

void save_path_model(std::ostream& out, const std::string& kind, const PathModel& m, const Vocabulary& vocab,
                     const Taxonomy& t, const PathTable& paths) {
  if (vocab.size() != m.vocab_size() || paths.size() != m.num_paths()) {
    throw DimensionError("save_path_model: vocabulary or path table does not match the model");
  }
  out << "pcem-model 1\n";
  out << "kind " << kind << '\n';
  out << "vocab " << vocab.size() << '\n';
  for (const std::string& w : vocab.words()) out << w << '\n';
  out << "paths " << paths.size() << ' ' << paths.depth() << '\n';
  for (const auto& p : paths.paths()) {
    for (std::size_t k = 0; k < p.size(); ++k) out << (k ? "\t" : "") << t.node(p[k]).name;
    out << '\n';
  }
  io::write_doubles(out, "prior", m.log_prior());
  for (std::size_t j = 0; j < m.num_paths(); ++j) io::write_doubles(out, "word", m.log_word_row(j));
}

SavedPathModel load_path_model(std::istream& in) {
  if (io::expect_line(in, "header") != "pcem-model 1") throw Error("not a pcem-model v1 file");
  SavedPathModel saved;
  {
    std::string line = io::expect_line(in, "kind");
    if (!line.starts_with("kind ")) throw Error("model file: expected kind line");
    saved.kind = line.substr(5);
  }
  std::size_t vocab_size = 0;
  {
    std::istringstream ls(io::expect_line(in, "vocab"));
    std::string tag;
    if (!(ls >> tag >> vocab_size) || tag != "vocab") throw Error("model file: expected vocab line");
  }
  saved.vocab.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) saved.vocab.push_back(io::expect_line(in, "vocabulary word"));

  std::size_t num_paths = 0;
  std::size_t depth = 0;
  {
    std::istringstream ls(io::expect_line(in, "paths"));
    std::string tag;
    if (!(ls >> tag >> num_paths >> depth) || tag != "paths") throw Error("model file: expected paths line");
  }
  for (std::size_t j = 0; j < num_paths; ++j) {
    std::string line = io::expect_line(in, "path");
    std::vector<std::string> names;
    std::istringstream ls(line);
    for (std::string name; std::getline(ls, name, '\t');) names.push_back(name);
    if (names.size() != depth) throw Error("model file: path " + std::to_string(j) + " has the wrong depth");
    saved.path_names.push_back(std::move(names));
  }
  std::vector<double> prior = io::read_doubles(in, "prior", num_paths);
  std::vector<double> words;
  words.reserve(num_paths * vocab_size);
  for (std::size_t j = 0; j < num_paths; ++j) {
    auto row = io::read_doubles(in, "word", vocab_size);
    words.insert(words.end(), row.begin(), row.end());
  }
  saved.model = PathModel(num_paths, vocab_size, std::move(prior), std::move(words));
  return saved;
}

}  // namespace pcem
