#include "pcem/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pcem/error.hpp"
#include "pcem/scoring.hpp"

namespace pcem {

namespace {

struct FlatRows {
  std::vector<Document> docs;
  std::vector<PathScoreVector> scores;
};

FlatRows flat_rows(const Dataset& data, const Taxonomy& t, const PathTable& paths) {
  FlatRows rows;
  for (const LabeledDocument& ld : data.labeled) {
    if (auto s = leaf_one_hot_scores(ld.label, t, paths)) {
      rows.docs.push_back(ld.doc);
      rows.scores.push_back(std::move(*s));
    }
  }
  if (rows.docs.empty()) throw Error("flat baseline needs at least one document labeled down to a leaf");
  return rows;
}

// Classes credited by a document's supervision, dummies inheriting from
// their leaf.
NodeScores supervision_nodes(const Supervision& label, const Taxonomy& t) {
  if (const auto* gold = std::get_if<GoldLabels>(&label)) return node_scores_from_gold(*gold, t);
  return node_scores_from_gold(weak_label_nodes(std::get<WeakSimilarities>(label), t), t);
}

std::vector<NodeId> internal_nodes(const Taxonomy& t) {
  std::vector<NodeId> out{t.root()};
  for (int k = 1; k < t.depth(); ++k) {
    for (NodeId id : t.level(k)) {
      if (!t.is_leaf(id)) out.push_back(id);
    }
  }
  return out;
}

std::vector<ScoreCounts> labeled_local_counts(const Dataset& data, const Taxonomy& t,
                                              const std::vector<NodeId>& internals) {
  std::vector<ScoreCounts> counts;
  counts.reserve(internals.size());
  for (NodeId c : internals) counts.emplace_back(t.node(c).children.size(), data.vocab.size());

  std::vector<double> row;
  for (const LabeledDocument& ld : data.labeled) {
    const NodeScores ns = supervision_nodes(ld.label, t);
    for (std::size_t i = 0; i < internals.size(); ++i) {
      const NodeId c = internals[i];
      if (c != t.root() && ns[index(c)] == 0.0) continue;
      const auto& kids = t.node(c).children;
      row.assign(kids.size(), 0.0);
      bool any = false;
      for (std::size_t k = 0; k < kids.size(); ++k) {
        if (ns[index(kids[k])] != 0.0) {
          row[k] = 1.0;
          any = true;
        }
      }
      if (any) counts[i].add(ld.doc, row);
    }
  }
  return counts;
}

TopDownModel model_from_counts(const Taxonomy& t, const std::vector<NodeId>& internals,
                               const std::vector<ScoreCounts>& counts) {
  std::vector<LocalClassifier> locals;
  locals.reserve(internals.size());
  for (std::size_t i = 0; i < internals.size(); ++i) {
    locals.push_back({internals[i], t.node(internals[i]).children, counts[i].to_model()});
  }
  return TopDownModel(t, std::move(locals));
}

double topdown_objective(const Dataset& data, const TopDownModel& m, const std::vector<NodeId>& internals,
                         const std::vector<std::vector<double>>& routes) {
  const Taxonomy& t = m.taxonomy();
  double total = 0.0;
  for (NodeId c : internals) total += log_parameter_prior(m.local(c).model);
  for (const LabeledDocument& ld : data.labeled) {
    const NodeScores ns = supervision_nodes(ld.label, t);
    for (NodeId c : internals) {
      if (c != t.root() && ns[index(c)] == 0.0) continue;
      const LocalClassifier& local = m.local(c);
      for (std::size_t k = 0; k < local.children.size(); ++k) {
        if (ns[index(local.children[k])] != 0.0) {
          total += log_joint(ld.doc, local.model)[k];
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < data.unlabeled.size(); ++i) {
    for (NodeId c : internals) {
      const double w = routes[i][index(c)];
      if (w == 0.0) continue;
      total += w * log_sum_exp(log_joint(data.unlabeled[i], m.local(c).model));
    }
  }
  return total;
}

}  // namespace

PathModel train_flat_nb(const Dataset& data, const Taxonomy& t, const PathTable& paths) {
  FlatRows rows = flat_rows(data, t, paths);
  return estimate(rows.docs, rows.scores, paths.size(), data.vocab.size());
}

EmResult train_flat_em(const Dataset& data, const Taxonomy& t, const PathTable& paths, const EmConfig& cfg,
                       const EmObserver& observer) {
  FlatRows rows = flat_rows(data, t, paths);
  return run_em(rows.docs, rows.scores, data.unlabeled, paths.size(), data.vocab.size(), cfg, observer);
}

TopDownModel::TopDownModel(Taxonomy t, std::vector<LocalClassifier> locals)
    : taxonomy_(std::move(t)), locals_(std::move(locals)), local_of_node_(taxonomy_.size()) {
  for (std::size_t i = 0; i < locals_.size(); ++i) {
    const LocalClassifier& l = locals_[i];
    if (l.children != taxonomy_.node(l.node).children || l.model.num_paths() != l.children.size()) {
      throw DimensionError("local classifier for '" + taxonomy_.node(l.node).name +
                           "' does not match the node's children");
    }
    local_of_node_.at(index(l.node)) = i;
  }
}

const LocalClassifier& TopDownModel::local(NodeId internal) const {
  const auto& slot = local_of_node_.at(index(internal));
  if (!slot) throw Error("no local classifier at '" + taxonomy_.node(internal).name + "'");
  return locals_[*slot];
}

TopDownModel train_topdown_nb(const Dataset& data, const Taxonomy& t) {
  if (data.labeled.empty()) throw Error("top-down NB needs at least one labeled document");
  const std::vector<NodeId> internals = internal_nodes(t);
  return model_from_counts(t, internals, labeled_local_counts(data, t, internals));
}

std::vector<double> routing_weights(const Document& doc, const TopDownModel& m, RoutingMode mode) {
  const Taxonomy& t = m.taxonomy();
  std::vector<double> w(t.size(), 0.0);
  w[index(t.root())] = 1.0;
  const NodeId root_level[] = {t.root()};
  for (int k = 0; k < t.depth(); ++k) {
    const std::span<const NodeId> level = k == 0 ? std::span<const NodeId>(root_level) : t.level(k);
    for (NodeId c : level) {
      const double wc = w[index(c)];
      if (wc == 0.0 || t.is_leaf(c)) continue;
      const LocalClassifier& local = m.local(c);
      if (mode == RoutingMode::kHard) {
        w[index(local.children[predict_path(doc, local.model)])] = wc;
        continue;
      }
      const std::vector<double> post = posterior(doc, local.model);
      for (std::size_t i = 0; i < post.size(); ++i) w[index(local.children[i])] = wc * post[i];
    }
  }
  return w;
}

std::vector<NodeId> predict_topdown(const Document& doc, const TopDownModel& m) {
  const Taxonomy& t = m.taxonomy();
  std::vector<NodeId> out;
  NodeId cur = t.root();
  while (!t.is_leaf(cur)) {
    const LocalClassifier& local = m.local(cur);
    cur = local.children[predict_path(doc, local.model)];
    if (!t.node(cur).is_dummy) out.push_back(cur);
  }
  return out;
}

TopDownResult train_topdown_em(const Dataset& data, const Taxonomy& t, const EmConfig& cfg,
                               const TopDownOptions& opts) {
  cfg.validate();
  if (data.labeled.empty()) throw Error("top-down EM needs at least one labeled document");
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  auto start = Clock::now();
  const std::vector<NodeId> internals = internal_nodes(t);
  const std::vector<ScoreCounts> labeled_counts = labeled_local_counts(data, t, internals);
  TopDownResult result{model_from_counts(t, internals, labeled_counts), {}};

  std::vector<std::vector<double>> routes(data.unlabeled.size());
  auto route_all = [&] {
    for (std::size_t i = 0; i < data.unlabeled.size(); ++i) {
      routes[i] = routing_weights(data.unlabeled[i], result.model, opts.routing);
    }
  };
  route_all();
  result.trace.objective.push_back(topdown_objective(data, result.model, internals, routes));
  result.trace.seconds.push_back(seconds_since(start));

  std::vector<double> row;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    start = Clock::now();
    std::vector<ScoreCounts> counts = labeled_counts;
    for (std::size_t i = 0; i < data.unlabeled.size(); ++i) {
      for (std::size_t n = 0; n < internals.size(); ++n) {
        const NodeId c = internals[n];
        if (routes[i][index(c)] == 0.0) continue;
        const auto& kids = t.node(c).children;
        row.resize(kids.size());
        for (std::size_t k = 0; k < kids.size(); ++k) row[k] = routes[i][index(kids[k])];
        counts[n].add(data.unlabeled[i], row);
      }
    }
    result.model = model_from_counts(t, internals, counts);
    route_all();

    const double prev = result.trace.objective.back();
    const double cur = topdown_objective(data, result.model, internals, routes);
    result.trace.objective.push_back(cur);
    result.trace.seconds.push_back(seconds_since(start));

    if (data.unlabeled.empty() ||
        (iter >= cfg.min_iters && std::abs(cur - prev) <= cfg.rel_tol * std::abs(prev))) {
      result.trace.converged = true;
      break;
    }
  }
  return result;
}

void save_topdown_model(std::ostream& out, const std::string& kind, const TopDownModel& m,
                        const Vocabulary& vocab) {
  const Taxonomy& t = m.taxonomy();
  out << "pcem-topdown 1\n";
  out << "kind " << kind << '\n';
  out << "vocab " << vocab.size() << '\n';
  for (const std::string& w : vocab.words()) out << w << '\n';
  out << "locals " << m.locals().size() << '\n';
  for (const LocalClassifier& l : m.locals()) {
    if (l.model.vocab_size() != vocab.size()) throw DimensionError("save_topdown_model: vocabulary mismatch");
    out << "node\t" << t.node(l.node).name;
    for (NodeId c : l.children) out << '\t' << t.node(c).name;
    out << '\n';
    io::write_doubles(out, "prior", l.model.log_prior());
    for (std::size_t j = 0; j < l.model.num_paths(); ++j) io::write_doubles(out, "word", l.model.log_word_row(j));
  }
}

SavedTopDownModel load_topdown_model(std::istream& in, const Taxonomy& t) {
  if (io::expect_line(in, "header") != "pcem-topdown 1") throw Error("not a pcem-topdown v1 file");
  SavedTopDownModel saved;
  std::string line = io::expect_line(in, "kind");
  if (!line.starts_with("kind ")) throw Error("model file: expected kind line");
  saved.kind = line.substr(5);

  std::size_t vocab_size = 0;
  std::size_t num_locals = 0;
  std::string tag;
  {
    std::istringstream ls(io::expect_line(in, "vocab"));
    if (!(ls >> tag >> vocab_size) || tag != "vocab") throw Error("model file: expected vocab line");
  }
  for (std::size_t i = 0; i < vocab_size; ++i) saved.vocab.push_back(io::expect_line(in, "vocabulary word"));
  {
    std::istringstream ls(io::expect_line(in, "locals"));
    if (!(ls >> tag >> num_locals) || tag != "locals") throw Error("model file: expected locals line");
  }

  std::vector<LocalClassifier> locals;
  for (std::size_t i = 0; i < num_locals; ++i) {
    std::istringstream ls(io::expect_line(in, "node"));
    std::vector<std::string> names;
    for (std::string name; std::getline(ls, name, '\t');) names.push_back(name);
    if (names.size() < 3 || names[0] != "node") throw Error("model file: bad node line");
    LocalClassifier l;
    l.node = t.at(names[1]);
    for (std::size_t k = 2; k < names.size(); ++k) l.children.push_back(t.at(names[k]));
    std::vector<double> prior = io::read_doubles(in, "prior", l.children.size());
    std::vector<double> words;
    for (std::size_t j = 0; j < l.children.size(); ++j) {
      auto row = io::read_doubles(in, "word", vocab_size);
      words.insert(words.end(), row.begin(), row.end());
    }
    l.model = PathModel(l.children.size(), vocab_size, std::move(prior), std::move(words));
    locals.push_back(std::move(l));
  }
  saved.model = TopDownModel(t, std::move(locals));
  return saved;
}

}  // namespace pcem
