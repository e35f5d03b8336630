#include "pcem/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "pcem/error.hpp"
#include "pcem/random.hpp"

namespace pcem {

double ClassCounts::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ClassCounts::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ClassCounts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ConfusionCounts::ConfusionCounts(const Taxonomy& t) : slot_(t.size()) {
  for (int k = 1; k <= t.depth(); ++k) {
    for (NodeId id : t.real_level(k)) {
      slot_[index(id)] = classes_.size();
      classes_.push_back(id);
    }
  }
  counts_.resize(classes_.size());
}

ConfusionCounts::ConfusionCounts(std::vector<ClassCounts> counts) : counts_(std::move(counts)) {}

void ConfusionCounts::add(std::span<const NodeId> gold, std::span<const NodeId> predicted) {
  if (slot_.empty()) throw Error("ConfusionCounts built from raw counts cannot take predictions");
  auto slots = [&](std::span<const NodeId> nodes) {
    std::set<std::size_t> out;
    for (NodeId id : nodes) {
      if (index(id) < slot_.size() && slot_[index(id)]) out.insert(*slot_[index(id)]);
    }
    return out;
  };
  const std::set<std::size_t> g = slots(gold);
  const std::set<std::size_t> p = slots(predicted);
  for (std::size_t s : g) (p.contains(s) ? counts_[s].tp : counts_[s].fn) += 1;
  for (std::size_t s : p) {
    if (!g.contains(s)) counts_[s].fp += 1;
  }
}

ClassCounts ConfusionCounts::pooled() const {
  ClassCounts total;
  for (const ClassCounts& c : counts_) {
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  return total;
}

double micro_f1(const ConfusionCounts& c) {
  if (c.num_classes() == 0) throw Error("micro-F1 of an empty class set");
  return c.pooled().f1();
}

double macro_f1(const ConfusionCounts& c) {
  if (c.num_classes() == 0) throw Error("macro-F1 of an empty class set");
  double sum = 0.0;
  for (std::size_t i = 0; i < c.num_classes(); ++i) sum += c.counts(i).f1();
  return sum / static_cast<double>(c.num_classes());
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kPcnb: return "pcnb";
    case Algorithm::kPcem: return "pcem";
    case Algorithm::kFlatNb: return "flat-nb";
    case Algorithm::kFlatEm: return "flat-em";
    case Algorithm::kTdNb: return "td-nb";
    case Algorithm::kTdEm: return "td-em";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kPcnb, Algorithm::kPcem, Algorithm::kFlatNb, Algorithm::kFlatEm,
                      Algorithm::kTdNb, Algorithm::kTdEm}) {
    if (algorithm_name(a) == name) return a;
  }
  throw Error("unknown algorithm '" + std::string(name) + "'");
}

bool uses_em(Algorithm a) {
  return a == Algorithm::kPcem || a == Algorithm::kFlatEm || a == Algorithm::kTdEm;
}

TrainedClassifier::TrainedClassifier(Algorithm algo, std::variant<PathModel, TopDownModel> model, EmTrace trace)
    : algo_(algo), model_(std::move(model)), trace_(std::move(trace)) {}

std::vector<NodeId> TrainedClassifier::predict(const Document& doc, const Taxonomy& t,
                                               const PathTable& paths) const {
  if (const auto* pm = std::get_if<PathModel>(&model_)) return pcem::predict(doc, *pm, t, paths).nodes;
  return predict_topdown(doc, std::get<TopDownModel>(model_));
}

TrainedClassifier train_classifier(Algorithm algo, const Dataset& data, const Taxonomy& t, const PathTable& paths,
                                   const EmConfig& cfg, const TopDownOptions& td, const EmObserver& observer) {
  switch (algo) {
    case Algorithm::kPcnb:
      return {algo, train_pcnb(data, t, paths)};
    case Algorithm::kPcem: {
      EmResult r = train_pcem(data, t, paths, cfg, observer);
      return {algo, std::move(r.model), std::move(r.trace)};
    }
    case Algorithm::kFlatNb:
      return {algo, train_flat_nb(data, t, paths)};
    case Algorithm::kFlatEm: {
      EmResult r = train_flat_em(data, t, paths, cfg, observer);
      return {algo, std::move(r.model), std::move(r.trace)};
    }
    case Algorithm::kTdNb:
      return {algo, train_topdown_nb(data, t)};
    case Algorithm::kTdEm: {
      TopDownResult r = train_topdown_em(data, t, cfg, td);
      return {algo, std::move(r.model), std::move(r.trace)};
    }
  }
  throw Error("unhandled algorithm");
}

ConfusionCounts evaluate(const TrainedClassifier& clf, std::span<const LabeledDocument> test, const Taxonomy& t,
                         const PathTable& paths) {
  ConfusionCounts counts(t);
  for (const LabeledDocument& ld : test) {
    const auto* gold = std::get_if<GoldLabels>(&ld.label);
    if (gold == nullptr) throw LabelError("test document '" + ld.doc.id + "' has no gold labels");
    const std::vector<NodeId> predicted = clf.predict(ld.doc, t, paths);
    counts.add(gold->nodes, predicted);
  }
  return counts;
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw Error("no algorithms configured");
  if (rates.empty()) throw Error("no label rates configured");
  if (seeds.empty()) throw Error("no seeds configured");
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) throw Error("label rate " + std::to_string(r) + " is outside (0, 1]");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw Error("seeds must be distinct");
  }
  em.validate();
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

EvalReport run_sweep(const Dataset& data, const Taxonomy& t, const PathTable& paths, const ExperimentConfig& cfg) {
  cfg.validate();
  EvalReport report;
  for (double rate : cfg.rates) {
    for (std::uint64_t seed : cfg.seeds) {
      const std::string context = "rate=" + fmt(rate) + " seed=" + std::to_string(seed);
      Dataset split;
      try {
        split = split_by_label_rate(data, rate, seed);
      } catch (const Error& e) {
        throw Error(context + ": " + e.what());
      }
      for (Algorithm algo : cfg.algorithms) {
        try {
          const auto start = std::chrono::steady_clock::now();
          TrainedClassifier clf = train_classifier(algo, split, t, paths, cfg.em, cfg.topdown);
          ConfusionCounts counts = evaluate(clf, split.test, t, paths);
          RunResult run;
          run.algorithm = algo;
          run.rate = rate;
          run.seed = seed;
          run.micro_f1 = micro_f1(counts);
          run.macro_f1 = macro_f1(counts);
          run.iterations = clf.trace().iterations();
          run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          for (std::size_t i = 0; i < counts.num_classes(); ++i) {
            run.per_class.push_back({t.node(counts.classes()[i]).name, counts.counts(i)});
          }
          report.runs.push_back(std::move(run));
        } catch (const Error& e) {
          throw Error(std::string(algorithm_name(algo)) + " " + context + ": " + e.what());
        }
      }
    }
  }

  for (double rate : cfg.rates) {
    for (Algorithm algo : cfg.algorithms) {
      AggregateRow row;
      row.algorithm = algo;
      row.rate = rate;
      double micro = 0.0;
      double macro = 0.0;
      double iters = 0.0;
      for (const RunResult& run : report.runs) {
        if (run.algorithm != algo || run.rate != rate) continue;
        micro += run.micro_f1;
        macro += run.macro_f1;
        iters += run.iterations;
        ++row.seeds;
      }
      const auto n = static_cast<double>(row.seeds);
      row.micro_f1 = micro / n;
      row.macro_f1 = macro / n;
      row.iterations = iters / n;
      report.aggregate.push_back(row);
    }
  }
  return report;
}

void write_runs_csv(std::ostream& out, const EvalReport& r) {
  out << "algorithm,rate,seed,micro_f1,macro_f1,iters,seconds\n";
  for (const RunResult& run : r.runs) {
    out << algorithm_name(run.algorithm) << ',' << fmt(run.rate) << ',' << run.seed << ',' << fmt(run.micro_f1)
        << ',' << fmt(run.macro_f1) << ',' << run.iterations << ',' << fmt(run.seconds) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const EvalReport& r) {
  out << "algorithm,rate,seeds,micro_f1,macro_f1,iters\n";
  for (const AggregateRow& row : r.aggregate) {
    out << algorithm_name(row.algorithm) << ',' << fmt(row.rate) << ',' << row.seeds << ',' << fmt(row.micro_f1)
        << ',' << fmt(row.macro_f1) << ',' << fmt(row.iterations) << '\n';
  }
}

void write_per_class_csv(std::ostream& out, const EvalReport& r) {
  out << "algorithm,rate,seed,class,tp,fp,fn,precision,recall,f1\n";
  for (const RunResult& run : r.runs) {
    for (const ClassReport& c : run.per_class) {
      out << algorithm_name(run.algorithm) << ',' << fmt(run.rate) << ',' << run.seed << ',' << c.name << ','
          << c.counts.tp << ',' << c.counts.fp << ',' << c.counts.fn << ',' << fmt(c.counts.precision()) << ','
          << fmt(c.counts.recall()) << ',' << fmt(c.counts.f1()) << '\n';
    }
  }
}

std::string metadata_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  std::vector<std::string> algos;
  for (Algorithm a : cfg.algorithms) algos.emplace_back(algorithm_name(a));
  j["algorithms"] = algos;
  j["rates"] = cfg.rates;
  j["seeds"] = cfg.seeds;
  j["em"] = {{"max_iters", cfg.em.max_iters}, {"rel_tol", cfg.em.rel_tol}, {"min_iters", cfg.em.min_iters}};
  j["topdown_routing"] = cfg.topdown.routing == RoutingMode::kSoft ? "soft" : "hard";
  j["hierarchy"] = cfg.hierarchy;
  j["train"] = cfg.train;
  j["test"] = cfg.test;
  j["sims"] = cfg.sims ? nlohmann::ordered_json(*cfg.sims) : nlohmann::ordered_json(nullptr);
  j["split"] = "uniform random, labeled count = round_half_up(rate * N)";
  j["macro_f1_zero_support"] = "class contributes 0";
  return j.dump(2) + "\n";
}

EvalReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Taxonomy t = load_taxonomy(cfg.hierarchy);
  const PathTable paths = enumerate_paths(t);
  const Dataset data = load_corpus({cfg.train, cfg.test, cfg.sims}, t);
  EvalReport report = run_sweep(data, t, paths, cfg);

  if (cfg.out_dir) {
    std::filesystem::create_directories(*cfg.out_dir);
    auto open = [&](const char* name) {
      std::ofstream f(*cfg.out_dir / name);
      if (!f) throw Error("cannot write " + (*cfg.out_dir / name).string());
      return f;
    };
    {
      auto f = open("runs.csv");
      write_runs_csv(f, report);
    }
    {
      auto f = open("aggregate.csv");
      write_aggregate_csv(f, report);
    }
    {
      auto f = open("per_class.csv");
      write_per_class_csv(f, report);
    }
    {
      auto f = open("metadata.json");
      f << metadata_json(cfg);
    }
  }
  return report;
}

Dataset generate_synthetic(const Taxonomy& t, const PathTable& paths, const PathModel& truth, std::size_t n_docs,
                           LengthRange lengths, std::uint64_t seed) {
  if (n_docs == 0) throw Error("synthetic corpus needs at least one document");
  if (truth.num_paths() != paths.size()) throw DimensionError("generator model does not match the path table");
  if (lengths.min > lengths.max) throw Error("synthetic length range is empty");

  std::vector<double> prior(truth.num_paths());
  for (std::size_t j = 0; j < prior.size(); ++j) prior[j] = std::exp(truth.log_prior(j));
  // cumulative word distribution per path, sampled by binary search
  std::vector<std::vector<double>> cumulative(truth.num_paths());
  for (std::size_t j = 0; j < cumulative.size(); ++j) {
    double acc = 0.0;
    for (double lw : truth.log_word_row(j)) cumulative[j].push_back(acc += std::exp(lw));
  }
  auto draw_word = [&](Rng& rng, std::size_t j) {
    const auto& cum = cumulative[j];
    const auto it = std::upper_bound(cum.begin(), cum.end(), rng.uniform() * cum.back());
    return static_cast<WordId>(std::min<std::size_t>(it - cum.begin(), cum.size() - 1));
  };

  Dataset data;
  for (std::size_t w = 0; w < truth.vocab_size(); ++w) data.vocab.add("w" + std::to_string(w));

  std::vector<GoldLabels> path_labels(paths.size());
  for (std::size_t j = 0; j < paths.size(); ++j) path_labels[j].nodes = real_nodes_of_path(t, paths, j);

  Rng rng(seed);
  std::vector<WordCount> counts;
  for (std::size_t i = 0; i < n_docs; ++i) {
    const std::size_t j = rng.categorical(prior);
    const auto len = static_cast<std::uint32_t>(rng.between(lengths.min, lengths.max));
    counts.clear();
    for (std::uint32_t n = 0; n < len; ++n) {
      counts.push_back({draw_word(rng, j), 1});
    }
    data.labeled.push_back({make_document("s" + std::to_string(i), counts), path_labels[j]});
  }
  return data;
}

PathModel random_generator_model(std::size_t num_paths, std::size_t vocab_size, double sharpness,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> prior(num_paths);
  double total = 0.0;
  for (double& p : prior) total += (p = 1.0 + 0.5 * rng.uniform());
  std::vector<double> log_prior(num_paths);
  for (std::size_t j = 0; j < num_paths; ++j) log_prior[j] = std::log(prior[j] / total);

  const std::size_t favored = std::max<std::size_t>(1, vocab_size / 10);
  std::vector<double> log_word(num_paths * vocab_size);
  std::vector<double> row(vocab_size);
  for (std::size_t j = 0; j < num_paths; ++j) {
    for (double& w : row) w = 0.5 + rng.uniform();
    for (std::size_t k = 0; k < favored; ++k) row[rng.below(vocab_size)] += sharpness * (0.5 + rng.uniform());
    double sum = 0.0;
    for (double w : row) sum += w;
    for (std::size_t t = 0; t < vocab_size; ++t) log_word[j * vocab_size + t] = std::log(row[t] / sum);
  }
  return PathModel(num_paths, vocab_size, std::move(log_prior), std::move(log_word));
}

}  // namespace pcem
