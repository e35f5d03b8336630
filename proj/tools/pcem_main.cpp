#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcem/baselines.hpp"
#include "pcem/corpus.hpp"
#include "pcem/error.hpp"
#include "pcem/evaluation.hpp"
#include "pcem/model.hpp"
#include "pcem/taxonomy.hpp"

namespace fs = std::filesystem;
using namespace pcem;

namespace {

const std::vector<std::string> kAlgorithmNames{"pcnb", "pcem", "flat-nb", "flat-em", "td-nb", "td-em"};

struct Options {
  std::string hierarchy;
  std::string train;
  std::string test;
  std::string sims;
  std::string model;
  std::vector<std::string> algos;
  std::vector<double> rates;
  std::vector<std::uint64_t> seeds;
  int max_iters = EmConfig{}.max_iters;
  double tol = EmConfig{}.rel_tol;
  int min_iters = EmConfig{}.min_iters;
  bool hard_routing = false;
  std::string out;

  // synth
  std::size_t docs = 5000;
  std::size_t test_docs = 1000;
  std::size_t vocab = 50;
  double sharpness = 1.5;
  std::uint32_t min_len = 10;
  std::uint32_t max_len = 50;
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  return f;
}

EmConfig em_config(const Options& o) {
  EmConfig cfg{o.max_iters, o.tol, std::min(o.min_iters, o.max_iters)};
  cfg.validate();
  return cfg;
}

std::vector<Algorithm> algorithms(const Options& o) {
  std::vector<Algorithm> out;
  for (const std::string& a : o.algos) out.push_back(parse_algorithm(a));
  return out;
}

std::string join_names(const Taxonomy& t, const std::vector<NodeId>& nodes) {
  std::string s;
  for (NodeId id : nodes) s += (s.empty() ? "" : ",") + t.node(id).name;
  return s;
}

int cmd_train(const Options& o) {
  const Taxonomy t = load_taxonomy(o.hierarchy);
  const PathTable paths = enumerate_paths(t);
  std::optional<std::string> sims;
  if (!o.sims.empty()) sims = o.sims;
  Dataset data = load_corpus({o.train, std::nullopt, sims}, t);
  const double rate = o.rates.empty() ? 1.0 : o.rates.front();
  const std::uint64_t seed = o.seeds.empty() ? 1 : o.seeds.front();
  if (rate < 1.0) data = split_by_label_rate(data, rate, seed);

  const Algorithm algo = parse_algorithm(o.algos.front());
  TopDownOptions td;
  td.routing = o.hard_routing ? RoutingMode::kHard : RoutingMode::kSoft;
  const TrainedClassifier clf = train_classifier(algo, data, t, paths, em_config(o), td);

  auto f = open_out(o.out);
  const std::string kind(algorithm_name(algo));
  if (const auto* m = std::get_if<PathModel>(&clf.model())) {
    save_path_model(f, kind, *m, data.vocab, t, paths);
  } else {
    save_topdown_model(f, kind, std::get<TopDownModel>(clf.model()), data.vocab);
  }
  std::cerr << kind << ": " << data.labeled.size() << " labeled, " << data.unlabeled.size() << " unlabeled, "
            << clf.trace().iterations() << " EM iterations";
  if (!clf.trace().objective.empty()) std::cerr << ", objective " << clf.trace().objective.back();
  std::cerr << "\n";
  return 0;
}

// Word ids of documents read against the model's vocabulary; words the model
// never saw are dropped.
std::vector<ParsedDocument> read_for_model(const std::string& path, const Taxonomy& t,
                                           const std::vector<std::string>& model_vocab) {
  Vocabulary vocab;
  for (const std::string& w : model_vocab) vocab.add(w);
  auto in = open_in(path);
  std::vector<ParsedDocument> docs = read_documents(in, t, vocab, nullptr, path);
  for (ParsedDocument& pd : docs) {
    std::vector<WordCount> kept;
    for (const WordCount& wc : pd.doc.counts) {
      if (wc.word < model_vocab.size()) kept.push_back(wc);
    }
    pd.doc = make_document(pd.doc.id, std::move(kept));
  }
  return docs;
}

int cmd_predict(const Options& o) {
  const Taxonomy t = load_taxonomy(o.hierarchy);
  const PathTable paths = enumerate_paths(t);

  std::ifstream in = open_in(o.model);
  std::string header;
  std::getline(in, header);
  in.seekg(0);

  std::vector<std::string> vocab;
  std::optional<TrainedClassifier> clf;
  try {
    if (header.rfind("pcem-topdown", 0) == 0) {
      SavedTopDownModel saved = load_topdown_model(in, t);
      vocab = std::move(saved.vocab);
      clf.emplace(parse_algorithm(saved.kind), std::move(saved.model));
    } else {
      SavedPathModel saved = load_path_model(in);
      std::vector<std::vector<std::string>> names;
      for (std::size_t j = 0; j < paths.size(); ++j) {
        std::vector<std::string> row;
        for (NodeId id : paths.path(j)) row.push_back(t.node(id).name);
        names.push_back(std::move(row));
      }
      if (saved.path_names != names) throw Error("model paths do not match the hierarchy");
      vocab = std::move(saved.vocab);
      clf.emplace(parse_algorithm(saved.kind), std::move(saved.model));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw Error(o.model + ": " + e.what());
  }

  const std::vector<ParsedDocument> docs = read_for_model(o.test, t, vocab);
  std::ofstream file;
  if (!o.out.empty()) file = open_out(o.out);
  std::ostream& out = o.out.empty() ? std::cout : file;
  out << "doc_id\tpredicted\n";
  for (const ParsedDocument& pd : docs) {
    out << pd.doc.id << '\t' << join_names(t, clf->predict(pd.doc, t, paths)) << '\n';
  }
  return 0;
}

int cmd_experiment(const Options& o) {
  ExperimentConfig cfg;
  cfg.algorithms = algorithms(o);
  if (!o.rates.empty()) cfg.rates = o.rates;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  cfg.em = em_config(o);
  cfg.topdown.routing = o.hard_routing ? RoutingMode::kHard : RoutingMode::kSoft;
  cfg.hierarchy = o.hierarchy;
  cfg.train = o.train;
  cfg.test = o.test;
  if (!o.sims.empty()) cfg.sims = o.sims;
  if (!o.out.empty()) cfg.out_dir = o.out;
  const EvalReport report = run_experiment(cfg);
  write_aggregate_csv(std::cout, report);
  return 0;
}

int cmd_synth(const Options& o) {
  const Taxonomy t = load_taxonomy(o.hierarchy);
  const PathTable paths = enumerate_paths(t);
  const std::uint64_t seed = o.seeds.empty() ? 1 : o.seeds.front();
  const PathModel truth = random_generator_model(paths.size(), o.vocab, o.sharpness, seed);
  const LengthRange lengths{o.min_len, o.max_len};
  const Dataset train = generate_synthetic(t, paths, truth, o.docs, lengths, seed + 1);
  const fs::path dir(o.out);

  auto write_split = [&](const char* name, const Dataset& d) {
    std::vector<ParsedDocument> docs;
    for (const LabeledDocument& ld : d.labeled) docs.push_back({ld.doc, ld.label});
    auto f = open_out(dir / name);
    write_documents(f, docs, d.vocab, t);
  };
  write_split("train.tsv", train);
  if (o.test_docs > 0) {
    Dataset test = generate_synthetic(t, paths, truth, o.test_docs, lengths, seed + 2);
    for (LabeledDocument& ld : test.labeled) ld.doc.id = "t" + ld.doc.id;
    write_split("test.tsv", test);
  }
  {
    auto f = open_out(dir / "truth.model");
    save_path_model(f, "truth", truth, train.vocab, t, paths);
  }
  {
    std::ifstream src = open_in(o.hierarchy);
    auto f = open_out(dir / "hierarchy.tsv");
    f << src.rdbuf();
  }
  std::cerr << "wrote " << o.docs << " training and " << o.test_docs << " test documents to " << dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical text classification with path-generated naive Bayes and EM"};
  app.require_subcommand(1);
  Options o;

  auto hierarchy = [&](CLI::App* sub) {
    sub->add_option("--hierarchy", o.hierarchy, "parent<TAB>child edge file")->required()->check(CLI::ExistingFile);
  };
  auto em_flags = [&](CLI::App* sub) {
    sub->add_option("--max-iters", o.max_iters, "EM iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--tol", o.tol, "relative objective change that stops EM")->capture_default_str();
    sub->add_option("--min-iters", o.min_iters, "EM iterations before the stopping test")->capture_default_str();
    sub->add_flag("--hard-routing", o.hard_routing, "td-em: route unlabeled documents greedily");
  };
  auto algo_flag = [&](CLI::App* sub, bool many, std::vector<std::string> def) {
    o.algos = std::move(def);
    auto* opt = sub->add_option("--algo", o.algos, "pcnb, pcem, flat-nb, flat-em, td-nb, td-em")
                    ->check(CLI::IsMember(kAlgorithmNames));
    if (many) {
      opt->delimiter(',');
    } else {
      opt->expected(1);
    }
  };

  CLI::App* train = app.add_subcommand("train", "train a model and save it");
  hierarchy(train);
  train->add_option("--train", o.train, "training documents")->required()->check(CLI::ExistingFile);
  train->add_option("--sims", o.sims, "weak similarity file")->check(CLI::ExistingFile);
  train->add_option("--rates", o.rates, "fraction of labels kept (default 1)")->expected(1);
  train->add_option("--seeds", o.seeds, "seed of the label split")->expected(1);
  train->add_option("--out", o.out, "model file")->required();
  em_flags(train);

  CLI::App* predict = app.add_subcommand("predict", "predict classes with a saved model");
  hierarchy(predict);
  predict->add_option("--model", o.model, "model file written by train")->required()->check(CLI::ExistingFile);
  predict->add_option("--test", o.test, "documents to classify")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", o.out, "predictions TSV (default stdout)");

  CLI::App* eval = app.add_subcommand("eval", "train on --train and score --test at one label rate");
  CLI::App* sweep = app.add_subcommand("sweep", "label-rate x seed x algorithm sweep");
  for (CLI::App* sub : {eval, sweep}) {
    hierarchy(sub);
    sub->add_option("--train", o.train, "training documents")->required()->check(CLI::ExistingFile);
    sub->add_option("--test", o.test, "labeled test documents")->required()->check(CLI::ExistingFile);
    sub->add_option("--sims", o.sims, "weak similarity file")->check(CLI::ExistingFile);
    sub->add_option("--seeds", o.seeds, "split seeds (default 1,2,3,4,5)")->delimiter(',');
    sub->add_option("--out", o.out, "directory for runs.csv, aggregate.csv, per_class.csv, metadata.json");
    em_flags(sub);
  }
  eval->add_option("--rates", o.rates, "label rate (default 1)")->expected(1);
  sweep->add_option("--rates", o.rates, "label rates")->delimiter(',')->required();

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic corpus drawn from a random path model");
  hierarchy(synth);
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--seeds", o.seeds, "generator seed")->expected(1);
  synth->add_option("--docs", o.docs, "training documents")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--test-docs", o.test_docs, "test documents")->capture_default_str();
  synth->add_option("--vocab", o.vocab, "vocabulary size")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--sharpness", o.sharpness, "extra mass on path-specific words")->capture_default_str();
  synth->add_option("--min-len", o.min_len, "shortest document")->capture_default_str();
  synth->add_option("--max-len", o.max_len, "longest document")->capture_default_str();

  // Defaults depend on the subcommand, so they are set after parsing.
  algo_flag(train, false, {});
  algo_flag(eval, true, {});
  algo_flag(sweep, true, {});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (o.algos.empty()) {
    if (sweep->parsed()) {
      o.algos = kAlgorithmNames;
    } else {
      o.algos = {"pcem"};
    }
  }

  try {
    if (train->parsed()) return cmd_train(o);
    if (predict->parsed()) return cmd_predict(o);
    if (eval->parsed() || sweep->parsed()) return cmd_experiment(o);
    if (synth->parsed()) return cmd_synth(o);
  } catch (const ParseError& e) {
    std::cerr << "pcem: error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "pcem: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
