#include "pcem/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pcem/error.hpp"
#include "pcem/random.hpp"

namespace pcem {

WordId Vocabulary::add(std::string_view word) {
  auto it = ids_.find(std::string(word));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(words_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Document::length() const {
  std::uint64_t n = 0;
  for (const WordCount& wc : counts) n += wc.count;
  return n;
}

Document make_document(std::string id, std::vector<WordCount> counts) {
  std::sort(counts.begin(), counts.end(),
            [](const WordCount& a, const WordCount& b) { return a.word < b.word; });
  std::vector<WordCount> merged;
  for (const WordCount& wc : counts) {
    if (wc.count == 0) continue;
    if (!merged.empty() && merged.back().word == wc.word) {
      merged.back().count += wc.count;
    } else {
      merged.push_back(wc);
    }
  }
  return Document{std::move(id), std::move(merged)};
}

void validate_gold(const GoldLabels& labels, const Taxonomy& t) {
  std::optional<NodeId> prev;
  for (NodeId id : labels.nodes) {
    if (index(id) >= t.size() || id == t.root()) throw LabelError("label is not a class node");
    const TaxonomyNode& n = t.node(id);
    if (n.is_dummy) throw LabelError("label '" + n.name + "' is a dummy node");
    if (prev) {
      const TaxonomyNode& p = t.node(*prev);
      if (n.depth <= p.depth) {
        throw LabelError("labels '" + p.name + "' and '" + n.name + "' are not at increasing depths");
      }
      if (n.depth == p.depth + 1 && n.parent != p.id) {
        throw LabelError("label '" + n.name + "' is not a child of '" + p.name + "'");
      }
    }
    prev = id;
  }
}

GoldLabels complete_path(const GoldLabels& labels, const Taxonomy& t) {
  if (labels.nodes.empty()) return labels;
  NodeId deepest = labels.nodes.back();
  if (!t.is_leaf(deepest) && !t.node(t.node(deepest).children.front()).is_dummy) return labels;
  GoldLabels out;
  for (NodeId id : t.chain(deepest)) {
    if (!t.node(id).is_dummy) out.nodes.push_back(id);
  }
  // Keep any explicit labels that disagree with the chain so validation can
  // still report them; a consistent list is a prefix-compatible subset.
  for (NodeId id : labels.nodes) {
    if (std::find(out.nodes.begin(), out.nodes.end(), id) == out.nodes.end()) return labels;
  }
  return out;
}

GoldLabels weak_label_nodes(const WeakSimilarities& sims, const Taxonomy& t) {
  GoldLabels out;
  for (int k = 1; k <= t.depth(); ++k) {
    const auto level = t.real_level(k);
    if (level.empty()) continue;  // only dummies at this depth
    const auto depth_index = static_cast<std::size_t>(k - 1);
    if (depth_index >= sims.by_depth.size() || sims.by_depth[depth_index].empty()) {
      throw LabelError("missing similarity vector for depth " + std::to_string(k));
    }
    const auto& v = sims.by_depth[depth_index];
    if (v.size() != level.size()) {
      throw LabelError("similarity vector for depth " + std::to_string(k) + " has " +
                       std::to_string(v.size()) + " values, expected " + std::to_string(level.size()));
    }
    std::size_t best = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::isnan(v[i])) throw LabelError("NaN similarity at depth " + std::to_string(k));
      if (v[i] > v[best]) best = i;
    }
    out.nodes.push_back(level[best]);
  }
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, const std::string& source, std::size_t lineno) {
  // from_chars does not accept a leading '+'.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(source, lineno, "bad number '" + std::string(s) + "'");
  }
  return v;
}

GoldLabels parse_gold(std::string_view spec, const Taxonomy& t) {
  GoldLabels labels;
  for (std::string_view name : split(spec, ',')) labels.nodes.push_back(t.at(name));
  std::stable_sort(labels.nodes.begin(), labels.nodes.end(),
                   [&](NodeId a, NodeId b) { return t.node(a).depth < t.node(b).depth; });
  labels = complete_path(labels, t);
  validate_gold(labels, t);
  return labels;
}

std::string label_spec(const std::optional<Supervision>& label, const Taxonomy& t) {
  if (!label) return "-";
  if (std::holds_alternative<WeakSimilarities>(*label)) return "@sims";
  const auto& gold = std::get<GoldLabels>(*label);
  std::string out;
  for (NodeId id : gold.nodes) {
    if (!out.empty()) out += ',';
    out += t.node(id).name;
  }
  return out;
}

}  // namespace

SimilarityTable read_similarities(std::istream& in, const Taxonomy& t, const std::string& source) {
  SimilarityTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(source, lineno, "expected `doc_id<TAB>depth<TAB>values`");
    int depth = 0;
    auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), depth);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size() || depth < 1 ||
        depth > t.depth()) {
      throw ParseError(source, lineno, "bad depth '" + std::string(fields[1]) + "'");
    }
    std::vector<double> values;
    for (std::string_view v : split(fields[2], ',')) values.push_back(parse_double(v, source, lineno));
    const std::size_t expected = t.real_level(depth).size();
    if (values.size() != expected) {
      throw ParseError(source, lineno,
                       "depth " + std::to_string(depth) + " needs " + std::to_string(expected) +
                           " similarities, got " + std::to_string(values.size()));
    }
    WeakSimilarities& sims = table[std::string(fields[0])];
    if (sims.by_depth.size() < static_cast<std::size_t>(t.depth())) {
      sims.by_depth.resize(static_cast<std::size_t>(t.depth()));
    }
    auto& slot = sims.by_depth[static_cast<std::size_t>(depth - 1)];
    if (!slot.empty()) throw ParseError(source, lineno, "duplicate depth for document");
    slot = std::move(values);
  }
  return table;
}

SimilarityTable read_similarity_file(const std::string& path, const Taxonomy& t) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open similarity file " + path);
  return read_similarities(in, t, path);
}

std::vector<ParsedDocument> read_documents(std::istream& in, const Taxonomy& t, Vocabulary& vocab,
                                           const SimilarityTable* sims, const std::string& source) {
  std::vector<ParsedDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.starts_with("#vocab\t")) {
      for (std::string_view w : split(std::string_view(line).substr(7), ' ')) {
        if (!w.empty()) vocab.add(w);
      }
      continue;
    }
    if (line.front() == '#') continue;

    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(source, lineno, "expected `doc_id<TAB>label_spec<TAB>word:count ...`");
    }
    if (fields[0].empty()) throw ParseError(source, lineno, "empty document id");

    std::vector<WordCount> counts;
    for (std::string_view tok : split(fields[2], ' ')) {
      if (tok.empty()) continue;
      auto colon = tok.rfind(':');
      if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size()) {
        throw ParseError(source, lineno, "bad token '" + std::string(tok) + "'");
      }
      std::string_view count_text = tok.substr(colon + 1);
      if (count_text.front() == '-') {
        throw ParseError(source, lineno, "negative count in '" + std::string(tok) + "'");
      }
      std::uint32_t count = 0;
      auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
      if (ec != std::errc() || ptr != count_text.data() + count_text.size()) {
        throw ParseError(source, lineno, "bad count in '" + std::string(tok) + "'");
      }
      counts.push_back({vocab.add(tok.substr(0, colon)), count});
    }

    ParsedDocument pd;
    pd.doc = make_document(std::string(fields[0]), std::move(counts));
    std::string_view spec = fields[1];
    if (spec == "-") {
      // unlabeled
    } else if (spec.starts_with("@")) {
      if (sims == nullptr) {
        throw ParseError(source, lineno, "document defers to a similarity file but none was given");
      }
      auto it = sims->find(pd.doc.id);
      if (it == sims->end()) {
        throw ParseError(source, lineno, "no similarities for document '" + pd.doc.id + "'");
      }
      pd.label = it->second;
    } else {
      try {
        pd.label = parse_gold(spec, t);
      } catch (const LabelError& e) {
        throw LabelError(source + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    docs.push_back(std::move(pd));
  }
  return docs;
}

void write_documents(std::ostream& out, const std::vector<ParsedDocument>& docs, const Vocabulary& vocab,
                     const Taxonomy& t) {
  out << "#vocab\t";
  for (std::size_t i = 0; i < vocab.size(); ++i) out << (i ? " " : "") << vocab.word(static_cast<WordId>(i));
  out << '\n';
  for (const ParsedDocument& pd : docs) {
    out << pd.doc.id << '\t' << label_spec(pd.label, t) << '\t';
    for (std::size_t i = 0; i < pd.doc.counts.size(); ++i) {
      out << (i ? " " : "") << vocab.word(pd.doc.counts[i].word) << ':' << pd.doc.counts[i].count;
    }
    out << '\n';
  }
}

void write_similarities(std::ostream& out, const std::vector<ParsedDocument>& docs) {
  std::ostringstream buf;
  buf.precision(17);
  for (const ParsedDocument& pd : docs) {
    if (!pd.label || !std::holds_alternative<WeakSimilarities>(*pd.label)) continue;
    const auto& sims = std::get<WeakSimilarities>(*pd.label);
    for (std::size_t k = 0; k < sims.by_depth.size(); ++k) {
      if (sims.by_depth[k].empty()) continue;
      buf << pd.doc.id << '\t' << k + 1 << '\t';
      for (std::size_t i = 0; i < sims.by_depth[k].size(); ++i) buf << (i ? "," : "") << sims.by_depth[k][i];
      buf << '\n';
    }
  }
  out << buf.str();
}

Dataset load_corpus(const CorpusFiles& files, const Taxonomy& t) {
  SimilarityTable sims;
  if (files.sims) sims = read_similarity_file(*files.sims, t);

  Dataset data;
  std::ifstream train(files.train);
  if (!train) throw Error("cannot open corpus file " + files.train);
  for (ParsedDocument& pd : read_documents(train, t, data.vocab, files.sims ? &sims : nullptr, files.train)) {
    if (pd.label) {
      data.labeled.push_back({std::move(pd.doc), std::move(*pd.label)});
    } else {
      data.unlabeled.push_back(std::move(pd.doc));
    }
  }
  if (files.test) {
    std::ifstream test(*files.test);
    if (!test) throw Error("cannot open corpus file " + *files.test);
    for (ParsedDocument& pd : read_documents(test, t, data.vocab, nullptr, *files.test)) {
      if (!pd.label) throw LabelError(*files.test + ": test document '" + pd.doc.id + "' has no gold label");
      data.test.push_back({std::move(pd.doc), std::move(*pd.label)});
    }
  }
  return data;
}

Dataset split_by_label_rate(const Dataset& data, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw Error("label rate must be in (0, 1]");
  const std::size_t n = data.labeled.size();
  const auto keep = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 0.5));
  if (keep == 0) throw Error("label rate leaves no labeled documents");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> kept(n, false);
  for (std::size_t i = 0; i < keep; ++i) kept[order[i]] = true;

  Dataset out;
  out.vocab = data.vocab;
  out.test = data.test;
  out.unlabeled = data.unlabeled;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) {
      out.labeled.push_back(data.labeled[i]);
    } else {
      out.unlabeled.push_back(data.labeled[i].doc);
    }
  }
  return out;
}

}  // namespace pcem
