#ifndef PCEM_CORPUS_HPP_
#define PCEM_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pcem/taxonomy.hpp"

namespace pcem {

using WordId = std::uint32_t;

class Vocabulary {
 public:
  // Returns the id of `word`, adding it if new.
  WordId add(std::string_view word);
  std::optional<WordId> find(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

struct WordCount {
  WordId word = 0;
  std::uint32_t count = 0;

  bool operator==(const WordCount&) const = default;
};

// Sparse bag of words. `counts` is sorted by word id and holds only positive
// counts.
struct Document {
  std::string id;
  std::vector<WordCount> counts;

  std::uint64_t length() const;
  bool operator==(const Document&) const = default;
};

// Builds a Document from (word, count) pairs; duplicate words are summed and
// zero counts dropped.
Document make_document(std::string id, std::vector<WordCount> counts);

// Gold classes of a document, at most one per depth, sorted by depth. May
// stop short of the leaf depth (partial labels) or skip depths.
struct GoldLabels {
  std::vector<NodeId> nodes;

  bool operator==(const GoldLabels&) const = default;
};

// Per-depth similarity of a document to every real class at that depth:
// by_depth[k-1][i] belongs to taxonomy.real_level(k)[i].
struct WeakSimilarities {
  std::vector<std::vector<double>> by_depth;

  bool operator==(const WeakSimilarities&) const = default;
};

using Supervision = std::variant<GoldLabels, WeakSimilarities>;

struct LabeledDocument {
  Document doc;
  Supervision label;

  bool operator==(const LabeledDocument&) const = default;
};

struct Dataset {
  Vocabulary vocab;
  std::vector<LabeledDocument> labeled;
  std::vector<Document> unlabeled;
  std::vector<LabeledDocument> test;
};

// Checks depth uniqueness and the parent relation between labels at
// consecutive depths. Dummy nodes are rejected. Throws LabelError.
void validate_gold(const GoldLabels& labels, const Taxonomy& t);

// When the deepest label is a real leaf, returns the leaf's whole chain
// (dummies excluded); otherwise returns `labels` unchanged.
GoldLabels complete_path(const GoldLabels& labels, const Taxonomy& t);

// Per-depth argmax of the similarities, one real node per depth 1..d. Ties go
// to the lowest position in real_level(k). Throws LabelError on a missing or
// mis-sized depth vector or a NaN.
GoldLabels weak_label_nodes(const WeakSimilarities& sims, const Taxonomy& t);

// ---------------------------------------------------------------------------
// File formats.
//
// Document file, one document per line:
//   doc_id<TAB>label_spec<TAB>word:count word:count ...
// label_spec is `-` (unlabeled), a class name (a leaf implies its full path),
// a comma-joined list of classes (one per depth), or `@...` to take weak
// similarities from the similarity file. The word field may be empty. An
// optional first line `#vocab<TAB>w1 w2 ...` fixes word ids.
//
// Similarity file, one line per (document, depth):
//   doc_id<TAB>depth<TAB>v1,v2,...
// ---------------------------------------------------------------------------

using SimilarityTable = std::map<std::string, WeakSimilarities>;

SimilarityTable read_similarities(std::istream& in, const Taxonomy& t,
                                  const std::string& source = "<stream>");
SimilarityTable read_similarity_file(const std::string& path, const Taxonomy& t);

struct ParsedDocument {
  Document doc;
  std::optional<Supervision> label;
};

// Parses a document stream, interning words into `vocab`. Throws ParseError
// (with line number) on malformed lines or negative counts, LabelError on
// unknown class names.
std::vector<ParsedDocument> read_documents(std::istream& in, const Taxonomy& t, Vocabulary& vocab,
                                           const SimilarityTable* sims = nullptr,
                                           const std::string& source = "<stream>");

void write_documents(std::ostream& out, const std::vector<ParsedDocument>& docs,
                     const Vocabulary& vocab, const Taxonomy& t);
void write_similarities(std::ostream& out, const std::vector<ParsedDocument>& docs);

struct CorpusFiles {
  std::string train;
  std::optional<std::string> test;
  std::optional<std::string> sims;
};

// Training documents with a label go to Dataset::labeled, `-` documents to
// Dataset::unlabeled. Test documents must carry gold labels. The vocabulary
// is the union over train and test.
Dataset load_corpus(const CorpusFiles& files, const Taxonomy& t);

// Keeps labels on round_half_up(rate * N) of the labeled training documents,
// chosen uniformly at random by `seed`, and moves the rest to unlabeled.
// Kept documents stay in their original order. Throws Error for rate outside
// (0, 1] or an empty labeled subset.
Dataset split_by_label_rate(const Dataset& data, double rate, std::uint64_t seed);

}  // namespace pcem

#endif  // PCEM_CORPUS_HPP_
