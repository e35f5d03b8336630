#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "pcem/corpus.hpp"
#include "pcem/error.hpp"

using namespace pcem;

namespace {

Taxonomy small_tree() {
  return normalize_depth(build_taxonomy({{"ROOT", "a"}, {"ROOT", "b"}, {"a", "a1"}, {"a", "a2"}, {"b", "b1"}}));
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("parse a labeled line") {
    Taxonomy t = small_tree();
    Vocabulary v;
    std::istringstream in("d1\ta1\tw3:2 w7:1\n");
    auto docs = read_documents(in, t, v);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].doc.id == "d1");
    CHECK(docs[0].doc.length() == 3);
    CHECK(v.word(docs[0].doc.counts[0].word) == "w3");
    CHECK(docs[0].doc.counts[0].count == 2);
    CHECK(v.word(docs[0].doc.counts[1].word) == "w7");
    // a leaf implies its whole path
    REQUIRE(docs[0].label);
    CHECK(std::get<GoldLabels>(*docs[0].label) == testing::gold(t, {"a", "a1"}));
  }

  TEST_CASE("label specs") {
    Taxonomy t = small_tree();
    Vocabulary v;
    std::istringstream in("u\t-\tx:1\nempty\tb\t\npartial\ta\tx:4 x:1\nlist\ta1,a\ty:1\n");
    auto docs = read_documents(in, t, v);
    REQUIRE(docs.size() == 4);
    CHECK_FALSE(docs[0].label);
    CHECK(docs[1].doc.counts.empty());
    CHECK(std::get<GoldLabels>(*docs[1].label) == testing::gold(t, {"b"}));  // b is internal: partial
    CHECK(std::get<GoldLabels>(*docs[2].label) == testing::gold(t, {"a"}));
    CHECK(docs[2].doc.counts == std::vector<WordCount>{{0, 5}});  // repeated word merged
    CHECK(std::get<GoldLabels>(*docs[3].label) == testing::gold(t, {"a", "a1"}));
  }

  TEST_CASE("parse errors") {
    Taxonomy t = small_tree();
    Vocabulary v;
    auto parse = [&](const std::string& text) {
      std::istringstream in(text);
      return read_documents(in, t, v, nullptr, "docs.tsv");
    };
    CHECK_THROWS_AS(parse("d1\tzzz\tw:1\n"), LabelError);
    CHECK_THROWS_AS(parse("d1\ta2,b1\tw:1\n"), LabelError);  // inconsistent path
    try {
      parse("d1\ta1\tw:1\nd2\ta1\tw:-3\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("d1\ta1\tw1\n"), ParseError);
    CHECK_THROWS_AS(parse("d1 a1 w:1\n"), ParseError);
    CHECK_THROWS_AS(parse("d1\t@sims\tw:1\n"), ParseError);  // no similarity file
  }

  TEST_CASE("weak labels via similarity file") {
    Taxonomy t = small_tree();
    std::istringstream sims_in("d1\t1\t0.9,0.1\nd1\t2\t0.2,0.7,0.1\n");
    SimilarityTable sims = read_similarities(sims_in, t);
    Vocabulary v;
    std::istringstream in("d1\t@sims\tw:1\n");
    auto docs = read_documents(in, t, v, &sims);
    REQUIRE(docs[0].label);
    const auto& ws = std::get<WeakSimilarities>(*docs[0].label);
    CHECK(weak_label_nodes(ws, t) == testing::gold(t, {"a", "a2"}));

    std::istringstream wrong_len("d1\t1\t0.9,0.1,0.3\n");
    CHECK_THROWS_AS(read_similarities(wrong_len, t), ParseError);
  }

  TEST_CASE("weak_label_nodes") {
    Taxonomy t = small_tree();
    // level orders: depth 1 (a, b); depth 2 (a1, a2, b1)
    CHECK(weak_label_nodes({{{0.9, 0.1}, {0.2, 0.7, 0.1}}}, t) == testing::gold(t, {"a", "a2"}));
    CHECK(weak_label_nodes({{{0.5, 0.5}, {0.3, 0.3, 0.3}}}, t) == testing::gold(t, {"a", "a1"}));
    // argmaxes in different subtrees are returned as they are
    GoldLabels split = weak_label_nodes({{{0.9, 0.1}, {0.0, 0.1, 0.8}}}, t);
    CHECK(split == testing::gold(t, {"a", "b1"}));

    CHECK_THROWS_AS(weak_label_nodes({{{0.9, 0.1}}}, t), LabelError);
    CHECK_THROWS_AS(weak_label_nodes({{{0.9, std::nan("")}, {0.1, 0.2, 0.3}}}, t), LabelError);
  }

  TEST_CASE("weak similarities skip dummy nodes") {
    Taxonomy t = normalize_depth(build_taxonomy({{"ROOT", "x"}, {"ROOT", "a"}, {"a", "a1"}, {"a", "a2"}}));
    CHECK(t.level(2).size() == 3);       // a1, a2, x~1
    CHECK(t.real_level(2).size() == 2);  // a1, a2
    CHECK(weak_label_nodes({{{0.1, 0.9}, {0.4, 0.6}}}, t) == testing::gold(t, {"x", "a2"}));
  }

  TEST_CASE("split by label rate") {
    Rng rng(3);
    Taxonomy t = testing::two_by_three();
    PathTable p = enumerate_paths(t);
    Dataset data = testing::random_corpus(rng, t, p, 101, 5, 20);

    Dataset all = split_by_label_rate(data, 1.0, 9);
    CHECK(all.unlabeled.empty());
    CHECK(all.labeled == data.labeled);

    Dataset a = split_by_label_rate(data, 0.2, 1);
    Dataset b = split_by_label_rate(data, 0.2, 1);
    Dataset c = split_by_label_rate(data, 0.2, 2);
    CHECK(a.labeled.size() == 20);  // round(20.2)
    CHECK(a.labeled.size() + a.unlabeled.size() == 101);
    CHECK(a.labeled == b.labeled);
    CHECK(a.unlabeled == b.unlabeled);
    CHECK(c.labeled.size() == a.labeled.size());
    CHECK_FALSE(c.labeled == a.labeled);
    CHECK(a.test == data.test);

    std::set<std::string> ids;
    for (const auto& ld : a.labeled) ids.insert(ld.doc.id);
    for (const auto& d : a.unlabeled) ids.insert(d.id);
    CHECK(ids.size() == 101);

    // round half up: 0.5% of 101 = 0.505 -> 1
    CHECK(split_by_label_rate(data, 0.005, 1).labeled.size() == 1);
    CHECK_THROWS_AS(split_by_label_rate(data, 0.004, 1), Error);
    CHECK_THROWS_AS(split_by_label_rate(data, 0.0, 1), Error);
    CHECK_THROWS_AS(split_by_label_rate(data, 1.5, 1), Error);
  }

  TEST_CASE("one percent of the 20 newsgroups training set") {
    Dataset data;
    data.labeled.resize(15077);
    CHECK(split_by_label_rate(data, 0.01, 1).labeled.size() == 151);
    CHECK(split_by_label_rate(data, 0.01, 1).unlabeled.size() == 14926);
  }

  TEST_CASE("write then read round trip") {
    Rng rng(11);
    Taxonomy t = small_tree();
    Vocabulary vocab;
    std::vector<ParsedDocument> docs;
    for (int i = 0; i < 30; ++i) {
      std::vector<WordCount> counts;
      for (int n = 0; n < 6; ++n) {
        counts.push_back({vocab.add("tok" + std::to_string(rng.below(15))), 1 + static_cast<std::uint32_t>(rng.below(4))});
      }
      ParsedDocument pd{make_document("doc" + std::to_string(i), counts), std::nullopt};
      switch (i % 3) {
        case 0: pd.label = testing::gold(t, {"b", "b1"}); break;
        case 1: pd.label = WeakSimilarities{{{rng.uniform(), rng.uniform()}, {rng.uniform(), rng.uniform(), rng.uniform()}}}; break;
        default: break;
      }
      docs.push_back(std::move(pd));
    }
    std::stringstream doc_text;
    std::stringstream sim_text;
    write_documents(doc_text, docs, vocab, t);
    write_similarities(sim_text, docs);
    SimilarityTable sims = read_similarities(sim_text, t);
    Vocabulary reread_vocab;
    auto reread = read_documents(doc_text, t, reread_vocab, &sims);
    CHECK(reread_vocab == vocab);
    REQUIRE(reread.size() == docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      CHECK(reread[i].doc == docs[i].doc);
      CHECK(reread[i].label == docs[i].label);
    }
  }

  TEST_CASE("complete_path") {
    Taxonomy t = small_tree();
    CHECK(complete_path(testing::gold(t, {"a1"}), t) == testing::gold(t, {"a", "a1"}));
    CHECK(complete_path(testing::gold(t, {"a"}), t) == testing::gold(t, {"a"}));
    Taxonomy d = normalize_depth(build_taxonomy({{"ROOT", "x"}, {"ROOT", "a"}, {"a", "a1"}}));
    CHECK(complete_path(testing::gold(d, {"x"}), d) == testing::gold(d, {"x"}));
  }
}
