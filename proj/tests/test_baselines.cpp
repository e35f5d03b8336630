#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "pcem/baselines.hpp"
#include "pcem/error.hpp"
#include "pcem/model.hpp"

using namespace pcem;

namespace {

Taxonomy two_by_two() {
  return normalize_depth(build_taxonomy(
      {{"ROOT", "a"}, {"ROOT", "b"}, {"a", "a1"}, {"a", "a2"}, {"b", "b1"}, {"b", "b2"}}));
}

// Words: w0 marks a, w1 marks b, w2 marks the first leaf, w3 the second.
Dataset two_by_two_corpus(const Taxonomy& t) {
  Dataset d;
  for (int w = 0; w < 4; ++w) d.vocab.add("w" + std::to_string(w));
  d.labeled.push_back({make_document("1", {{0, 1}, {2, 1}}), testing::gold(t, {"a", "a1"})});
  d.labeled.push_back({make_document("2", {{0, 1}, {3, 1}}), testing::gold(t, {"a", "a2"})});
  d.labeled.push_back({make_document("3", {{1, 1}, {2, 1}}), testing::gold(t, {"b", "b1"})});
  d.labeled.push_back({make_document("4", {{1, 1}, {3, 1}}), testing::gold(t, {"b", "b2"})});
  return d;
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("flat training uses one-hot leaf scores") {
    Taxonomy t = testing::two_by_three();
    PathTable p = enumerate_paths(t);
    Dataset d;
    d.vocab.add("w");
    d.labeled.push_back({make_document("x", {{0, 1}}), testing::gold(t, {"c1_1", "c2_2"})});
    PathModel flat = train_flat_nb(d, t, p);
    PathModel pc = train_pcnb(d, t, p);
    // flat: (1 + [0,1,0,0,0,0]) / 7; path cost-sensitive: (1 + [1,2,1,0,0,0]) / 10
    CHECK(std::exp(flat.log_prior(1)) == doctest::Approx(2.0 / 7));
    CHECK(std::exp(flat.log_prior(0)) == doctest::Approx(1.0 / 7));
    CHECK(std::exp(pc.log_prior(0)) == doctest::Approx(0.2));
    CHECK(std::exp(pc.log_prior(1)) == doctest::Approx(0.3));
  }

  TEST_CASE("flat skips documents without a leaf label") {
    Taxonomy t = testing::two_by_three();
    PathTable p = enumerate_paths(t);
    Dataset d;
    d.vocab.add("w");
    d.labeled.push_back({make_document("x", {{0, 1}}), testing::gold(t, {"c1_1"})});
    CHECK_THROWS_AS(train_flat_nb(d, t, p), Error);
    d.labeled.push_back({make_document("y", {{0, 2}}), testing::gold(t, {"c1_2", "c2_4"})});
    PathModel flat = train_flat_nb(d, t, p);
    CHECK(std::exp(flat.log_prior(3)) == doctest::Approx(2.0 / 7));
  }

  TEST_CASE("weak labels: wrong leaf, right top class") {
    Taxonomy t = testing::two_by_three();
    PathTable p = enumerate_paths(t);
    // true path (c1_1, c2_1); similarities pick c1_1 but leaf c2_5
    WeakSimilarities sims{{{0.9, 0.1}, {0.1, 0.0, 0.0, 0.0, 0.7, 0.0}}};
    Document doc = make_document("x", {{0, 1}});
    ScoreCounts flat(p.size(), 1);
    flat.add(doc, *leaf_one_hot_scores(sims, t, p));
    ScoreCounts pc(p.size(), 1);
    pc.add(doc, scores_from_weak(sims, t, p));
    CHECK(flat.path_mass()[0] == 0.0);  // true path gets nothing
    CHECK(pc.path_mass()[0] == 1.0);    // partial credit through c1_1
    CHECK(flat.path_mass()[4] == 1.0);
    CHECK(pc.path_mass()[4] == 1.0);
  }

  TEST_CASE("depth-1 taxonomies: flat NB, top-down NB and PCNB coincide") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      Taxonomy t = testing::flat_taxonomy(2 + rng.below(5));
      PathTable p = enumerate_paths(t);
      Dataset data = testing::random_corpus(rng, t, p, 60, 20, 30);
      PathModel pc = train_pcnb(data, t, p);
      PathModel flat = train_flat_nb(data, t, p);
      TopDownModel td = train_topdown_nb(data, t);
      CHECK(pc == flat);
      REQUIRE(td.locals().size() == 1);
      CHECK(td.locals()[0].model == pc);
      for (const auto& ld : data.test) {
        CHECK(predict(ld.doc, pc, t, p).nodes == predict_topdown(ld.doc, td));
      }
    }
  }

  TEST_CASE("top-down NB descends greedily") {
    Taxonomy t = two_by_two();
    Dataset d = two_by_two_corpus(t);
    TopDownModel m = train_topdown_nb(d, t);
    // root: theta(w|a) = (3,1,2,2)/8, theta(w|b) = (1,3,2,2)/8; at b: b1 (1,2,2,1)/6, b2 (1,2,1,2)/6
    const LocalClassifier& root = m.local(t.root());
    CHECK(std::exp(root.model.log_word(0, 0)) == doctest::Approx(3.0 / 8));
    CHECK(std::exp(root.model.log_word(1, 1)) == doctest::Approx(3.0 / 8));
    const LocalClassifier& b = m.local(t.at("b"));
    CHECK(std::exp(b.model.log_word(1, 3)) == doctest::Approx(2.0 / 6));
    CHECK(predict_topdown(make_document("q", {{1, 1}, {3, 1}}), m) == testing::gold(t, {"b", "b2"}).nodes);
    CHECK(predict_topdown(make_document("q", {{0, 1}, {2, 1}}), m) == testing::gold(t, {"a", "a1"}).nodes);
  }

  TEST_CASE("unreached internal node keeps the smoothing-only model") {
    Taxonomy t = two_by_two();
    Dataset d;
    d.vocab.add("w0");
    d.vocab.add("w1");
    d.labeled.push_back({make_document("1", {{0, 1}}), testing::gold(t, {"a", "a1"})});
    TopDownModel m = train_topdown_nb(d, t);
    CHECK(m.local(t.at("b")).model == estimate({}, {}, 2, 2));
  }

  TEST_CASE("routing weights are a flow") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      Taxonomy t = testing::random_taxonomy(rng, 3);
      PathTable p = enumerate_paths(t);
      Dataset data = split_by_label_rate(testing::random_corpus(rng, t, p, 80, 10, 20), 0.3, 1);
      TopDownResult r = train_topdown_em(data, t, EmConfig{5, 1e-6, 1});
      for (const auto& ld : data.test) {
        for (RoutingMode mode : {RoutingMode::kSoft, RoutingMode::kHard}) {
          auto w = routing_weights(ld.doc, r.model, mode);
          CHECK(w[index(t.root())] == 1.0);
          for (const TaxonomyNode& n : t.nodes()) {
            if (n.children.empty()) continue;
            double sum = 0.0;
            for (NodeId c : n.children) sum += w[index(c)];
            CHECK(std::abs(sum - w[index(n.id)]) < 1e-9);
          }
        }
        // greedy prediction is a root-to-leaf chain
        auto nodes = predict_topdown(ld.doc, r.model);
        REQUIRE_FALSE(nodes.empty());
        CHECK(t.node(nodes.front()).parent == t.root());
        for (std::size_t k = 1; k < nodes.size(); ++k) CHECK(t.node(nodes[k]).parent == nodes[k - 1]);
      }
    }
  }

  TEST_CASE("top-down EM without unlabeled documents equals top-down NB") {
    Rng rng(6);
    Taxonomy t = testing::two_by_three();
    PathTable p = enumerate_paths(t);
    Dataset data = testing::random_corpus(rng, t, p, 40, 0, 10);
    TopDownResult r = train_topdown_em(data, t, EmConfig{});
    CHECK(r.model == train_topdown_nb(data, t));
    CHECK(r.trace.iterations() == 1);
  }

  TEST_CASE("flat EM runs and keeps its labeled rows one-hot") {
    Rng rng(9);
    Taxonomy t = testing::two_by_three();
    PathTable p = enumerate_paths(t);
    Dataset data = split_by_label_rate(testing::random_corpus(rng, t, p, 100, 0, 20), 0.2, 3);
    EmResult r = train_flat_em(data, t, p, EmConfig{10, 1e-6, 2},
                               [](int, std::span<const PathScoreVector> lab, std::span<const PathScoreVector>) {
                                 for (const auto& row : lab) CHECK(row.total() == 1.0);
                               });
    for (std::size_t i = 1; i < r.trace.objective.size(); ++i) {
      CHECK(r.trace.objective[i] >= r.trace.objective[i - 1] - 1e-6 * std::abs(r.trace.objective[i - 1]));
    }
  }

  TEST_CASE("top-down serialization round trip") {
    Taxonomy t = two_by_two();
    Dataset d = two_by_two_corpus(t);
    TopDownModel m = train_topdown_nb(d, t);
    std::stringstream ss;
    save_topdown_model(ss, "td-nb", m, d.vocab);
    SavedTopDownModel back = load_topdown_model(ss, t);
    CHECK(back.kind == "td-nb");
    CHECK(back.vocab == d.vocab.words());
    CHECK(back.model == m);
  }
}
