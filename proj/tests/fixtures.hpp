#ifndef PCEM_TESTS_FIXTURES_HPP_
#define PCEM_TESTS_FIXTURES_HPP_

// Shared builders for the unit and acceptance suites.

#include <cstdint>
#include <string>
#include <vector>

#include "pcem/corpus.hpp"
#include "pcem/random.hpp"
#include "pcem/taxonomy.hpp"

namespace pcem::testing {

// Two depth-1 classes with three children each; path j+1 ends in c2_{j+1}.
inline std::vector<Edge> two_by_three_edges() {
  return {{"ROOT", "c1_1"}, {"ROOT", "c1_2"}, {"c1_1", "c2_1"}, {"c1_1", "c2_2"},
          {"c1_1", "c2_3"}, {"c1_2", "c2_4"}, {"c1_2", "c2_5"}, {"c1_2", "c2_6"}};
}

inline Taxonomy two_by_three() { return normalize_depth(build_taxonomy(two_by_three_edges())); }

inline GoldLabels gold(const Taxonomy& t, const std::vector<std::string>& names) {
  GoldLabels g;
  for (const auto& n : names) g.nodes.push_back(t.at(n));
  return g;
}

// Flat taxonomy with `leaves` classes l0, l1, ...
inline Taxonomy flat_taxonomy(std::size_t leaves) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < leaves; ++i) edges.emplace_back("ROOT", "l" + std::to_string(i));
  return normalize_depth(build_taxonomy(edges));
}

// Random tree of depth `depth` (2 or 3); internal nodes get 1-3 children and
// some branches stop early so depth normalization has work to do.
inline Taxonomy random_taxonomy(Rng& rng, int depth) {
  std::vector<Edge> edges;
  int counter = 0;
  std::vector<std::string> frontier{"ROOT"};
  for (int k = 1; k <= depth; ++k) {
    std::vector<std::string> next;
    for (const std::string& parent : frontier) {
      // Keep at least one branch reaching full depth.
      const bool may_stop = k > 1 && !next.empty();
      if (may_stop && rng.uniform() < 0.25) continue;
      const auto kids = 1 + rng.below(k == 1 ? 3 : 2) + (k == 1 ? 1 : 0);
      for (std::uint64_t c = 0; c < kids; ++c) {
        std::string name = "n" + std::to_string(counter++);
        edges.emplace_back(parent, name);
        next.push_back(name);
      }
    }
    frontier = std::move(next);
  }
  return normalize_depth(build_taxonomy(edges));
}

// Random labeled corpus over `t`: each document picks a path, then draws
// words with a bias toward path-specific words. Every document gets gold
// labels for its whole (real) path; test documents likewise.
inline Dataset random_corpus(Rng& rng, const Taxonomy& t, const PathTable& paths, std::size_t n_train,
                             std::size_t n_test, std::size_t vocab) {
  Dataset data;
  for (std::size_t w = 0; w < vocab; ++w) data.vocab.add("w" + std::to_string(w));
  auto make = [&](std::size_t i, const std::string& prefix) {
    const std::size_t j = rng.below(paths.size());
    std::vector<WordCount> counts;
    const auto len = rng.between(0, 12);
    for (std::uint64_t n = 0; n < len; ++n) {
      WordId w = rng.uniform() < 0.5 ? static_cast<WordId>((j * 7 + rng.below(3)) % vocab)
                                     : static_cast<WordId>(rng.below(vocab));
      counts.push_back({w, 1});
    }
    GoldLabels g;
    for (NodeId id : paths.path(j)) {
      if (!t.node(id).is_dummy) g.nodes.push_back(id);
    }
    return LabeledDocument{make_document(prefix + std::to_string(i), counts), g};
  };
  for (std::size_t i = 0; i < n_train; ++i) data.labeled.push_back(make(i, "d"));
  for (std::size_t i = 0; i < n_test; ++i) data.test.push_back(make(i, "t"));
  return data;
}

// Weak similarities that favour `path`'s nodes, with probability `noise` of
// favouring a random node instead at each depth.
inline WeakSimilarities random_similarities(Rng& rng, const Taxonomy& t, const std::vector<NodeId>& truth,
                                            double noise) {
  WeakSimilarities s;
  for (int k = 1; k <= t.depth(); ++k) {
    auto level = t.real_level(k);
    std::vector<double> v(level.size());
    for (double& x : v) x = rng.uniform() * 0.5;
    std::size_t favored = rng.below(level.size());
    if (rng.uniform() >= noise) {
      for (std::size_t i = 0; i < level.size(); ++i) {
        for (NodeId id : truth) {
          if (id == level[i]) favored = i;
        }
      }
    }
    v[favored] += 1.0;
    s.by_depth.push_back(std::move(v));
  }
  return s;
}

}  // namespace pcem::testing

#endif  // PCEM_TESTS_FIXTURES_HPP_
