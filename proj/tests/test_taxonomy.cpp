#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "pcem/error.hpp"
#include "pcem/taxonomy.hpp"

using namespace pcem;

namespace {

std::vector<std::string> names(const Taxonomy& t, std::span<const NodeId> ids) {
  std::vector<std::string> out;
  for (NodeId id : ids) out.push_back(t.node(id).name);
  return out;
}

}  // namespace

TEST_SUITE("taxonomy") {
  TEST_CASE("build from edges") {
    Taxonomy t = build_taxonomy({{"root", "a"}, {"root", "b"}, {"a", "a1"}, {"a", "a2"}, {"b", "b1"}});
    CHECK(t.depth() == 2);
    CHECK(t.node(t.root()).name == "root");
    CHECK(names(t, t.leaves()) == std::vector<std::string>{"a1", "a2", "b1"});
    CHECK(names(t, t.level(1)) == std::vector<std::string>{"a", "b"});
    CHECK(t.node(t.at("a1")).depth == 2);
    CHECK(t.node(t.at("a1")).parent == t.at("a"));
    CHECK(t.is_normalized());
  }

  TEST_CASE("structural errors") {
    CHECK_THROWS_AS(build_taxonomy({{"root", "a"}, {"a", "root"}}), TaxonomyError);
    CHECK_THROWS_AS(build_taxonomy({{"a", "a"}}), TaxonomyError);
    CHECK_THROWS_AS(build_taxonomy({{"ROOT", "a"}, {"x", "y"}}), TaxonomyError);  // two roots
    CHECK_THROWS_AS(build_taxonomy({{"ROOT", "a"}, {"ROOT", "b"}, {"a", "c"}, {"b", "c"}}), TaxonomyError);
    CHECK_THROWS_AS(build_taxonomy({{"ROOT", "a"}, {"x", "y"}, {"y", "x"}}), TaxonomyError);  // stray cycle
    CHECK_THROWS_AS(build_taxonomy({{"ROOT", "a"}, {"ROOT", "a"}}), TaxonomyError);
    CHECK_THROWS_AS(build_taxonomy({{"a", "ROOT"}}), TaxonomyError);
    CHECK_THROWS_AS(build_taxonomy({}), TaxonomyError);
  }

  TEST_CASE("synthetic root for several top-level classes") {
    Taxonomy t = build_taxonomy({{"comp", "comp.graphics"}, {"rec", "rec.autos"}, {"misc", "misc.forsale"}});
    CHECK(t.node(t.root()).name == "ROOT");
    CHECK(t.level(1).size() == 3);
    CHECK(t.depth() == 2);
  }

  TEST_CASE("20 newsgroups hierarchy shape") {
    // Seven top-level groups over the twenty newsgroups.
    const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
        {"alt", {"alt.atheism"}},
        {"comp",
         {"comp.graphics", "comp.os.ms-windows.misc", "comp.sys.ibm.pc.hardware", "comp.sys.mac.hardware",
          "comp.windows.x"}},
        {"misc", {"misc.forsale"}},
        {"rec", {"rec.autos", "rec.motorcycles", "rec.sport.baseball", "rec.sport.hockey"}},
        {"sci", {"sci.crypt", "sci.electronics", "sci.med", "sci.space"}},
        {"soc", {"soc.religion.christian"}},
        {"talk", {"talk.politics.guns", "talk.politics.mideast", "talk.politics.misc", "talk.religion.misc"}},
    };
    std::vector<Edge> edges;
    for (const auto& [g, kids] : groups) {
      for (const auto& k : kids) edges.emplace_back(g, k);
    }
    Taxonomy t = normalize_depth(build_taxonomy(edges));
    CHECK(t.size() - 1 == 27);  // classes, root excluded
    CHECK(t.depth() == 2);
    CHECK(enumerate_paths(t).size() == 20);
    CHECK(t.dummy_count() == 0);
  }

  TEST_CASE("normalize_depth adds dummy chains") {
    Taxonomy raw = build_taxonomy({{"ROOT", "x"}, {"ROOT", "a"}, {"a", "a1"}});
    Taxonomy t = normalize_depth(raw);
    REQUIRE(t.find("x~1"));
    const TaxonomyNode& d = t.node(*t.find("x~1"));
    CHECK(d.is_dummy);
    CHECK(d.depth == 2);
    CHECK(d.parent == t.at("x"));
    CHECK(d.extends == t.at("x"));
    CHECK(t.is_normalized());
    CHECK_FALSE(raw.is_normalized());
    // original nodes untouched
    for (const TaxonomyNode& n : raw.nodes()) {
      CHECK(t.node(n.id).name == n.name);
      CHECK(t.node(n.id).depth == n.depth);
    }

    Taxonomy deep = normalize_depth(build_taxonomy({{"ROOT", "x"}, {"ROOT", "a"}, {"a", "b"}, {"b", "c"}}));
    CHECK(deep.dummy_count() == 2);
    CHECK(deep.node(deep.at("x~2")).parent == deep.at("x~1"));
    CHECK(deep.node(deep.at("x~2")).extends == deep.at("x"));
    CHECK(deep.chain(deep.at("x~2")).size() == 3);

    Taxonomy uniform = build_taxonomy({{"ROOT", "a"}, {"ROOT", "b"}});
    CHECK(normalize_depth(uniform) == uniform);
  }

  TEST_CASE("dummy name collision") {
    CHECK_THROWS_AS(normalize_depth(build_taxonomy({{"ROOT", "x"}, {"ROOT", "a"}, {"a", "x~1"}})), TaxonomyError);
  }

  TEST_CASE("two-by-three tree: paths") {
    Taxonomy t = testing::two_by_three();
    PathTable p = enumerate_paths(t);
    REQUIRE(p.size() == 6);
    CHECK(names(t, p.path(0)) == std::vector<std::string>{"c1_1", "c2_1"});
    CHECK(names(t, p.path(1)) == std::vector<std::string>{"c1_1", "c2_2"});
    CHECK(names(t, p.path(5)) == std::vector<std::string>{"c1_2", "c2_6"});
    CHECK(p.path_of_leaf(t.at("c2_4")) == 3u);
    CHECK_FALSE(p.path_of_leaf(t.at("c1_1")));
  }

  TEST_CASE("single chain has one path") {
    Taxonomy t = normalize_depth(build_taxonomy({{"ROOT", "a"}, {"a", "b"}}));
    PathTable p = enumerate_paths(t);
    REQUIRE(p.size() == 1);
    CHECK(names(t, p.path(0)) == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("enumerate_paths rejects mixed leaf depths") {
    CHECK_THROWS_AS(enumerate_paths(build_taxonomy({{"ROOT", "x"}, {"ROOT", "a"}, {"a", "a1"}})), TaxonomyError);
  }

  TEST_CASE("path order is lexicographic by name tuple") {
    Taxonomy t = normalize_depth(build_taxonomy({{"ROOT", "zeta"}, {"ROOT", "alpha"}, {"zeta", "b"},
                                                 {"alpha", "y"}, {"alpha", "c"}, {"zeta", "a"}}));
    PathTable p = enumerate_paths(t);
    std::vector<std::vector<std::string>> got;
    for (std::size_t j = 0; j < p.size(); ++j) got.push_back(names(t, p.path(j)));
    CHECK(std::is_sorted(got.begin(), got.end()));
    CHECK(got.front() == std::vector<std::string>{"alpha", "c"});
  }

  TEST_CASE("path table properties on random trees") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
      Taxonomy raw = [&] {
        // rebuild the raw tree by dropping dummies from a random normalized one
        Taxonomy n = testing::random_taxonomy(rng, 2 + trial % 2);
        std::stringstream ss;
        write_hierarchy(ss, n);
        return build_taxonomy(read_hierarchy(ss));
      }();
      Taxonomy t = normalize_depth(raw);
      CHECK(normalize_depth(t) == t);

      PathTable p = enumerate_paths(t);
      CHECK(p.size() == t.leaves().size());
      CHECK(p.size() == t.level(t.depth()).size());

      std::set<std::vector<NodeId>> distinct;
      std::set<NodeId> covered;
      for (std::size_t j = 0; j < p.size(); ++j) {
        auto path = p.path(j);
        distinct.emplace(path.begin(), path.end());
        for (std::size_t k = 0; k < path.size(); ++k) {
          CHECK(t.node(path[k]).depth == static_cast<int>(k) + 1);
          const NodeId parent = k == 0 ? t.root() : path[k - 1];
          CHECK(t.node(path[k]).parent == parent);
          covered.insert(path[k]);
        }
      }
      CHECK(distinct.size() == p.size());
      CHECK(covered.size() == t.size() - 1);

      // Stripping dummies from the paths gives back the original leaves.
      std::set<std::string> original;
      for (NodeId id : raw.leaves()) original.insert(raw.node(id).name);
      std::set<std::string> recovered;
      for (std::size_t j = 0; j < p.size(); ++j) {
        auto real = real_nodes_of_path(t, p, j);
        recovered.insert(t.node(real.back()).name);
      }
      CHECK(recovered == original);
    }
  }

  TEST_CASE("hierarchy file parsing") {
    std::istringstream ok("# comment\nROOT\ta\r\n\na\tb\n");
    auto edges = read_hierarchy(ok);
    CHECK(edges == std::vector<Edge>{{"ROOT", "a"}, {"a", "b"}});

    std::istringstream bad("ROOT a\n");
    try {
      read_hierarchy(bad, "h.tsv");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
  }
}
