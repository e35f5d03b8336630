#ifndef PCEM_TAXONOMY_HPP_
#define PCEM_TAXONOMY_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pcem {

enum class NodeId : std::uint32_t {};

constexpr std::size_t index(NodeId id) { return static_cast<std::size_t>(id); }

struct TaxonomyNode {
  NodeId id{};
  std::string name;
  int depth = 0;
  std::optional<NodeId> parent;
  bool is_dummy = false;
  // For a dummy node, the real leaf whose chain it continues. Unset otherwise.
  std::optional<NodeId> extends;
  std::vector<NodeId> children;  // sorted by name

  bool operator==(const TaxonomyNode&) const = default;
};

using Edge = std::pair<std::string, std::string>;

// Rooted class tree. Immutable once built; build with build_taxonomy() and
// normalize_depth().
//
// Every depth level is kept in a fixed order: nodes are sorted by the tuple
// of names on their root-to-node chain (root excluded). Path order and the
// column order of weak-similarity vectors both follow this order.
class Taxonomy {
 public:
  static constexpr std::string_view kRootName = "ROOT";

  NodeId root() const { return NodeId{0}; }
  const TaxonomyNode& node(NodeId id) const { return nodes_.at(index(id)); }
  std::span<const TaxonomyNode> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  std::optional<NodeId> find(std::string_view name) const;
  // Throws LabelError for an unknown name.
  NodeId at(std::string_view name) const;

  // Depth d of the deepest leaf; the root is at depth 0.
  int depth() const { return depth_; }

  // All nodes at depth k (1 <= k <= depth()), dummies included.
  std::span<const NodeId> level(int k) const;
  // Real (non-dummy) nodes at depth k. Weak-similarity vectors are indexed
  // over this list.
  std::span<const NodeId> real_level(int k) const;
  // Position of a real node inside real_level(node.depth).
  std::size_t real_level_position(NodeId id) const;

  bool is_leaf(NodeId id) const { return node(id).children.empty(); }
  std::vector<NodeId> leaves() const;
  // True iff every leaf sits at depth().
  bool is_normalized() const;
  std::size_t dummy_count() const;

  // Nodes from depth 1 down to `id`, root excluded.
  std::vector<NodeId> chain(NodeId id) const;
  // Real node a dummy stands in for; identity for real nodes.
  NodeId real_node(NodeId id) const;

  bool operator==(const Taxonomy& other) const { return nodes_ == other.nodes_; }

 private:
  friend Taxonomy build_taxonomy(const std::vector<Edge>& edges);
  friend Taxonomy normalize_depth(const Taxonomy& t);

  void index_nodes();

  std::vector<TaxonomyNode> nodes_;
  std::unordered_map<std::string, NodeId> by_name_;
  int depth_ = 0;
  std::vector<std::vector<NodeId>> levels_;
  std::vector<std::vector<NodeId>> real_levels_;
  std::vector<std::size_t> real_position_;
};

// Builds and validates the tree described by (parent, child) edges.
//
// The reserved name ROOT marks the root. Without it, a single parentless node
// becomes the root; several parentless nodes get a synthetic ROOT parent.
// Throws TaxonomyError on cycles, multiple roots, a child listed under two
// parents, or an empty edge list.
Taxonomy build_taxonomy(const std::vector<Edge>& edges);

// Extends every leaf shallower than depth() with a chain of dummy children
// named `<leaf>~1`, `<leaf>~2`, ... until it reaches depth(). Original nodes
// keep their ids. Idempotent.
Taxonomy normalize_depth(const Taxonomy& t);

// Root-to-leaf paths, root excluded. Path j is paths()[j], one node per depth
// (position k-1 holds the depth-k node). Paths are ordered by the name tuple
// of their nodes.
class PathTable {
 public:
  PathTable() = default;
  PathTable(std::vector<std::vector<NodeId>> paths, std::size_t node_count);

  std::size_t size() const { return paths_.size(); }
  int depth() const { return paths_.empty() ? 0 : static_cast<int>(paths_.front().size()); }
  std::span<const NodeId> path(std::size_t j) const { return paths_.at(j); }
  const std::vector<std::vector<NodeId>>& paths() const { return paths_; }
  // Index of the path ending in `leaf`; nullopt for non-leaves.
  std::optional<std::size_t> path_of_leaf(NodeId leaf) const;

 private:
  std::vector<std::vector<NodeId>> paths_;
  std::vector<std::optional<std::size_t>> leaf_to_path_;
};

// Throws TaxonomyError if `t` has leaves at mixed depths.
PathTable enumerate_paths(const Taxonomy& t);

// Non-dummy nodes of path j, in depth order.
std::vector<NodeId> real_nodes_of_path(const Taxonomy& t, const PathTable& paths, std::size_t j);

// Hierarchy file: UTF-8, one `parent<TAB>child` edge per line. Blank lines and
// lines starting with '#' are skipped.
std::vector<Edge> read_hierarchy(std::istream& in, const std::string& source = "<stream>");
std::vector<Edge> read_hierarchy_file(const std::string& path);
void write_hierarchy(std::ostream& out, const Taxonomy& t);

// Convenience: read, build and normalize.
Taxonomy load_taxonomy(const std::string& path);

}  // namespace pcem

#endif  // PCEM_TAXONOMY_HPP_
