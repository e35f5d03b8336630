#include "pcem/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>

#include "pcem/error.hpp"

namespace pcem {

std::optional<NodeId> Taxonomy::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

NodeId Taxonomy::at(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw LabelError("unknown class name '" + std::string(name) + "'");
}

std::span<const NodeId> Taxonomy::level(int k) const {
  if (k < 1 || k > depth_) throw TaxonomyError("depth " + std::to_string(k) + " out of range");
  return levels_[static_cast<std::size_t>(k)];
}

std::span<const NodeId> Taxonomy::real_level(int k) const {
  if (k < 1 || k > depth_) throw TaxonomyError("depth " + std::to_string(k) + " out of range");
  return real_levels_[static_cast<std::size_t>(k)];
}

std::size_t Taxonomy::real_level_position(NodeId id) const {
  if (node(id).is_dummy || id == root()) {
    throw TaxonomyError("node '" + node(id).name + "' has no real-level position");
  }
  return real_position_[index(id)];
}

std::vector<NodeId> Taxonomy::leaves() const {
  std::vector<NodeId> out;
  for (int k = 1; k <= depth_; ++k) {
    for (NodeId id : levels_[static_cast<std::size_t>(k)]) {
      if (is_leaf(id)) out.push_back(id);
    }
  }
  return out;
}

bool Taxonomy::is_normalized() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [&](const TaxonomyNode& n) {
    return !n.children.empty() || n.depth == depth_;
  });
}

std::size_t Taxonomy::dummy_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TaxonomyNode& n) { return n.is_dummy; }));
}

std::vector<NodeId> Taxonomy::chain(NodeId id) const {
  std::vector<NodeId> out;
  for (std::optional<NodeId> cur = id; cur && *cur != root(); cur = node(*cur).parent) {
    out.push_back(*cur);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

NodeId Taxonomy::real_node(NodeId id) const {
  const TaxonomyNode& n = node(id);
  return n.is_dummy ? *n.extends : id;
}

void Taxonomy::index_nodes() {
  by_name_.clear();
  depth_ = 0;
  for (TaxonomyNode& n : nodes_) {
    by_name_.emplace(n.name, n.id);
    depth_ = std::max(depth_, n.depth);
    std::sort(n.children.begin(), n.children.end(),
              [&](NodeId a, NodeId b) { return nodes_[index(a)].name < nodes_[index(b)].name; });
  }

  // Level k is ordered by (position of parent in level k-1, name), which is
  // the lexicographic order of root-to-node name tuples.
  levels_.assign(static_cast<std::size_t>(depth_) + 1, {});
  levels_[0] = {root()};
  for (int k = 1; k <= depth_; ++k) {
    for (NodeId parent : levels_[static_cast<std::size_t>(k - 1)]) {
      const auto& kids = nodes_[index(parent)].children;
      levels_[static_cast<std::size_t>(k)].insert(levels_[static_cast<std::size_t>(k)].end(),
                                                  kids.begin(), kids.end());
    }
  }

  real_levels_.assign(levels_.size(), {});
  real_position_.assign(nodes_.size(), 0);
  for (std::size_t k = 1; k < levels_.size(); ++k) {
    for (NodeId id : levels_[k]) {
      if (nodes_[index(id)].is_dummy) continue;
      real_position_[index(id)] = real_levels_[k].size();
      real_levels_[k].push_back(id);
    }
  }
}

Taxonomy build_taxonomy(const std::vector<Edge>& edges) {
  if (edges.empty()) throw TaxonomyError("hierarchy has no edges");

  Taxonomy t;
  std::unordered_map<std::string, NodeId> ids;
  auto intern = [&](const std::string& name) {
    if (name.empty()) throw TaxonomyError("empty class name");
    auto [it, inserted] = ids.emplace(name, NodeId{static_cast<std::uint32_t>(t.nodes_.size())});
    if (inserted) {
      TaxonomyNode n;
      n.id = it->second;
      n.name = name;
      t.nodes_.push_back(std::move(n));
    }
    return it->second;
  };

  for (const auto& [parent_name, child_name] : edges) {
    if (parent_name == child_name) throw TaxonomyError("cycle detected at '" + child_name + "'");
    NodeId parent = intern(parent_name);
    NodeId child = intern(child_name);
    TaxonomyNode& c = t.nodes_[index(child)];
    if (c.parent) {
      if (*c.parent == parent) throw TaxonomyError("duplicate edge " + parent_name + " -> " + child_name);
      throw TaxonomyError("duplicate child '" + child_name + "' under parents '" +
                          t.nodes_[index(*c.parent)].name + "' and '" + parent_name + "'");
    }
    c.parent = parent;
    t.nodes_[index(parent)].children.push_back(child);
  }

  std::vector<NodeId> tops;
  for (const TaxonomyNode& n : t.nodes_) {
    if (!n.parent) tops.push_back(n.id);
  }
  std::optional<NodeId> reserved = ids.contains(std::string(Taxonomy::kRootName))
                                       ? std::optional<NodeId>(ids.at(std::string(Taxonomy::kRootName)))
                                       : std::nullopt;
  if (reserved && t.nodes_[index(*reserved)].parent) {
    throw TaxonomyError("ROOT is listed as a child");
  }
  if (tops.empty()) throw TaxonomyError("cycle detected: no parentless node");

  NodeId old_root{};
  if (reserved) {
    if (tops.size() > 1) {
      std::string extra;
      for (NodeId id : tops) {
        if (id != *reserved) extra += " '" + t.nodes_[index(id)].name + "'";
      }
      throw TaxonomyError("multiple roots: ROOT and" + extra);
    }
    old_root = *reserved;
  } else if (tops.size() == 1) {
    old_root = tops.front();
  } else {
    TaxonomyNode synthetic;
    synthetic.id = NodeId{static_cast<std::uint32_t>(t.nodes_.size())};
    synthetic.name = std::string(Taxonomy::kRootName);
    for (NodeId top : tops) {
      t.nodes_[index(top)].parent = synthetic.id;
      synthetic.children.push_back(top);
    }
    old_root = synthetic.id;
    t.nodes_.push_back(std::move(synthetic));
  }

  // Renumber breadth-first so the root is id 0 and ids follow depth.
  std::vector<std::optional<NodeId>> remap(t.nodes_.size());
  std::vector<NodeId> order;
  std::queue<NodeId> frontier;
  frontier.push(old_root);
  remap[index(old_root)] = NodeId{0};
  while (!frontier.empty()) {
    NodeId cur = frontier.front();
    frontier.pop();
    order.push_back(cur);
    for (NodeId kid : t.nodes_[index(cur)].children) {
      remap[index(kid)] = NodeId{static_cast<std::uint32_t>(order.size() + frontier.size())};
      frontier.push(kid);
    }
  }
  if (order.size() != t.nodes_.size()) {
    std::string stray;
    for (const TaxonomyNode& n : t.nodes_) {
      if (!remap[index(n.id)]) stray += " '" + n.name + "'";
    }
    throw TaxonomyError("cycle detected among nodes unreachable from the root:" + stray);
  }

  std::vector<TaxonomyNode> renumbered;
  renumbered.reserve(order.size());
  for (NodeId old : order) {
    TaxonomyNode n = t.nodes_[index(old)];
    n.id = *remap[index(old)];
    if (n.parent) n.parent = *remap[index(*n.parent)];
    for (NodeId& kid : n.children) kid = *remap[index(kid)];
    n.depth = n.parent ? renumbered[index(*n.parent)].depth + 1 : 0;
    renumbered.push_back(std::move(n));
  }
  t.nodes_ = std::move(renumbered);
  t.index_nodes();
  return t;
}

Taxonomy normalize_depth(const Taxonomy& t) {
  Taxonomy out = t;
  const int d = t.depth();
  for (const TaxonomyNode& n : t.nodes()) {
    if (!n.children.empty() || n.depth >= d || n.id == t.root()) continue;
    NodeId parent = n.id;
    for (int k = n.depth + 1, step = 1; k <= d; ++k, ++step) {
      TaxonomyNode dummy;
      dummy.id = NodeId{static_cast<std::uint32_t>(out.nodes_.size())};
      dummy.name = n.name + "~" + std::to_string(step);
      if (out.by_name_.contains(dummy.name)) {
        throw TaxonomyError("dummy name '" + dummy.name + "' collides with an existing class");
      }
      dummy.depth = k;
      dummy.parent = parent;
      dummy.is_dummy = true;
      dummy.extends = n.id;
      out.nodes_[index(parent)].children.push_back(dummy.id);
      out.by_name_.emplace(dummy.name, dummy.id);
      parent = dummy.id;
      out.nodes_.push_back(std::move(dummy));
    }
  }
  out.index_nodes();
  return out;
}

PathTable::PathTable(std::vector<std::vector<NodeId>> paths, std::size_t node_count)
    : paths_(std::move(paths)), leaf_to_path_(node_count) {
  for (std::size_t j = 0; j < paths_.size(); ++j) {
    leaf_to_path_.at(index(paths_[j].back())) = j;
  }
}

std::optional<std::size_t> PathTable::path_of_leaf(NodeId leaf) const {
  if (index(leaf) >= leaf_to_path_.size()) return std::nullopt;
  return leaf_to_path_[index(leaf)];
}

PathTable enumerate_paths(const Taxonomy& t) {
  if (!t.is_normalized()) {
    throw TaxonomyError("enumerate_paths requires a depth-normalized taxonomy");
  }
  std::vector<std::vector<NodeId>> paths;
  for (NodeId leaf : t.level(t.depth())) paths.push_back(t.chain(leaf));
  return PathTable(std::move(paths), t.size());
}

std::vector<NodeId> real_nodes_of_path(const Taxonomy& t, const PathTable& paths, std::size_t j) {
  std::vector<NodeId> out;
  for (NodeId id : paths.path(j)) {
    if (!t.node(id).is_dummy) out.push_back(id);
  }
  return out;
}

std::vector<Edge> read_hierarchy(std::istream& in, const std::string& source) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(source, lineno, "expected `parent<TAB>child`");
    }
    std::string parent = line.substr(0, tab);
    std::string child = line.substr(tab + 1);
    if (parent.empty() || child.empty()) throw ParseError(source, lineno, "empty class name");
    edges.emplace_back(std::move(parent), std::move(child));
  }
  return edges;
}

std::vector<Edge> read_hierarchy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open hierarchy file " + path);
  return read_hierarchy(in, path);
}

void write_hierarchy(std::ostream& out, const Taxonomy& t) {
  for (int k = 1; k <= t.depth(); ++k) {
    for (NodeId id : t.level(k)) {
      const TaxonomyNode& n = t.node(id);
      if (n.is_dummy) continue;
      out << t.node(*n.parent).name << '\t' << n.name << '\n';
    }
  }
}

Taxonomy load_taxonomy(const std::string& path) {
  return normalize_depth(build_taxonomy(read_hierarchy_file(path)));
}

}  // namespace pcem
