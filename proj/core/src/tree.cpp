#include "relcomp/tree.hpp"

#include <string>

#include "relcomp/random.hpp"

namespace relcomp {

TreeSpec::TreeSpec(std::vector<Index> parent, std::vector<std::optional<ChildRole>> roles,
                   std::map<Index, Vector> payload)
    : parent_(std::move(parent)), roles_(std::move(roles)), payload_(std::move(payload)) {
  const Index n = node_count();
  require(n >= 1, ErrorCode::malformed_tree, "tree has no nodes");
  if (roles_.empty()) roles_.assign(static_cast<std::size_t>(n), std::nullopt);
  require(static_cast<Index>(roles_.size()) == n, ErrorCode::malformed_tree, "role array length differs from node count");
  children_.assign(static_cast<std::size_t>(n), {});

  for (Index i = 0; i < n; ++i) {
    const Index p = parent_[static_cast<std::size_t>(i)];
    if (p == kNoParent) {
      require(root_ == kNoParent, ErrorCode::malformed_tree, "tree has more than one root");
      root_ = i;
      continue;
    }
    require(p >= 0 && p < n && p != i, ErrorCode::malformed_tree, "node " + std::to_string(i) + " has an invalid parent");
    children_[static_cast<std::size_t>(p)].push_back(i);
  }
  require(root_ != kNoParent, ErrorCode::malformed_tree, "tree has no root");

  for (Index p = 0; p < n; ++p) {
    auto& kids = children_[static_cast<std::size_t>(p)];
    require(kids.size() <= 2, ErrorCode::malformed_tree, "node " + std::to_string(p) + " has more than two children");
    for (std::size_t k = 0; k < kids.size(); ++k) {
      auto& r = roles_[static_cast<std::size_t>(kids[k])];
      if (!r) {
        const auto& other = kids.size() == 2 ? roles_[static_cast<std::size_t>(kids[1 - k])] : std::nullopt;
        if (other) r = *other == ChildRole::left ? ChildRole::right : ChildRole::left;
        else r = k == 0 ? ChildRole::left : ChildRole::right;
      }
    }
    if (kids.size() == 2) {
      require(roles_[static_cast<std::size_t>(kids[0])] != roles_[static_cast<std::size_t>(kids[1])],
              ErrorCode::malformed_tree, "children of node " + std::to_string(p) + " share a role");
    }
  }
  require(!roles_[static_cast<std::size_t>(root_)], ErrorCode::malformed_tree, "root must not carry a role");

  // Depths by walking from the root; nodes unreachable from it lie on a cycle.
  depth_.assign(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack{root_};
  depth_[static_cast<std::size_t>(root_)] = 0;
  Index seen = 0;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    ++seen;
    for (Index c : children_[static_cast<std::size_t>(u)]) {
      depth_[static_cast<std::size_t>(c)] = depth_[static_cast<std::size_t>(u)] + 1;
      stack.push_back(c);
    }
  }
  require(seen == n, ErrorCode::malformed_tree, "parent array contains a cycle");

  for (const auto& [leaf, v] : payload_) {
    require(leaf >= 0 && leaf < n, ErrorCode::malformed_tree, "payload attached to a missing node");
    require(is_leaf(leaf), ErrorCode::malformed_tree, "payload attached to internal node " + std::to_string(leaf));
  }
}

TreeSpec TreeSpec::complete_binary(int depth) {
  require(depth >= 0 && depth < 30, ErrorCode::invalid_argument, "depth out of range");
  const Index n = (Index{1} << (depth + 1)) - 1;
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::vector<std::optional<ChildRole>> roles(static_cast<std::size_t>(n));
  parent[0] = kNoParent;
  for (Index i = 1; i < n; ++i) {
    parent[static_cast<std::size_t>(i)] = (i - 1) / 2;
    roles[static_cast<std::size_t>(i)] = (i % 2 == 1) ? ChildRole::left : ChildRole::right;
  }
  return TreeSpec(std::move(parent), std::move(roles));
}

TreeSpec TreeSpec::path(Index nodes) {
  require(nodes >= 1, ErrorCode::invalid_argument, "path needs at least one node");
  std::vector<Index> parent(static_cast<std::size_t>(nodes));
  parent[0] = kNoParent;
  for (Index i = 1; i < nodes; ++i) parent[static_cast<std::size_t>(i)] = i - 1;
  return TreeSpec(std::move(parent));
}

TreeSpec TreeSpec::random(Index nodes, std::uint64_t seed) {
  require(nodes >= 1, ErrorCode::invalid_argument, "random tree needs at least one node");
  Rng rng(seed);
  std::vector<Index> parent(static_cast<std::size_t>(nodes), kNoParent);
  std::vector<int> kids(static_cast<std::size_t>(nodes), 0);
  std::vector<Index> open{0};
  for (Index i = 1; i < nodes; ++i) {
    const auto slot = static_cast<std::size_t>(rng.below(static_cast<Index>(open.size())));
    const Index p = open[slot];
    parent[static_cast<std::size_t>(i)] = p;
    if (++kids[static_cast<std::size_t>(p)] == 2) {
      open[slot] = open.back();
      open.pop_back();
    }
    open.push_back(i);
  }
  return TreeSpec(std::move(parent));
}

std::optional<Index> TreeSpec::child(Index i, ChildRole r) const {
  for (Index c : children(i))
    if (roles_[static_cast<std::size_t>(c)] == r) return c;
  return std::nullopt;
}

Index TreeSpec::depth(Index i) const {
  check_node(i);
  return depth_[static_cast<std::size_t>(i)];
}

std::vector<Index> TreeSpec::postorder() const {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(node_count()));
  std::vector<std::pair<Index, bool>> stack{{root_, false}};
  while (!stack.empty()) {
    auto [u, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(u);
      continue;
    }
    stack.push_back({u, true});
    const auto& kids = children(u);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back({*it, false});
  }
  return order;
}

void TreeSpec::set_payload(Index leaf, Vector v) {
  check_node(leaf);
  require(is_leaf(leaf), ErrorCode::malformed_tree, "payload attached to internal node " + std::to_string(leaf));
  payload_[leaf] = std::move(v);
}

void TreeSpec::require_leaf_payloads() const {
  for (Index i = 0; i < node_count(); ++i) {
    if (is_leaf(i)) {
      require(payload_.count(i) == 1, ErrorCode::malformed_tree, "leaf " + std::to_string(i) + " has no payload");
    }
  }
}

void TreeSpec::check_node(Index i) const {
  require(i >= 0 && i < node_count(), ErrorCode::invalid_node, "node " + std::to_string(i) + " is not in the tree");
}

}  // namespace relcomp
