#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "relcomp/types.hpp"

namespace relcomp {

enum class ChildRole { left, right };

// Rooted binary tree stored as a parent array. The root's parent is -1.
class TreeSpec {
 public:
  static constexpr Index kNoParent = -1;

  TreeSpec() = default;
  // Validates the structure: exactly one root, acyclic, at most two children
  // per node with distinct roles. Roles default to left for the first child
  // and right for the second when not supplied.
  explicit TreeSpec(std::vector<Index> parent, std::vector<std::optional<ChildRole>> roles = {},
                    std::map<Index, Vector> payload = {});

  static TreeSpec complete_binary(int depth);
  static TreeSpec path(Index nodes);
  // Random binary tree: node i > 0 attaches to a uniformly chosen earlier
  // node that still has a free child slot.
  static TreeSpec random(Index nodes, std::uint64_t seed);

  Index node_count() const { return static_cast<Index>(parent_.size()); }
  Index root() const { return root_; }
  Index parent(Index i) const { return parent_.at(static_cast<std::size_t>(i)); }
  const std::vector<Index>& parents() const { return parent_; }
  std::optional<ChildRole> role(Index i) const { return roles_.at(static_cast<std::size_t>(i)); }
  const std::vector<Index>& children(Index i) const { return children_.at(static_cast<std::size_t>(i)); }
  std::optional<Index> child(Index i, ChildRole r) const;
  bool is_leaf(Index i) const { return children(i).empty(); }
  Index depth(Index i) const;
  // Nodes ordered so that every child precedes its parent.
  std::vector<Index> postorder() const;
  Index edge_count() const { return node_count() - 1; }

  const std::map<Index, Vector>& payload() const { return payload_; }
  void set_payload(Index leaf, Vector v);
  // Throws malformed-tree when some leaf lacks a payload.
  void require_leaf_payloads() const;

  void check_node(Index i) const;

 private:
  std::vector<Index> parent_;
  std::vector<std::optional<ChildRole>> roles_;
  std::vector<std::vector<Index>> children_;
  std::vector<Index> depth_;
  std::map<Index, Vector> payload_;
  Index root_ = kNoParent;
};

}  // namespace relcomp
