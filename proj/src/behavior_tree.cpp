#include "btforge/behavior_tree.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace btforge {

const char* to_string(Status s) noexcept {
  switch (s) {
    case Status::Success: return "success";
    case Status::Failure: return "failure";
    case Status::Running: return "running";
  }
  return "?";
}

const char* to_string(ActionId a) noexcept {
  switch (a) {
    case ActionId::WalkRight: return "right";
    case ActionId::WalkLeft: return "left";
    case ActionId::Crouch: return "crouch";
    case ActionId::Shoot: return "shoot";
    case ActionId::Jump: return "jump";
  }
  return "?";
}

std::optional<ActionId> action_from_string(std::string_view s) noexcept {
  for (ActionId a : kAllActions) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

std::string to_string(const ConditionId& c) {
  std::string out = c.predicate == Predicate::EnemyAt ? "enemy@" : "obstacle@";
  out += std::to_string(c.row);
  out += ',';
  out += std::to_string(c.col);
  return out;
}

const char* to_string(DecoratorPolicy p) noexcept {
  switch (p) {
    case DecoratorPolicy::Invert: return "inv";
    case DecoratorPolicy::ForceSuccess: return "force-ok";
    case DecoratorPolicy::ForceFailure: return "force-fail";
  }
  return "?";
}

Status apply_policy(DecoratorPolicy p, Status child) noexcept {
  if (child == Status::Running) return Status::Running;
  switch (p) {
    case DecoratorPolicy::Invert: return child == Status::Success ? Status::Failure : Status::Success;
    case DecoratorPolicy::ForceSuccess: return Status::Success;
    case DecoratorPolicy::ForceFailure: return Status::Failure;
  }
  return child;
}

bool is_execution(const NodeKind& k) noexcept {
  return std::holds_alternative<Action>(k) || std::holds_alternative<Condition>(k);
}

std::string label(const NodeKind& k) {
  return std::visit(
      [](const auto& v) -> std::string {
        using K = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<K, Selector>) return "sel";
        else if constexpr (std::is_same_v<K, Sequence>) return "seq";
        else if constexpr (std::is_same_v<K, Parallel>) return "par" + std::to_string(v.threshold);
        else if constexpr (std::is_same_v<K, Decorator>) return to_string(v.policy);
        else if constexpr (std::is_same_v<K, Action>) return std::string("act:") + to_string(v.action);
        else return "cond:" + to_string(v.condition);
      },
      k);
}

const char* to_string(ViolationKind k) noexcept {
  switch (k) {
    case ViolationKind::BadIndex: return "bad-index";
    case ViolationKind::Root: return "root";
    case ViolationKind::Linkage: return "linkage";
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::Unreachable: return "unreachable";
    case ViolationKind::Arity: return "arity";
    case ViolationKind::Threshold: return "threshold";
    case ViolationKind::BadCondition: return "bad-condition";
  }
  return "?";
}

// ---------------------------------------------------------------------------

BehaviorTree::BehaviorTree(std::vector<Node> nodes, NodeIndex root) : nodes_(std::move(nodes)), root_(root) {}

BehaviorTree BehaviorTree::leaf(NodeKind kind) { return BehaviorTree({Node{std::move(kind), {}, std::nullopt}}, 0); }

BehaviorTree BehaviorTree::compose(NodeKind kind, std::vector<BehaviorTree> children) {
  std::vector<Node> nodes;
  nodes.push_back(Node{std::move(kind), {}, std::nullopt});
  for (const BehaviorTree& child : children) {
    const NodeIndex offset = nodes.size();
    // Child arenas are appended as-is, shifted by offset.
    for (const Node& n : child.nodes()) {
      Node copy = n;
      for (NodeIndex& c : copy.children) c += offset;
      if (copy.parent) *copy.parent += offset;
      nodes.push_back(std::move(copy));
    }
    const NodeIndex child_root = child.root() + offset;
    nodes[child_root].parent = 0;
    nodes[0].children.push_back(child_root);
  }
  return BehaviorTree(std::move(nodes), 0);
}

std::size_t BehaviorTree::subtree_size(NodeIndex i) const {
  std::size_t count = 0;
  std::vector<NodeIndex> stack{i};
  while (!stack.empty()) {
    const NodeIndex n = stack.back();
    stack.pop_back();
    ++count;
    for (NodeIndex c : nodes_.at(n).children) stack.push_back(c);
  }
  return count;
}

std::size_t BehaviorTree::depth() const {
  std::function<std::size_t(NodeIndex)> rec = [&](NodeIndex i) -> std::size_t {
    std::size_t d = 0;
    for (NodeIndex c : nodes_[i].children) d = std::max(d, rec(c));
    return d + 1;
  };
  return rec(root_);
}

namespace {

bool equal_at(const BehaviorTree& a, NodeIndex ia, const BehaviorTree& b, NodeIndex ib) {
  const Node& na = a.node(ia);
  const Node& nb = b.node(ib);
  if (!(na.kind == nb.kind) || na.children.size() != nb.children.size()) return false;
  for (std::size_t k = 0; k < na.children.size(); ++k) {
    if (!equal_at(a, na.children[k], b, nb.children[k])) return false;
  }
  return true;
}

// Copies the subtree at `src_node` into `out` in pre-order. `visit` may
// substitute or drop nodes: it returns the tree/index to copy instead of
// (tree, node), or nullopt to skip the node entirely.
struct Copier {
  std::vector<Node>& out;
  const BehaviorTree* skip_tree = nullptr;
  NodeIndex skip_node = 0;
  const BehaviorTree* swap_tree = nullptr;
  NodeIndex swap_node = 0;
  const BehaviorTree* with_tree = nullptr;

  std::optional<NodeIndex> copy(const BehaviorTree& t, NodeIndex i, std::optional<NodeIndex> parent) {
    if (skip_tree == &t && skip_node == i) return std::nullopt;
    if (swap_tree == &t && swap_node == i) {
      const BehaviorTree* replacement = with_tree;
      swap_tree = nullptr;  // the replacement is copied verbatim
      auto r = copy(*replacement, replacement->root(), parent);
      return r;
    }
    const NodeIndex self = out.size();
    out.push_back(Node{t.node(i).kind, {}, parent});
    for (NodeIndex c : t.node(i).children) {
      if (auto ci = copy(t, c, self)) out[self].children.push_back(*ci);
    }
    return self;
  }
};

}  // namespace

bool structurally_equal(const BehaviorTree& a, const BehaviorTree& b) {
  if (a.size() != b.size()) return false;
  return equal_at(a, a.root(), b, b.root());
}

BehaviorTree selector(std::vector<BehaviorTree> children) { return BehaviorTree::compose(Selector{}, std::move(children)); }
BehaviorTree sequence(std::vector<BehaviorTree> children) { return BehaviorTree::compose(Sequence{}, std::move(children)); }
BehaviorTree parallel(std::size_t threshold, std::vector<BehaviorTree> children) {
  return BehaviorTree::compose(Parallel{threshold}, std::move(children));
}
BehaviorTree decorate(DecoratorPolicy policy, BehaviorTree child) {
  std::vector<BehaviorTree> c;
  c.push_back(std::move(child));
  return BehaviorTree::compose(Decorator{policy}, std::move(c));
}
BehaviorTree invert(BehaviorTree child) { return decorate(DecoratorPolicy::Invert, std::move(child)); }
BehaviorTree action(ActionId a) { return BehaviorTree::leaf(Action{a}); }
BehaviorTree condition(ConditionId c) { return BehaviorTree::leaf(Condition{c}); }

// ---------------------------------------------------------------------------

std::vector<Violation> validate(const BehaviorTree& tree) {
  std::vector<Violation> out;
  const auto nodes = tree.nodes();
  const std::size_t n = nodes.size();
  auto add = [&](NodeIndex i, ViolationKind k, std::string msg) { out.push_back({i, k, std::move(msg)}); };

  if (n == 0 || tree.root() >= n) {
    add(tree.root(), ViolationKind::Root, "root index outside the arena");
    return out;
  }
  if (nodes[tree.root()].parent) add(tree.root(), ViolationKind::Root, "root has a parent");

  bool indices_ok = true;
  for (NodeIndex i = 0; i < n; ++i) {
    for (NodeIndex c : nodes[i].children) {
      if (c >= n) {
        add(i, ViolationKind::BadIndex, "child index " + std::to_string(c) + " outside the arena");
        indices_ok = false;
      } else if (nodes[c].parent != i) {
        add(c, ViolationKind::Linkage, "parent link disagrees with children list of node " + std::to_string(i));
      }
    }
    if (const auto p = nodes[i].parent) {
      if (*p >= n) {
        add(i, ViolationKind::BadIndex, "parent index outside the arena");
        indices_ok = false;
      } else if (std::count(nodes[*p].children.begin(), nodes[*p].children.end(), i) != 1) {
        add(i, ViolationKind::Linkage, "node is not listed exactly once by its parent");
      }
    }
  }
  if (!indices_ok) return out;

  // Reachability and acyclicity from the root.
  std::vector<int> seen(n, 0);
  std::vector<NodeIndex> stack{tree.root()};
  while (!stack.empty()) {
    const NodeIndex i = stack.back();
    stack.pop_back();
    if (seen[i]++) {
      add(i, ViolationKind::Cycle, "node reached more than once");
      continue;
    }
    for (NodeIndex c : nodes[i].children) stack.push_back(c);
  }
  for (NodeIndex i = 0; i < n; ++i) {
    if (!seen[i]) add(i, ViolationKind::Unreachable, "node not reachable from root");
  }

  for (NodeIndex i = 0; i < n; ++i) {
    const Node& node = nodes[i];
    const std::size_t arity = node.children.size();
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Action>) {
            if (arity != 0) add(i, ViolationKind::Arity, "action node has children");
          } else if constexpr (std::is_same_v<K, Condition>) {
            if (arity != 0) add(i, ViolationKind::Arity, "condition node has children");
            if (!k.condition.valid()) add(i, ViolationKind::BadCondition, "condition cell outside the 5x5 field");
          } else if constexpr (std::is_same_v<K, Decorator>) {
            if (arity != 1) add(i, ViolationKind::Arity, "decorator must have exactly one child");
          } else {
            if (arity == 0) add(i, ViolationKind::Arity, "control node has no children");
            if constexpr (std::is_same_v<K, Parallel>) {
              if (k.threshold < 1 || k.threshold > arity) {
                add(i, ViolationKind::Threshold,
                    "parallel threshold " + std::to_string(k.threshold) + " outside [1, " + std::to_string(arity) + "]");
              }
            }
          }
        },
        node.kind);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace detail {
void throw_bad_index(NodeIndex i, std::size_t size) {
  throw StructuralError("node index " + std::to_string(i) + " outside tree of " + std::to_string(size) + " nodes");
}
void throw_bad_threshold(NodeIndex i, std::size_t m, std::size_t n) {
  throw StructuralError("parallel node " + std::to_string(i) + " has threshold " + std::to_string(m) + " with " +
                        std::to_string(n) + " children");
}
void throw_bad_arity(NodeIndex i) { throw StructuralError("decorator node " + std::to_string(i) + " is not unary"); }
}  // namespace detail

Status tick_action(ActionId a, Blackboard& bb) {
  if (!bb.can(a)) return Status::Failure;
  if (!bb.requested) bb.requested = a;
  return bb.previous_actuated == a ? Status::Success : Status::Running;
}

Status tick(const BehaviorTree& tree, NodeIndex node, Blackboard& bb) {
  return tick_with(
      tree, node,
      [&bb](NodeIndex, const Node& n) -> Status {
        if (const auto* act = std::get_if<Action>(&n.kind)) return tick_action(act->action, bb);
        const auto& cond = std::get<Condition>(n.kind);
        return bb.holds(cond.condition) ? Status::Success : Status::Failure;
      },
      [&bb](NodeIndex) { ++bb.node_ticks; });
}

// ---------------------------------------------------------------------------

std::vector<NodeIndex> enumerate_subtrees(const BehaviorTree& tree) {
  std::vector<NodeIndex> order;
  order.reserve(tree.size());
  std::deque<NodeIndex> queue{tree.root()};
  while (!queue.empty()) {
    const NodeIndex i = queue.front();
    queue.pop_front();
    order.push_back(i);
    for (NodeIndex c : tree.node(i).children) queue.push_back(c);
  }
  return order;
}

BehaviorTree extract_subtree(const BehaviorTree& tree, NodeIndex node) {
  if (node >= tree.size()) detail::throw_bad_index(node, tree.size());
  std::vector<Node> out;
  out.reserve(tree.subtree_size(node));
  Copier{out}.copy(tree, node, std::nullopt);
  return BehaviorTree(std::move(out), 0);
}

BehaviorTree replace_subtree(const BehaviorTree& tree, NodeIndex node, const BehaviorTree& replacement) {
  if (node >= tree.size()) detail::throw_bad_index(node, tree.size());
  if (!is_valid(replacement)) throw SurgeryError("replacement tree is not valid");
  std::vector<Node> out;
  out.reserve(tree.size() + replacement.size());
  Copier copier{out};
  copier.swap_tree = &tree;
  copier.swap_node = node;
  copier.with_tree = &replacement;
  copier.copy(tree, tree.root(), std::nullopt);
  return BehaviorTree(std::move(out), 0);
}

namespace {

// Topmost node that disappears when `node` is removed, or nullopt if the
// cascade reaches the root.
std::optional<NodeIndex> removal_point(const BehaviorTree& tree, NodeIndex node) {
  NodeIndex cur = node;
  while (true) {
    const auto parent = tree.node(cur).parent;
    if (!parent) return std::nullopt;
    if (tree.node(*parent).children.size() > 1) return cur;
    cur = *parent;
  }
}

}  // namespace

bool removable(const BehaviorTree& tree, NodeIndex node) {
  return node < tree.size() && removal_point(tree, node).has_value();
}

BehaviorTree remove_subtree(const BehaviorTree& tree, NodeIndex node) {
  if (node >= tree.size()) detail::throw_bad_index(node, tree.size());
  const auto cut = removal_point(tree, node);
  if (!cut) throw SurgeryError("removal would delete the root");

  std::vector<Node> out;
  out.reserve(tree.size());
  Copier copier{out};
  copier.skip_tree = &tree;
  copier.skip_node = *cut;
  copier.copy(tree, tree.root(), std::nullopt);

  for (Node& n : out) {
    if (auto* par = std::get_if<Parallel>(&n.kind)) par->threshold = std::min(par->threshold, n.children.size());
  }
  return BehaviorTree(std::move(out), 0);
}

}  // namespace btforge
