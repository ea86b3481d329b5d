#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace btforge {

enum class Status : std::uint8_t { Success, Failure, Running };

const char* to_string(Status s) noexcept;

// ---------------------------------------------------------------------------
// Agent vocabulary: five actions, 5x5 receptive field x 2 predicates.
// ---------------------------------------------------------------------------

enum class ActionId : std::uint8_t { WalkRight, WalkLeft, Crouch, Shoot, Jump };

inline constexpr std::size_t kActionCount = 5;
inline constexpr std::array<ActionId, kActionCount> kAllActions = {
    ActionId::WalkRight, ActionId::WalkLeft, ActionId::Crouch, ActionId::Shoot, ActionId::Jump};

/// DSL spelling: right, left, crouch, shoot, jump.
const char* to_string(ActionId a) noexcept;
std::optional<ActionId> action_from_string(std::string_view s) noexcept;

enum class Predicate : std::uint8_t { EnemyAt, ObstacleAt };

inline constexpr int kFieldSize = 5;
inline constexpr std::size_t kConditionCount = kFieldSize * kFieldSize * 2;

/// One observable boolean: a predicate over one cell of the receptive field.
/// Row 2 / column 2 is the agent's lower block. Ordered by (row, col, predicate).
struct ConditionId {
  int row = 0;
  int col = 0;
  Predicate predicate = Predicate::EnemyAt;

  /// Dense index in [0, 50).
  constexpr std::size_t index() const noexcept {
    return static_cast<std::size_t>((row * kFieldSize + col) * 2 + static_cast<int>(predicate));
  }
  static constexpr ConditionId from_index(std::size_t i) noexcept {
    const int cell = static_cast<int>(i / 2);
    return {cell / kFieldSize, cell % kFieldSize,
            (i % 2) == 0 ? Predicate::EnemyAt : Predicate::ObstacleAt};
  }
  constexpr bool valid() const noexcept {
    return row >= 0 && row < kFieldSize && col >= 0 && col < kFieldSize;
  }
  friend constexpr auto operator<=>(const ConditionId&, const ConditionId&) = default;
};

/// "enemy@1,3" / "obstacle@2,3"
std::string to_string(const ConditionId& c);

using ConditionSet = std::bitset<kConditionCount>;

enum class DecoratorPolicy : std::uint8_t { Invert, ForceSuccess, ForceFailure };

const char* to_string(DecoratorPolicy p) noexcept;
Status apply_policy(DecoratorPolicy p, Status child) noexcept;

// ---------------------------------------------------------------------------
// Node kinds
// ---------------------------------------------------------------------------

struct Selector {
  friend bool operator==(const Selector&, const Selector&) = default;
};
struct Sequence {
  friend bool operator==(const Sequence&, const Sequence&) = default;
};
struct Parallel {
  std::size_t threshold = 1;  // M: successes required
  friend bool operator==(const Parallel&, const Parallel&) = default;
};
struct Decorator {
  DecoratorPolicy policy = DecoratorPolicy::Invert;
  friend bool operator==(const Decorator&, const Decorator&) = default;
};
struct Action {
  ActionId action = ActionId::WalkRight;
  friend bool operator==(const Action&, const Action&) = default;
};
struct Condition {
  ConditionId condition;
  friend bool operator==(const Condition&, const Condition&) = default;
};

using NodeKind = std::variant<Selector, Sequence, Parallel, Decorator, Action, Condition>;

bool is_execution(const NodeKind& k) noexcept;
inline bool is_control(const NodeKind& k) noexcept { return !is_execution(k); }

/// Compact label used by diversity scoring and diagnostics, e.g. "sel", "par2",
/// "act:jump", "cond:enemy@1,3".
std::string label(const NodeKind& k);

using NodeIndex = std::size_t;

struct Node {
  NodeKind kind;
  std::vector<NodeIndex> children;
  std::optional<NodeIndex> parent;
};

/// Thrown when ticking or operating on a tree that breaks its own invariants.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown by surgery on bad arguments (removing the root, invalid replacement).
class SurgeryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arena-backed behavior tree. Values are immutable once built; surgery
/// returns fresh trees whose arena is laid out in pre-order.
class BehaviorTree {
 public:
  /// Raw arena constructor; no checks. Use validate() on the result.
  BehaviorTree(std::vector<Node> nodes, NodeIndex root);

  static BehaviorTree leaf(NodeKind kind);
  static BehaviorTree compose(NodeKind kind, std::vector<BehaviorTree> children);

  NodeIndex root() const noexcept { return root_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(NodeIndex i) const { return nodes_.at(i); }
  std::span<const Node> nodes() const noexcept { return nodes_; }

  /// Number of nodes in the subtree rooted at i.
  std::size_t subtree_size(NodeIndex i) const;
  std::size_t depth() const;

 private:
  std::vector<Node> nodes_;
  NodeIndex root_ = 0;
};

/// Shape + kinds equality; arena indices are ignored.
bool structurally_equal(const BehaviorTree& a, const BehaviorTree& b);

// Builders.
BehaviorTree selector(std::vector<BehaviorTree> children);
BehaviorTree sequence(std::vector<BehaviorTree> children);
BehaviorTree parallel(std::size_t threshold, std::vector<BehaviorTree> children);
BehaviorTree decorate(DecoratorPolicy policy, BehaviorTree child);
BehaviorTree invert(BehaviorTree child);
BehaviorTree action(ActionId a);
BehaviorTree condition(ConditionId c);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ViolationKind : std::uint8_t { BadIndex, Root, Linkage, Cycle, Unreachable, Arity, Threshold, BadCondition };

struct Violation {
  NodeIndex node;
  ViolationKind kind;
  std::string message;
};

const char* to_string(ViolationKind k) noexcept;

std::vector<Violation> validate(const BehaviorTree& tree);
inline bool is_valid(const BehaviorTree& tree) { return validate(tree).empty(); }

// ---------------------------------------------------------------------------
// Tick engine
// ---------------------------------------------------------------------------

/// Per-tick world view handed to the tree. The environment fills the
/// conditions, which actions are currently executable, and which action it
/// actuated on the previous tick; the tree writes at most one request.
struct Blackboard {
  ConditionSet conditions;
  std::array<bool, kActionCount> executable{true, true, true, true, true};
  std::optional<ActionId> previous_actuated;

  /// Action sink: the first action requested during the tick pass wins.
  std::optional<ActionId> requested;
  /// Instrumentation: node ticks performed since the last reset.
  std::size_t node_ticks = 0;

  bool holds(const ConditionId& c) const { return conditions.test(c.index()); }
  void set(const ConditionId& c, bool v) { conditions.set(c.index(), v); }
  bool can(ActionId a) const { return executable[static_cast<std::size_t>(a)]; }
  void begin_tick() {
    requested.reset();
    node_ticks = 0;
  }
};

/// Action node semantics: Failure when the action is not executable;
/// otherwise it requests the action and returns Success if that same action
/// was actuated on the previous tick, Running if not.
Status tick_action(ActionId a, Blackboard& bb);

namespace detail {
[[noreturn]] void throw_bad_index(NodeIndex i, std::size_t size);
[[noreturn]] void throw_bad_threshold(NodeIndex i, std::size_t m, std::size_t n);
[[noreturn]] void throw_bad_arity(NodeIndex i);
}  // namespace detail

struct NoEnterHook {
  void operator()(NodeIndex) const noexcept {}
};

/// Generic tick: control flow is interpreted here, execution leaves are
/// delegated to `leaf(index, node)`. `enter(index)` is called once per node
/// visited. Lets tests inject arbitrary leaf statuses and count visits.
template <typename LeafFn, typename EnterFn = NoEnterHook>
Status tick_with(const BehaviorTree& tree, NodeIndex index, LeafFn&& leaf, EnterFn&& enter = {}) {
  if (index >= tree.size()) detail::throw_bad_index(index, tree.size());
  enter(index);
  const Node& n = tree.node(index);
  return std::visit(
      [&](const auto& k) -> Status {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Selector>) {
          for (NodeIndex c : n.children) {
            const Status s = tick_with(tree, c, leaf, enter);
            if (s != Status::Failure) return s;
          }
          return Status::Failure;
        } else if constexpr (std::is_same_v<K, Sequence>) {
          for (NodeIndex c : n.children) {
            const Status s = tick_with(tree, c, leaf, enter);
            if (s != Status::Success) return s;
          }
          return Status::Success;
        } else if constexpr (std::is_same_v<K, Parallel>) {
          const std::size_t total = n.children.size();
          if (k.threshold < 1 || k.threshold > total) detail::throw_bad_threshold(index, k.threshold, total);
          std::size_t ok = 0;
          std::size_t failed = 0;
          for (NodeIndex c : n.children) {
            const Status s = tick_with(tree, c, leaf, enter);
            if (s == Status::Success) ++ok;
            if (s == Status::Failure) ++failed;
          }
          if (ok >= k.threshold) return Status::Success;
          if (failed >= total - k.threshold + 1) return Status::Failure;
          return Status::Running;
        } else if constexpr (std::is_same_v<K, Decorator>) {
          if (n.children.size() != 1) detail::throw_bad_arity(index);
          return apply_policy(k.policy, tick_with(tree, n.children.front(), leaf, enter));
        } else {
          return leaf(index, n);
        }
      },
      n.kind);
}

Status tick(const BehaviorTree& tree, NodeIndex node, Blackboard& bb);
inline Status tick(const BehaviorTree& tree, Blackboard& bb) { return tick(tree, tree.root(), bb); }

// ---------------------------------------------------------------------------
// Structural surgery (pure)
// ---------------------------------------------------------------------------

/// Breadth-first, left to right, starting at the root.
std::vector<NodeIndex> enumerate_subtrees(const BehaviorTree& tree);

BehaviorTree extract_subtree(const BehaviorTree& tree, NodeIndex node);
BehaviorTree replace_subtree(const BehaviorTree& tree, NodeIndex node, const BehaviorTree& replacement);

/// Deletes `node` and its descendants. A control parent left without children
/// is deleted as well, cascading upwards; a Parallel parent has its threshold
/// clamped to its new child count. Throws SurgeryError if the cascade would
/// consume the root.
BehaviorTree remove_subtree(const BehaviorTree& tree, NodeIndex node);

/// True iff remove_subtree(tree, node) would succeed.
bool removable(const BehaviorTree& tree, NodeIndex node);

}  // namespace btforge
