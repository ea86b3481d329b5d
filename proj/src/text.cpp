#include "btforge/text.hpp"

#include <cctype>
#include <optional>
#include <sstream>
#include <vector>

namespace btforge {

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what), line_(line), column_(column) {}

namespace {

enum class Tok { Open, Close, At, Comma, Word, Nat, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_blank();
    const std::size_t l = line_, c = col_;
    if (pos_ >= src_.size()) return {Tok::End, {}, l, c};
    const char ch = src_[pos_];
    switch (ch) {
      case '(': advance(); return {Tok::Open, "(", l, c};
      case ')': advance(); return {Tok::Close, ")", l, c};
      case '@': advance(); return {Tok::At, "@", l, c};
      case ',': advance(); return {Tok::Comma, ",", l, c};
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::string text;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        text += src_[pos_];
        advance();
        if (text.size() > 9) throw ParseError("number too large", l, c);
      }
      return {Tok::Nat, text, l, c};
    }
    if (std::islower(static_cast<unsigned char>(ch))) {
      std::string text;
      while (pos_ < src_.size() && (std::islower(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '-')) {
        text += src_[pos_];
        advance();
      }
      return {Tok::Word, text, l, c};
    }
    throw ParseError(describe(ch), l, c);
  }

 private:
  static std::string describe(char ch) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isprint(u)) return std::string("unexpected character '") + ch + "'";
    std::ostringstream os;
    os << "unexpected byte 0x" << std::hex << static_cast<int>(u);
    return os.str();
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < src_.size()) {
      const char ch = src_[pos_];
      if (ch == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { shift(); }

  BehaviorTree document() {
    BehaviorTree t = node();
    if (cur_.kind != Tok::End) fail("trailing input after tree");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, cur_.line, cur_.column); }
  [[noreturn]] void fail_at(const Token& t, const std::string& what) const { throw ParseError(what, t.line, t.column); }

  void shift() { cur_ = lex_.next(); }

  Token expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    Token t = cur_;
    shift();
    return t;
  }

  int nat(const char* what) { return std::stoi(expect(Tok::Nat, what).text); }

  BehaviorTree node() {
    const Token open = cur_;
    expect(Tok::Open, "'('");
    if (++depth_ > kMaxDepth) fail_at(open, "nesting deeper than " + std::to_string(kMaxDepth));
    const Token head = expect(Tok::Word, "node head");
    BehaviorTree result = [&]() -> BehaviorTree {
      if (head.text == "act") {
        const Token name = expect(Tok::Word, "action name");
        const auto a = action_from_string(name.text);
        if (!a) fail_at(name, "unknown action '" + name.text + "'");
        return action(*a);
      }
      if (head.text == "cond") {
        const Token pred = expect(Tok::Word, "predicate");
        Predicate p;
        if (pred.text == "enemy") p = Predicate::EnemyAt;
        else if (pred.text == "obstacle") p = Predicate::ObstacleAt;
        else fail_at(pred, "unknown predicate '" + pred.text + "'");
        expect(Tok::At, "'@'");
        const Token row_tok = cur_;
        const int row = nat("row");
        expect(Tok::Comma, "','");
        const Token col_tok = cur_;
        const int col = nat("column");
        if (row >= kFieldSize) fail_at(row_tok, "row " + std::to_string(row) + " outside [0,4]");
        if (col >= kFieldSize) fail_at(col_tok, "column " + std::to_string(col) + " outside [0,4]");
        return condition({row, col, p});
      }
      if (head.text == "inv") return decorate(DecoratorPolicy::Invert, node());
      if (head.text == "force-ok") return decorate(DecoratorPolicy::ForceSuccess, node());
      if (head.text == "force-fail") return decorate(DecoratorPolicy::ForceFailure, node());
      if (head.text == "sel" || head.text == "seq" || head.text == "par") {
        std::size_t threshold = 0;
        Token threshold_tok = cur_;
        if (head.text == "par") threshold = static_cast<std::size_t>(nat("parallel threshold"));
        std::vector<BehaviorTree> children;
        while (cur_.kind == Tok::Open) children.push_back(node());
        if (children.empty()) fail_at(open, "'" + head.text + "' needs at least one child");
        if (head.text == "sel") return selector(std::move(children));
        if (head.text == "seq") return sequence(std::move(children));
        if (threshold < 1 || threshold > children.size()) {
          fail_at(threshold_tok, "parallel threshold " + std::to_string(threshold) + " outside [1, " +
                                     std::to_string(children.size()) + "]");
        }
        return parallel(threshold, std::move(children));
      }
      fail_at(head, "unknown node head '" + head.text + "'");
    }();
    expect(Tok::Close, "')'");
    --depth_;
    return result;
  }

  static constexpr std::size_t kMaxDepth = 512;

  Lexer lex_;
  std::size_t depth_ = 0;
  Token cur_{Tok::End, {}, 1, 1};
};

std::string leaf_text(const NodeKind& k) {
  if (const auto* a = std::get_if<Action>(&k)) return std::string("(act ") + to_string(a->action) + ")";
  const auto& c = std::get<Condition>(k);
  return "(cond " + to_string(c.condition) + ")";
}

std::string head_text(const NodeKind& k) {
  return std::visit(
      [](const auto& v) -> std::string {
        using K = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<K, Selector>) return "sel";
        else if constexpr (std::is_same_v<K, Sequence>) return "seq";
        else if constexpr (std::is_same_v<K, Parallel>) return "par " + std::to_string(v.threshold);
        else if constexpr (std::is_same_v<K, Decorator>) return to_string(v.policy);
        else return {};
      },
      k);
}

void print_rec(const BehaviorTree& t, NodeIndex i, std::size_t depth, std::string& out) {
  const Node& n = t.node(i);
  out.append(2 * depth, ' ');
  if (is_execution(n.kind)) {
    out += leaf_text(n.kind);
    return;
  }
  out += '(';
  out += head_text(n.kind);
  for (NodeIndex c : n.children) {
    out += '\n';
    print_rec(t, c, depth + 1, out);
  }
  out += ')';
}

std::string dot_label(const NodeKind& k) {
  return std::visit(
      [](const auto& v) -> std::string {
        using K = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<K, Selector>) return "?";
        else if constexpr (std::is_same_v<K, Sequence>) return "→";
        else if constexpr (std::is_same_v<K, Parallel>) return "⇉ " + std::to_string(v.threshold);
        else if constexpr (std::is_same_v<K, Decorator>) return to_string(v.policy);
        else if constexpr (std::is_same_v<K, Action>) return to_string(v.action);
        else return to_string(v.condition);
      },
      k);
}

}  // namespace

BehaviorTree parse(std::string_view text) { return Parser(text).document(); }

std::string print(const BehaviorTree& tree) {
  std::string out;
  print_rec(tree, tree.root(), 0, out);
  return out;
}

std::string print_document(const BehaviorTree& tree) {
  std::string out(kBtHeader);
  out += '\n';
  out += print(tree);
  out += '\n';
  return out;
}

std::string to_dot(const BehaviorTree& tree) {
  std::ostringstream os;
  os << "digraph bt {\n  node [fontname=\"Helvetica\"];\n";
  const auto order = enumerate_subtrees(tree);
  for (NodeIndex i : order) {
    const Node& n = tree.node(i);
    const char* shape = std::holds_alternative<Condition>(n.kind) ? "ellipse" : "box";
    os << "  n" << i << " [label=\"" << dot_label(n.kind) << "\", shape=" << shape << "];\n";
  }
  for (NodeIndex i : order) {
    for (NodeIndex c : tree.node(i).children) os << "  n" << i << " -> n" << c << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_outline(const BehaviorTree& tree) {
  std::string out;
  std::vector<std::pair<NodeIndex, std::size_t>> stack{{tree.root(), 0}};
  while (!stack.empty()) {
    const auto [i, depth] = stack.back();
    stack.pop_back();
    const Node& n = tree.node(i);
    out.append(2 * depth, ' ');
    out += is_execution(n.kind) ? dot_label(n.kind) : head_text(n.kind);
    out += '\n';
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back({*it, depth + 1});
  }
  return out;
}

}  // namespace btforge
