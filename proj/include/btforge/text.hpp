#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "btforge/behavior_tree.hpp"

namespace btforge {

inline constexpr std::string_view kBtHeader = "; bt-forge v1";

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses the s-expression form:
///
///   (sel n...) (seq n...) (par M n...) (inv n) (force-ok n) (force-fail n)
///   (act right|left|crouch|shoot|jump) (cond enemy|obstacle@ROW,COL)
///
/// `;` starts a comment running to end of line. Throws ParseError with a
/// 1-based line/column on any lexical, arity, threshold or range error.
BehaviorTree parse(std::string_view text);

/// Canonical form: one node per line, two spaces of indent per depth.
/// parse(print(t)) is structurally equal to t.
std::string print(const BehaviorTree& tree);

/// print() preceded by the version header line and terminated by '\n';
/// the on-disk `.bt` layout.
std::string print_document(const BehaviorTree& tree);

/// DOT digraph using the usual glyphs: "?" selector, "→" sequence, "⇉ M" parallel.
std::string to_dot(const BehaviorTree& tree);

/// Indented outline, one node per line.
std::string to_outline(const BehaviorTree& tree);

}  // namespace btforge
