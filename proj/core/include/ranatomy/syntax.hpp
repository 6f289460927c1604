#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ranatomy/source.hpp"

namespace ranatomy {

enum class SyntaxKind : std::uint8_t {
  Sequence,  // statements separated by newlines or semicolons (file root)

  // leaves
  Number,
  String,
  RawString,
  LogicalConst,  // TRUE FALSE T F
  NullConst,
  NAConst,  // NA and its typed variants
  InfConst,  // Inf NaN
  Symbol,
  QuotedSymbol,  // `name`
  Comment,
  Dots,      // ...
  EmptyArg,  // the hole in x[, 1]
  Break,
  Next,

  // composites
  Call,                     // callee, args...
  NamedArg,                 // name, value
  IndexBracket,             // object, args...
  IndexDoubleBracket,       // object, args...
  DollarAccess,             // object, name
  AtAccess,                 // object, name
  NamespaceAccess,          // pkg, name
  InternalNamespaceAccess,  // pkg, name
  Assign,                   // children in source order; see assign_target()
  BinaryOp,
  UnaryOp,
  SpecialInfixOp,  // %op%
  ColonOp,
  Tilde,        // 1 or 2 children
  FunctionDef,  // Params, body; op is "function" or "\\"
  Params,
  DefaultArg,  // name, default value
  If,          // condition, then[, else]
  For,         // variable, sequence, body
  While,       // condition, body
  Repeat,      // body
  Block,       // { statements }
  Paren,       // ( expr )
};

[[nodiscard]] std::string_view syntax_kind_name(SyntaxKind kind);
[[nodiscard]] bool is_leaf_kind(SyntaxKind kind);

enum class AssignOp : std::uint8_t { Left, Right, SuperLeft, SuperRight, Equals, ColonEquals };

inline constexpr AssignOp kAllAssignOps[] = {AssignOp::Left,      AssignOp::Equals,
                                             AssignOp::Right,     AssignOp::SuperLeft,
                                             AssignOp::SuperRight, AssignOp::ColonEquals};

[[nodiscard]] std::string_view assign_op_text(AssignOp op);
[[nodiscard]] std::optional<AssignOp> assign_op_from_text(std::string_view text);

struct SyntaxNode {
  SyntaxKind kind = SyntaxKind::Sequence;
  Span span;
  // Operator or form marker of a composite node ("<-", "+", "function").
  std::string op;
  // Source text of a leaf; empty for composites.
  std::string text;
  std::vector<SyntaxNode> children;

  [[nodiscard]] bool is_leaf() const { return is_leaf_kind(kind); }
};

// Accessors for Assign nodes; `->` and `->>` store the value first.
[[nodiscard]] AssignOp assign_op(const SyntaxNode& assign);
[[nodiscard]] const SyntaxNode& assign_target(const SyntaxNode& assign);
[[nodiscard]] const SyntaxNode& assign_value(const SyntaxNode& assign);

// FunctionDef accessors.
[[nodiscard]] bool is_lambda_form(const SyntaxNode& fn);
[[nodiscard]] const SyntaxNode& function_params(const SyntaxNode& fn);
[[nodiscard]] const SyntaxNode& function_body(const SyntaxNode& fn);

/// Name bound by a Symbol, QuotedSymbol, String or LogicalConst T/F node;
/// nullopt for anything else.
[[nodiscard]] std::optional<std::string> binding_name(const SyntaxNode& node);

/// Callee name of a Call: plain, backtick or string names, with any `pkg::`
/// or `pkg:::` prefix stripped. nullopt for dynamic callees.
struct CalleeName {
  std::string name;
  std::string package;  // empty unless namespace-qualified
};
[[nodiscard]] std::optional<CalleeName> callee_name(const SyntaxNode& call);

/// Strips the surrounding quotes/backticks and resolves escapes of a String or
/// QuotedSymbol leaf. Raw strings return their body.
[[nodiscard]] std::string unquote(const SyntaxNode& leaf);

/// One node per line, two spaces of indentation per depth level:
///   Assign <- [0,6)
///     Symbol "x" [0,1)
[[nodiscard]] std::string pretty_print(const SyntaxNode& root);

}  // namespace ranatomy
