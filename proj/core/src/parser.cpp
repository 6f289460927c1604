// Recursive-descent parser for R with Pratt-style operator precedence.
//
// Newlines terminate expressions at top level and inside braces, and are
// insignificant inside parentheses and brackets. Binding powers follow the
// operator table in R's ?Syntax, lowest first:
//   ?   =   <- <<- :=   -> ->>   ~   || |   && &   !   comparison   + -
//   * /   %op% |>   :   unary + -   ^   $ @   ( [ [[
// The only error handling is first-error reporting.

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <utility>

#include "ranatomy/lexer.hpp"
#include "ranatomy/parser.hpp"

namespace ranatomy {

namespace {

struct ParseAbort {
  FailureRecord record;
};

enum class InfixForm : std::uint8_t {
  Binary,
  Special,
  Colon,
  Tilde,
  AssignLeft,
  AssignRight,
  Call,
  Index,
  DoubleIndex,
  Member,  // $ and @
};

struct InfixInfo {
  int left_bp;
  int right_bp;
  InfixForm form;
};

// Minimum binding power inside call arguments and control-flow headers: keeps
// `=` (and `?`) from being read as an assignment there.
constexpr int kArgumentFloor = 5;

constexpr int kUnaryNotBp = 15;
constexpr int kUnaryTildeBp = 10;
constexpr int kUnaryMinusBp = 27;
constexpr int kUnaryHelpBp = 2;

std::optional<InfixInfo> infix_info(TokenKind kind) {
  switch (kind) {
    case TokenKind::Question: return InfixInfo{1, 2, InfixForm::Binary};
    case TokenKind::EqAssign: return InfixInfo{4, 3, InfixForm::AssignLeft};
    case TokenKind::LeftAssign:
    case TokenKind::SuperLeftAssign:
    case TokenKind::ColonAssign: return InfixInfo{6, 5, InfixForm::AssignLeft};
    case TokenKind::RightAssign:
    case TokenKind::SuperRightAssign: return InfixInfo{7, 8, InfixForm::AssignRight};
    case TokenKind::Tilde: return InfixInfo{9, 10, InfixForm::Tilde};
    case TokenKind::Or:
    case TokenKind::OrOr: return InfixInfo{11, 12, InfixForm::Binary};
    case TokenKind::And:
    case TokenKind::AndAnd: return InfixInfo{13, 14, InfixForm::Binary};
    case TokenKind::Less:
    case TokenKind::Greater:
    case TokenKind::LessEq:
    case TokenKind::GreaterEq:
    case TokenKind::EqEq:
    case TokenKind::NotEq: return InfixInfo{17, 18, InfixForm::Binary};
    case TokenKind::Plus:
    case TokenKind::Minus: return InfixInfo{19, 20, InfixForm::Binary};
    case TokenKind::Star:
    case TokenKind::Slash: return InfixInfo{21, 22, InfixForm::Binary};
    case TokenKind::Special: return InfixInfo{23, 24, InfixForm::Special};
    case TokenKind::Pipe: return InfixInfo{23, 24, InfixForm::Binary};
    case TokenKind::Colon: return InfixInfo{25, 26, InfixForm::Colon};
    case TokenKind::Caret: return InfixInfo{30, 29, InfixForm::Binary};
    case TokenKind::LParen: return InfixInfo{40, 0, InfixForm::Call};
    case TokenKind::LBracket: return InfixInfo{40, 0, InfixForm::Index};
    case TokenKind::DoubleLBracket: return InfixInfo{40, 0, InfixForm::DoubleIndex};
    case TokenKind::Dollar:
    case TokenKind::At: return InfixInfo{41, 42, InfixForm::Member};
    default: return std::nullopt;
  }
}

class Parser {
 public:
  Parser(std::string_view src, const ParseOptions& options)
      : src_(src), options_(options), stream_(tokenize(src)), tokens_(stream_.tokens) {}

  ParseOutcome run() {
    try {
      contexts_.push_back(Context{ContextKind::TopLevel, 0});
      Parsed root = leaf_less(SyntaxKind::Sequence);
      auto stmts = parse_statements(TokenKind::End);
      root.node.span = Span{0, static_cast<std::uint32_t>(src_.size())};
      for (auto& s : stmts) {
        root.height = std::max(root.height, s.height + 1);
        root.node.children.push_back(std::move(s.node));
      }
      return ParseOutcome{std::move(root.node)};
    } catch (ParseAbort& abort) {
      return ParseOutcome{std::move(abort.record)};
    }
  }

 private:
  enum class ContextKind : std::uint8_t { TopLevel, Block, Grouped };
  struct Context {
    ContextKind kind;
    int floor;
  };

  struct Parsed {
    SyntaxNode node;
    std::uint32_t height = 1;
  };

  // --- token cursor ---------------------------------------------------------

  bool newlines_ignored() const { return contexts_.back().kind == ContextKind::Grouped; }
  int floor() const { return contexts_.back().floor; }

  // Index of the next significant token: comments are always skipped,
  // newlines only inside parentheses and brackets.
  std::size_t peek_index() const {
    std::size_t i = idx_;
    const bool skip_nl = newlines_ignored();
    while (tokens_[i].kind == TokenKind::Comment || (skip_nl && tokens_[i].kind == TokenKind::Newline)) {
      ++i;
    }
    return i;
  }

  const Token& peek() const { return tokens_[peek_index()]; }

  const Token& advance() {
    std::size_t i = peek_index();
    idx_ = i + 1;
    return tokens_[i];
  }

  void skip_newlines() {
    while (tokens_[idx_].kind == TokenKind::Comment || tokens_[idx_].kind == TokenKind::Newline) ++idx_;
  }

  [[noreturn]] void fail_at(const Token& t) {
    FailureRecord rec;
    rec.category = FailureCategory::RawSyntaxError;
    rec.first_error_span = t.span;
    if (t.kind == TokenKind::Invalid && t.diagnostic) {
      rec.message = t.diagnostic;
    } else {
      rec.message = "unexpected " + std::string(token_kind_name(t.kind));
    }
    rec.message += " at " + std::to_string(t.line) + ":" + std::to_string(t.column);
    throw ParseAbort{std::move(rec)};
  }

  [[noreturn]] void fail_resource(const Token& t, std::string what) {
    FailureRecord rec;
    rec.category = FailureCategory::RawSyntaxError;
    rec.first_error_span = t.span;
    rec.message = std::move(what);
    rec.resource_limit = true;
    throw ParseAbort{std::move(rec)};
  }

  const Token& expect(TokenKind kind) {
    const Token& t = peek();
    if (t.kind != kind) fail_at(t);
    return advance();
  }

  // --- node construction ----------------------------------------------------

  Parsed leaf(SyntaxKind kind, const Token& t) {
    Parsed p;
    p.node.kind = kind;
    p.node.span = t.span;
    p.node.text = std::string(t.text);
    return p;
  }

  Parsed empty_arg(std::uint32_t at) {
    Parsed p;
    p.node.kind = SyntaxKind::EmptyArg;
    p.node.span = Span{at, at};
    return p;
  }

  Parsed leaf_less(SyntaxKind kind, std::string op = {}) {
    Parsed p;
    p.node.kind = kind;
    p.node.op = std::move(op);
    p.height = 1;
    return p;
  }

  void adopt(Parsed& parent, Parsed child) {
    parent.height = std::max(parent.height, child.height + 1);
    if (parent.height > options_.max_tree_height) {
      fail_resource(tokens_[std::min(idx_, tokens_.size() - 1)], "expression nesting exceeds tree height limit");
    }
    parent.node.children.push_back(std::move(child.node));
  }

  Parsed composite(SyntaxKind kind, std::string op, std::uint32_t begin, std::uint32_t end,
                   std::initializer_list<Parsed*> children) {
    Parsed p = leaf_less(kind, std::move(op));
    p.node.span = Span{begin, end};
    for (Parsed* c : children) adopt(p, std::move(*c));
    return p;
  }

  // --- statements -----------------------------------------------------------

  std::vector<Parsed> parse_statements(TokenKind terminator) {
    std::vector<Parsed> out;
    for (;;) {
      const Token& t = tokens_[idx_];
      if (t.kind == TokenKind::Newline || t.kind == TokenKind::Semicolon) {
        ++idx_;
        continue;
      }
      if (t.kind == TokenKind::Comment) {
        out.push_back(leaf(SyntaxKind::Comment, t));
        ++idx_;
        continue;
      }
      if (t.kind == terminator) break;
      if (t.kind == TokenKind::End) fail_at(t);

      out.push_back(parse_expr(0));

      const Token& after = tokens_[idx_];
      switch (after.kind) {
        case TokenKind::Newline:
        case TokenKind::Semicolon:
        case TokenKind::Comment:
        case TokenKind::End:
          break;
        default:
          if (after.kind != terminator) fail_at(after);
      }
    }
    return out;
  }

  // --- expressions ----------------------------------------------------------

  Parsed parse_expr(int min_bp) {
    if (++depth_ > options_.max_nesting) {
      fail_resource(peek(), "expression nesting exceeds recursion limit");
    }
    Parsed lhs = parse_prefix();
    for (;;) {
      std::size_t j = peek_index();
      const Token& op = tokens_[j];
      auto info = infix_info(op.kind);
      if (!info || info->left_bp < min_bp) break;
      idx_ = j + 1;
      lhs = parse_infix(std::move(lhs), op, *info);
    }
    --depth_;
    return lhs;
  }

  Parsed parse_infix(Parsed lhs, const Token& op, const InfixInfo& info) {
    const std::uint32_t begin = lhs.node.span.begin;
    switch (info.form) {
      case InfixForm::Call: {
        Parsed call = leaf_less(SyntaxKind::Call);
        adopt(call, std::move(lhs));
        std::uint32_t end = parse_args(call, TokenKind::RParen);
        call.node.span = Span{begin, end};
        return call;
      }
      case InfixForm::Index:
      case InfixForm::DoubleIndex: {
        const bool dbl = info.form == InfixForm::DoubleIndex;
        Parsed idx = leaf_less(dbl ? SyntaxKind::IndexDoubleBracket : SyntaxKind::IndexBracket);
        adopt(idx, std::move(lhs));
        std::uint32_t end = parse_args(idx, TokenKind::RBracket);
        if (dbl) {
          contexts_.push_back(Context{ContextKind::Grouped, kArgumentFloor});
          end = expect(TokenKind::RBracket).span.end;
          contexts_.pop_back();
        }
        idx.node.span = Span{begin, end};
        return idx;
      }
      case InfixForm::Member: {
        skip_newlines();
        const Token& name = peek();
        Parsed rhs;
        switch (name.kind) {
          case TokenKind::Symbol: rhs = leaf(SyntaxKind::Symbol, name); break;
          case TokenKind::QuotedSymbol: rhs = leaf(SyntaxKind::QuotedSymbol, name); break;
          case TokenKind::String: rhs = leaf(SyntaxKind::String, name); break;
          default: fail_at(name);
        }
        advance();
        auto kind = op.kind == TokenKind::Dollar ? SyntaxKind::DollarAccess : SyntaxKind::AtAccess;
        return composite(kind, {}, begin, rhs.node.span.end, {&lhs, &rhs});
      }
      default:
        break;
    }

    Parsed rhs = parse_expr(info.right_bp);
    const std::uint32_t end = rhs.node.span.end;
    switch (info.form) {
      case InfixForm::AssignLeft:
      case InfixForm::AssignRight:
        return composite(SyntaxKind::Assign, std::string(op.text), begin, end, {&lhs, &rhs});
      case InfixForm::Special:
        return composite(SyntaxKind::SpecialInfixOp, std::string(op.text), begin, end, {&lhs, &rhs});
      case InfixForm::Colon:
        return composite(SyntaxKind::ColonOp, ":", begin, end, {&lhs, &rhs});
      case InfixForm::Tilde:
        return composite(SyntaxKind::Tilde, "~", begin, end, {&lhs, &rhs});
      default: {
        std::string text(op.text);
        if (text == "**") text = "^";
        return composite(SyntaxKind::BinaryOp, std::move(text), begin, end, {&lhs, &rhs});
      }
    }
  }

  Parsed parse_unary(const Token& op, int bp, SyntaxKind kind) {
    Parsed operand = parse_expr(bp);
    return composite(kind, std::string(op.text), op.span.begin, operand.node.span.end, {&operand});
  }

  // Name-like token that may be followed by :: or :::
  Parsed parse_name_or_namespace(const Token& t, SyntaxKind kind) {
    Parsed name = leaf(kind, t);
    const Token& next = tokens_[idx_];
    if (next.kind != TokenKind::DoubleColon && next.kind != TokenKind::TripleColon) return name;
    ++idx_;
    const Token& member = tokens_[idx_];
    Parsed rhs;
    switch (member.kind) {
      case TokenKind::Symbol: rhs = leaf(SyntaxKind::Symbol, member); break;
      case TokenKind::QuotedSymbol: rhs = leaf(SyntaxKind::QuotedSymbol, member); break;
      case TokenKind::String: rhs = leaf(SyntaxKind::String, member); break;
      default: fail_at(member);
    }
    ++idx_;
    auto ns_kind = next.kind == TokenKind::DoubleColon ? SyntaxKind::NamespaceAccess
                                                       : SyntaxKind::InternalNamespaceAccess;
    return composite(ns_kind, std::string(next.text), name.node.span.begin, rhs.node.span.end,
                     {&name, &rhs});
  }

  Parsed parse_prefix() {
    skip_newlines();
    const Token& t = advance();
    switch (t.kind) {
      case TokenKind::Number: return leaf(SyntaxKind::Number, t);
      case TokenKind::RawString: return leaf(SyntaxKind::RawString, t);
      case TokenKind::True:
      case TokenKind::False: return leaf(SyntaxKind::LogicalConst, t);
      case TokenKind::Null: return leaf(SyntaxKind::NullConst, t);
      case TokenKind::NA: return leaf(SyntaxKind::NAConst, t);
      case TokenKind::Inf: return leaf(SyntaxKind::InfConst, t);
      case TokenKind::String: return parse_name_or_namespace(t, SyntaxKind::String);
      case TokenKind::QuotedSymbol: return parse_name_or_namespace(t, SyntaxKind::QuotedSymbol);
      case TokenKind::Symbol:
        if (t.text == "...") return leaf(SyntaxKind::Dots, t);
        if (t.text == "T" || t.text == "F") {
          const Token& next = tokens_[idx_];
          if (next.kind != TokenKind::DoubleColon && next.kind != TokenKind::TripleColon) {
            return leaf(SyntaxKind::LogicalConst, t);
          }
        }
        return parse_name_or_namespace(t, SyntaxKind::Symbol);
      case TokenKind::Break: return leaf(SyntaxKind::Break, t);
      case TokenKind::Next: return leaf(SyntaxKind::Next, t);
      case TokenKind::Minus:
      case TokenKind::Plus: return parse_unary(t, kUnaryMinusBp, SyntaxKind::UnaryOp);
      case TokenKind::Bang: return parse_unary(t, kUnaryNotBp, SyntaxKind::UnaryOp);
      case TokenKind::Question: return parse_unary(t, kUnaryHelpBp, SyntaxKind::UnaryOp);
      case TokenKind::Tilde: return parse_unary(t, kUnaryTildeBp, SyntaxKind::Tilde);
      case TokenKind::LParen: {
        contexts_.push_back(Context{ContextKind::Grouped, 0});
        Parsed inner = parse_expr(0);
        const Token& close = expect(TokenKind::RParen);
        contexts_.pop_back();
        return composite(SyntaxKind::Paren, {}, t.span.begin, close.span.end, {&inner});
      }
      case TokenKind::LBrace: {
        contexts_.push_back(Context{ContextKind::Block, 0});
        Parsed block = leaf_less(SyntaxKind::Block);
        for (auto& s : parse_statements(TokenKind::RBrace)) adopt(block, std::move(s));
        const Token& close = tokens_[idx_++];
        contexts_.pop_back();
        block.node.span = Span{t.span.begin, close.span.end};
        return block;
      }
      case TokenKind::Function:
      case TokenKind::Lambda: return parse_function(t);
      case TokenKind::If: return parse_if(t);
      case TokenKind::For: return parse_for(t);
      case TokenKind::While: return parse_while(t);
      case TokenKind::Repeat: {
        Parsed body = parse_expr(floor());
        return composite(SyntaxKind::Repeat, {}, t.span.begin, body.node.span.end, {&body});
      }
      default:
        fail_at(t);
    }
  }

  // Parses `( expr )` of if/while headers.
  Parsed parse_condition() {
    expect(TokenKind::LParen);
    contexts_.push_back(Context{ContextKind::Grouped, kArgumentFloor});
    Parsed cond = parse_expr(kArgumentFloor);
    expect(TokenKind::RParen);
    contexts_.pop_back();
    return cond;
  }

  Parsed parse_if(const Token& kw) {
    Parsed cond = parse_condition();
    Parsed then_body = parse_expr(floor());

    // `else` may follow a newline except at top level.
    std::size_t j = idx_;
    const bool allow_newline = contexts_.back().kind != ContextKind::TopLevel;
    while (tokens_[j].kind == TokenKind::Comment ||
           (allow_newline && tokens_[j].kind == TokenKind::Newline)) {
      ++j;
    }
    if (tokens_[j].kind == TokenKind::Else) {
      idx_ = j + 1;
      Parsed else_body = parse_expr(floor());
      return composite(SyntaxKind::If, {}, kw.span.begin, else_body.node.span.end,
                       {&cond, &then_body, &else_body});
    }
    return composite(SyntaxKind::If, {}, kw.span.begin, then_body.node.span.end, {&cond, &then_body});
  }

  Parsed parse_for(const Token& kw) {
    expect(TokenKind::LParen);
    contexts_.push_back(Context{ContextKind::Grouped, kArgumentFloor});
    const Token& var_tok = peek();
    Parsed var;
    if (var_tok.kind == TokenKind::Symbol) {
      var = leaf(SyntaxKind::Symbol, var_tok);
    } else if (var_tok.kind == TokenKind::QuotedSymbol) {
      var = leaf(SyntaxKind::QuotedSymbol, var_tok);
    } else {
      fail_at(var_tok);
    }
    advance();
    expect(TokenKind::In);
    Parsed seq = parse_expr(kArgumentFloor);
    expect(TokenKind::RParen);
    contexts_.pop_back();
    Parsed body = parse_expr(floor());
    return composite(SyntaxKind::For, {}, kw.span.begin, body.node.span.end, {&var, &seq, &body});
  }

  Parsed parse_while(const Token& kw) {
    Parsed cond = parse_condition();
    Parsed body = parse_expr(floor());
    return composite(SyntaxKind::While, {}, kw.span.begin, body.node.span.end, {&cond, &body});
  }

  Parsed parse_function(const Token& kw) {
    const Token& open = expect(TokenKind::LParen);
    contexts_.push_back(Context{ContextKind::Grouped, kArgumentFloor});
    Parsed params = leaf_less(SyntaxKind::Params);
    bool first = true;
    for (;;) {
      const Token& t = peek();
      if (t.kind == TokenKind::RParen) {
        if (!first) fail_at(t);
        break;
      }
      Parsed name;
      if (t.kind == TokenKind::Symbol && t.text == "...") {
        name = leaf(SyntaxKind::Dots, t);
      } else if (t.kind == TokenKind::Symbol) {
        name = leaf(SyntaxKind::Symbol, t);
      } else if (t.kind == TokenKind::QuotedSymbol) {
        name = leaf(SyntaxKind::QuotedSymbol, t);
      } else {
        fail_at(t);
      }
      advance();
      if (peek().kind == TokenKind::EqAssign) {
        advance();
        Parsed value = parse_expr(kArgumentFloor);
        adopt(params, composite(SyntaxKind::DefaultArg, {}, name.node.span.begin,
                                value.node.span.end, {&name, &value}));
      } else {
        adopt(params, std::move(name));
      }
      const Token& sep = peek();
      if (sep.kind == TokenKind::Comma) {
        advance();
        first = false;
        continue;
      }
      if (sep.kind != TokenKind::RParen) fail_at(sep);
      break;
    }
    const Token& close = advance();
    contexts_.pop_back();
    params.node.span = Span{open.span.begin, close.span.end};

    Parsed body = parse_expr(floor());
    return composite(SyntaxKind::FunctionDef, kw.kind == TokenKind::Lambda ? "\\" : "function",
                     kw.span.begin, body.node.span.end, {&params, &body});
  }

  static bool is_arg_name_token(TokenKind kind) {
    return kind == TokenKind::Symbol || kind == TokenKind::QuotedSymbol ||
           kind == TokenKind::String || kind == TokenKind::Null;
  }

  // Parses arguments up to and including `close`; returns the end offset.
  std::uint32_t parse_args(Parsed& parent, TokenKind close) {
    contexts_.push_back(Context{ContextKind::Grouped, kArgumentFloor});
    bool after_comma = false;
    bool have_any = false;
    std::uint32_t end = 0;
    for (;;) {
      std::size_t j = peek_index();
      const Token& t = tokens_[j];
      if (t.kind == close) {
        if (after_comma) adopt(parent, empty_arg(t.span.begin));
        idx_ = j + 1;
        end = t.span.end;
        break;
      }
      if (t.kind == TokenKind::Comma) {
        if (!have_any || after_comma) adopt(parent, empty_arg(t.span.begin));
        idx_ = j + 1;
        after_comma = true;
        have_any = true;
        continue;
      }
      if (have_any && !after_comma) fail_at(t);

      // name = value
      std::size_t k = j + 1;
      while (tokens_[k].kind == TokenKind::Comment || tokens_[k].kind == TokenKind::Newline) ++k;
      if (is_arg_name_token(t.kind) && tokens_[k].kind == TokenKind::EqAssign) {
        SyntaxKind name_kind = t.kind == TokenKind::Symbol         ? SyntaxKind::Symbol
                               : t.kind == TokenKind::QuotedSymbol ? SyntaxKind::QuotedSymbol
                               : t.kind == TokenKind::String       ? SyntaxKind::String
                                                                   : SyntaxKind::NullConst;
        if (t.kind == TokenKind::Symbol && t.text == "...") name_kind = SyntaxKind::Dots;
        Parsed name = leaf(name_kind, t);
        idx_ = k + 1;
        std::size_t v = peek_index();
        Parsed value;
        if (tokens_[v].kind == TokenKind::Comma || tokens_[v].kind == close) {
          value = empty_arg(tokens_[k].span.end);
        } else {
          value = parse_expr(kArgumentFloor);
        }
        std::uint32_t arg_end = std::max(value.node.span.end, tokens_[k].span.end);
        adopt(parent, composite(SyntaxKind::NamedArg, {}, name.node.span.begin, arg_end, {&name, &value}));
      } else {
        adopt(parent, parse_expr(kArgumentFloor));
      }
      have_any = true;
      after_comma = false;
    }
    contexts_.pop_back();
    return end;
  }

  std::string_view src_;
  ParseOptions options_;
  TokenStream stream_;
  const std::vector<Token>& tokens_;
  std::size_t idx_ = 0;
  std::uint32_t depth_ = 0;
  std::vector<Context> contexts_;
};

constexpr std::array<std::string_view, 3> kDocumentationMarkers{"\\dontrun", "\\donttest",
                                                                "\\dontshow"};

bool has_undecodable_or_confusable(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    auto d = decode_utf8(bytes, i);
    if (!d) return true;
    if (is_confusable(d->cp)) return true;
    i += d->length;
  }
  return false;
}

bool is_operand_end(TokenKind k) {
  switch (k) {
    case TokenKind::Symbol:
    case TokenKind::QuotedSymbol:
    case TokenKind::Number:
    case TokenKind::String:
    case TokenKind::RawString:
    case TokenKind::True:
    case TokenKind::False:
    case TokenKind::Null:
    case TokenKind::NA:
    case TokenKind::Inf:
      return true;
    default:
      return false;
  }
}

bool is_operand_start(TokenKind k) {
  return is_operand_end(k) || k == TokenKind::Function || k == TokenKind::If ||
         k == TokenKind::For || k == TokenKind::While || k == TokenKind::Repeat;
}

}  // namespace

std::string_view failure_category_name(FailureCategory category) {
  switch (category) {
    case FailureCategory::NotRCode: return "NotRCode";
    case FailureCategory::EncodingError: return "EncodingError";
    case FailureCategory::DocumentationCommand: return "DocumentationCommand";
    case FailureCategory::RawSyntaxError: return "RawSyntaxError";
  }
  return "?";
}

std::optional<FailureCategory> failure_category_from_name(std::string_view name) {
  for (auto c : kAllFailureCategories) {
    if (failure_category_name(c) == name) return c;
  }
  return std::nullopt;
}

ParseOutcome parse(std::string_view source, const ParseOptions& options) {
  return Parser(source, options).run();
}

bool is_plausible_r_line(std::string_view line) {
  TokenStream ts = tokenize(line);
  TokenKind prev = TokenKind::End;
  for (const Token& t : ts.tokens) {
    if (t.kind == TokenKind::Comment || t.kind == TokenKind::Newline) continue;
    if (t.kind == TokenKind::Invalid) return false;
    if (is_operand_end(prev) && is_operand_start(t.kind)) return false;
    prev = t.kind;
  }
  return true;
}

FailureRecord classify_parse_failure(std::string_view source, FailureRecord failure) {
  if (failure.resource_limit) return failure;
  const std::uint32_t err = std::min<std::uint32_t>(failure.first_error_span.begin,
                                                    static_cast<std::uint32_t>(source.size()));

  for (std::string_view marker : kDocumentationMarkers) {
    auto pos = source.find(marker);
    if (pos != std::string_view::npos && pos <= err) {
      failure.category = FailureCategory::DocumentationCommand;
      return failure;
    }
  }

  const std::uint32_t err_end =
      std::min<std::uint32_t>(failure.first_error_span.end, static_cast<std::uint32_t>(source.size()));
  if (has_undecodable_or_confusable(source.substr(err, err_end - err))) {
    failure.category = FailureCategory::EncodingError;
    return failure;
  }

  // Lines from the start of the file through the line holding the error.
  std::size_t line_end = source.find('\n', err);
  std::string_view prefix = source.substr(0, line_end == std::string_view::npos ? source.size() : line_end);
  std::size_t considered = 0;
  std::size_t plausible = 0;
  std::size_t pos = 0;
  while (pos <= prefix.size()) {
    std::size_t nl = prefix.find('\n', pos);
    std::string_view line = prefix.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (line.find_first_not_of(" \t\r\f\v") != std::string_view::npos) {
      ++considered;
      if (is_plausible_r_line(line)) ++plausible;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (considered > 0 &&
      static_cast<double>(plausible) < kPlausibleRLineThreshold * static_cast<double>(considered)) {
    failure.category = FailureCategory::NotRCode;
    return failure;
  }

  failure.category = FailureCategory::RawSyntaxError;
  return failure;
}

ParseOutcome parse_and_classify(std::string_view source, const ParseOptions& options) {
  ParseOutcome outcome = parse(source, options);
  if (!outcome.ok()) {
    outcome.result = classify_parse_failure(source, std::get<FailureRecord>(std::move(outcome.result)));
  }
  return outcome;
}

}  // namespace ranatomy
