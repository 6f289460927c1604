#include "ranatomy/syntax.hpp"

#include <cstdio>
#include <stdexcept>

namespace ranatomy {

std::string_view syntax_kind_name(SyntaxKind kind) {
  switch (kind) {
    case SyntaxKind::Sequence: return "Sequence";
    case SyntaxKind::Number: return "Number";
    case SyntaxKind::String: return "String";
    case SyntaxKind::RawString: return "RawString";
    case SyntaxKind::LogicalConst: return "LogicalConst";
    case SyntaxKind::NullConst: return "NullConst";
    case SyntaxKind::NAConst: return "NAConst";
    case SyntaxKind::InfConst: return "InfConst";
    case SyntaxKind::Symbol: return "Symbol";
    case SyntaxKind::QuotedSymbol: return "QuotedSymbol";
    case SyntaxKind::Comment: return "Comment";
    case SyntaxKind::Dots: return "Dots";
    case SyntaxKind::EmptyArg: return "EmptyArg";
    case SyntaxKind::Break: return "Break";
    case SyntaxKind::Next: return "Next";
    case SyntaxKind::Call: return "Call";
    case SyntaxKind::NamedArg: return "NamedArg";
    case SyntaxKind::IndexBracket: return "IndexBracket";
    case SyntaxKind::IndexDoubleBracket: return "IndexDoubleBracket";
    case SyntaxKind::DollarAccess: return "DollarAccess";
    case SyntaxKind::AtAccess: return "AtAccess";
    case SyntaxKind::NamespaceAccess: return "NamespaceAccess";
    case SyntaxKind::InternalNamespaceAccess: return "InternalNamespaceAccess";
    case SyntaxKind::Assign: return "Assign";
    case SyntaxKind::BinaryOp: return "BinaryOp";
    case SyntaxKind::UnaryOp: return "UnaryOp";
    case SyntaxKind::SpecialInfixOp: return "SpecialInfixOp";
    case SyntaxKind::ColonOp: return "ColonOp";
    case SyntaxKind::Tilde: return "Tilde";
    case SyntaxKind::FunctionDef: return "FunctionDef";
    case SyntaxKind::Params: return "Params";
    case SyntaxKind::DefaultArg: return "DefaultArg";
    case SyntaxKind::If: return "If";
    case SyntaxKind::For: return "For";
    case SyntaxKind::While: return "While";
    case SyntaxKind::Repeat: return "Repeat";
    case SyntaxKind::Block: return "Block";
    case SyntaxKind::Paren: return "Paren";
  }
  return "?";
}

bool is_leaf_kind(SyntaxKind kind) {
  switch (kind) {
    case SyntaxKind::Number:
    case SyntaxKind::String:
    case SyntaxKind::RawString:
    case SyntaxKind::LogicalConst:
    case SyntaxKind::NullConst:
    case SyntaxKind::NAConst:
    case SyntaxKind::InfConst:
    case SyntaxKind::Symbol:
    case SyntaxKind::QuotedSymbol:
    case SyntaxKind::Comment:
    case SyntaxKind::Dots:
    case SyntaxKind::EmptyArg:
    case SyntaxKind::Break:
    case SyntaxKind::Next:
      return true;
    default:
      return false;
  }
}

std::string_view assign_op_text(AssignOp op) {
  switch (op) {
    case AssignOp::Left: return "<-";
    case AssignOp::Right: return "->";
    case AssignOp::SuperLeft: return "<<-";
    case AssignOp::SuperRight: return "->>";
    case AssignOp::Equals: return "=";
    case AssignOp::ColonEquals: return ":=";
  }
  return "?";
}

std::optional<AssignOp> assign_op_from_text(std::string_view text) {
  for (AssignOp op : kAllAssignOps) {
    if (assign_op_text(op) == text) return op;
  }
  return std::nullopt;
}

AssignOp assign_op(const SyntaxNode& assign) {
  auto op = assign_op_from_text(assign.op);
  if (!op) throw std::logic_error("not an assignment node");
  return *op;
}

namespace {
bool is_right_assign(const SyntaxNode& assign) {
  AssignOp op = assign_op(assign);
  return op == AssignOp::Right || op == AssignOp::SuperRight;
}
}  // namespace

const SyntaxNode& assign_target(const SyntaxNode& assign) {
  return is_right_assign(assign) ? assign.children.at(1) : assign.children.at(0);
}

const SyntaxNode& assign_value(const SyntaxNode& assign) {
  return is_right_assign(assign) ? assign.children.at(0) : assign.children.at(1);
}

bool is_lambda_form(const SyntaxNode& fn) { return fn.op == "\\"; }
const SyntaxNode& function_params(const SyntaxNode& fn) { return fn.children.at(0); }
const SyntaxNode& function_body(const SyntaxNode& fn) { return fn.children.at(1); }

namespace {

// Resolves the escapes R accepts inside quoted strings. Unknown escapes keep
// the escaped character.
std::string unescape(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c != '\\' || i + 1 >= body.size()) {
      out.push_back(c);
      continue;
    }
    char e = body[++i];
    switch (e) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case '0': out.push_back('\0'); break;
      case 'a': out.push_back('\a'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      default: out.push_back(e); break;
    }
  }
  return out;
}

}  // namespace

std::string unquote(const SyntaxNode& leaf) {
  const std::string& t = leaf.text;
  if (leaf.kind == SyntaxKind::RawString) {
    // r"---( body )---"
    std::size_t open = 2;
    while (open < t.size() && t[open] == '-') ++open;
    std::size_t dashes = open - 2;
    std::size_t body_begin = open + 1;
    std::size_t body_end = t.size() - 2 - dashes;
    if (body_end < body_begin) return {};
    return t.substr(body_begin, body_end - body_begin);
  }
  if ((leaf.kind == SyntaxKind::String || leaf.kind == SyntaxKind::QuotedSymbol) && t.size() >= 2) {
    return unescape(std::string_view(t).substr(1, t.size() - 2));
  }
  return t;
}

std::optional<std::string> binding_name(const SyntaxNode& node) {
  switch (node.kind) {
    case SyntaxKind::Symbol:
      return node.text;
    case SyntaxKind::QuotedSymbol:
    case SyntaxKind::String:
    case SyntaxKind::RawString:
      return unquote(node);
    case SyntaxKind::LogicalConst:
      if (node.text == "T" || node.text == "F") return node.text;
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

std::optional<CalleeName> callee_name(const SyntaxNode& call) {
  if (call.kind != SyntaxKind::Call || call.children.empty()) return std::nullopt;
  const SyntaxNode& callee = call.children.front();
  if (callee.kind == SyntaxKind::NamespaceAccess ||
      callee.kind == SyntaxKind::InternalNamespaceAccess) {
    auto pkg = binding_name(callee.children.at(0));
    auto name = binding_name(callee.children.at(1));
    if (!pkg || !name) return std::nullopt;
    return CalleeName{*name, *pkg};
  }
  if (callee.kind == SyntaxKind::LogicalConst) return std::nullopt;
  if (auto name = binding_name(callee)) return CalleeName{*name, {}};
  return std::nullopt;
}

namespace {

void append_escaped(std::string& out, std::string_view text) {
  out.push_back('"');
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

void print_node(std::string& out, const SyntaxNode& node, int depth) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += syntax_kind_name(node.kind);
  if (!node.op.empty()) {
    out.push_back(' ');
    out += node.op;
  }
  if (node.is_leaf()) {
    out.push_back(' ');
    append_escaped(out, node.text);
  }
  out += " [" + std::to_string(node.span.begin) + "," + std::to_string(node.span.end) + ")\n";
  for (const auto& child : node.children) print_node(out, child, depth + 1);
}

}  // namespace

std::string pretty_print(const SyntaxNode& root) {
  std::string out;
  print_node(out, root, 0);
  return out;
}

}  // namespace ranatomy
