#include "ranatomy/features.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <string>
#include <unordered_set>

namespace ranatomy {

namespace {

constexpr std::array<std::string_view, 9> kValueKinds{
    "FunctionCall", "Constant", "Symbol", "BinaryOp", "UnaryOp", "FunctionDef", "AnonymousCall", "IndexExpr", "Other"};
constexpr std::array<std::string_view, 7> kVectorKinds{
    "ColonRange", "SeqCall", "SeqAlongLen", "SymbolVector", "ConstantVector", "OtherCall", "Other"};
constexpr std::array<std::string_view, 6> kAssignFunctions{
    "assign", "assignInNamespace", "setGeneric", "setMethod", "setValidity", "delayedAssign"};
constexpr std::array<std::string_view, 2> kLockFunctions{"lockEnvironment", "lockBinding"};
constexpr std::array<std::string_view, 4> kGetFamily{"get", "mget", "get0", "exists"};
constexpr std::array<std::string_view, 3> kBodyArity{"Empty", "Single", "Multiple"};
constexpr std::array<std::string_view, 7> kApplyFamily{"lapply", "sapply", "apply", "vapply", "mapply", "tapply", "Map"};
constexpr std::array<std::string_view, 4> kHooks{".onAttach", ".onLoad", ".onUnload", ".onDetach"};
constexpr std::array<std::string_view, 16> kReflective{
    "eval", "evalq", "body", "formals", "environment", "parse", "deparse", "substitute",
    "quote", "bquote", "load", "attach", "sys.call", "sys.function", "match.call", "do.call"};
constexpr std::array<std::string_view, 5> kFfi{".C", ".Call", ".Fortran", ".External", ".External2"};
constexpr std::array<std::string_view, 5> kLoadFunctions{
    "library", "require", "requireNamespace", "loadNamespace", "attachNamespace"};
constexpr std::array<std::string_view, 2> kRoxygenTags{"@import", "@importFrom"};
constexpr std::array<std::string_view, 7> kConstantKinds{"Number", "String", "RawString", "Logical", "Null", "NA", "Inf"};

// Base operators and keywords whose redefinition is reported.
constexpr std::array<std::string_view, 39> kBaseOperators{
    ":", "==", "<-", "if", "for", "(", "{", "[", "[[", "+", "-", "*", "/", "^", "!=", "<", ">", "<=", ">=", "&",
    "&&", "|", "||", "!", "=", "<<-", "$", "@", "while", "repeat", "function", "~", "?", "::", ":::", "%%",
    "%/%", "%*%", "%in%"};

// Leftward and rightward local assignment; mixing them is the lint.
constexpr std::array<std::string_view, 3> kLocalAssignOps{"<-", "=", "->"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
  return std::find(set.begin(), set.end(), name) != set.end();
}

template <std::size_t N>
void seed(CountMap& map, const std::array<std::string_view, N>& keys) {
  for (auto k : keys) map.emplace(std::string(k), 0);
}

template <std::size_t N>
void bump_if_member(CountMap& map, const std::array<std::string_view, N>& keys, const std::string& name) {
  if (contains(keys, name)) ++map[name];
}

const SyntaxNode& unwrap_parens(const SyntaxNode& n) {
  const SyntaxNode* p = &n;
  while (p->kind == SyntaxKind::Paren && !p->children.empty()) p = &p->children.front();
  return *p;
}

bool is_literal(const SyntaxNode& n) {
  switch (n.kind) {
    case SyntaxKind::Number:
    case SyntaxKind::String:
    case SyntaxKind::RawString:
    case SyntaxKind::LogicalConst:
    case SyntaxKind::NullConst:
    case SyntaxKind::NAConst:
    case SyntaxKind::InfConst:
      return true;
    default:
      return false;
  }
}

// Literal, possibly with a sign: -1, +2.
bool is_signed_literal(const SyntaxNode& n) {
  if (is_literal(n)) return true;
  return n.kind == SyntaxKind::UnaryOp && (n.op == "-" || n.op == "+") && n.children.size() == 1 &&
         is_literal(n.children[0]);
}

std::optional<std::string> call_name(const SyntaxNode& call) {
  auto cn = callee_name(call);
  if (!cn) return std::nullopt;
  return cn->name;
}

bool is_call_to(const SyntaxNode& n, std::string_view name) {
  if (n.kind != SyntaxKind::Call) return false;
  auto cn = call_name(n);
  return cn && *cn == name;
}

// Arguments of a call or index node, skipping the callee/object.
struct Args {
  std::vector<const SyntaxNode*> positional;
  std::vector<std::pair<std::string, const SyntaxNode*>> named;

  [[nodiscard]] const SyntaxNode* get(std::string_view name) const {
    for (const auto& [n, v] : named) {
      if (n == name) return v;
    }
    return nullptr;
  }
};

Args split_args(const SyntaxNode& call) {
  Args out;
  for (std::size_t i = 1; i < call.children.size(); ++i) {
    const SyntaxNode& a = call.children[i];
    if (a.kind == SyntaxKind::NamedArg) {
      out.named.emplace_back(binding_name(a.children[0]).value_or(""), &a.children[1]);
    } else {
      out.positional.push_back(&a);
    }
  }
  return out;
}

// Statements of a body: the children of a block without comments, or the
// expression itself.
std::vector<const SyntaxNode*> body_statements(const SyntaxNode& body) {
  std::vector<const SyntaxNode*> out;
  if (body.kind == SyntaxKind::Block) {
    for (const auto& c : body.children) {
      if (c.kind != SyntaxKind::Comment) out.push_back(&c);
    }
  } else {
    out.push_back(&body);
  }
  return out;
}

std::string_view arity_name(const SyntaxNode& body) {
  std::size_t n = body_statements(body).size();
  return kBodyArity[std::min<std::size_t>(n, 2)];
}

bool is_loop_exit(const SyntaxNode& stmt) {
  return stmt.kind == SyntaxKind::Break || is_call_to(stmt, "return") || is_call_to(stmt, "stop");
}

bool is_constant_scalar(const SyntaxNode& vec) {
  const SyntaxNode& v = unwrap_parens(vec);
  if (is_signed_literal(v)) return true;
  if (is_call_to(v, "c")) {
    Args args = split_args(v);
    return args.named.empty() && args.positional.size() <= 1 &&
           std::all_of(args.positional.begin(), args.positional.end(),
                       [](const SyntaxNode* a) { return is_signed_literal(*a); });
  }
  return false;
}

std::optional<std::string> degenerate_for_reason(const SyntaxNode& loop) {
  const SyntaxNode& vec = loop.children.at(1);
  const SyntaxNode& body = loop.children.at(2);
  if (is_constant_scalar(vec)) return "constant scalar vector";
  auto stmts = body_statements(body);
  if (stmts.empty()) return "empty body";
  if (stmts.size() == 1 && is_loop_exit(*stmts[0])) return "body only exits the loop";
  return std::nullopt;
}

std::optional<std::string> degenerate_while_reason(const SyntaxNode& loop) {
  auto truth = constant_truth(loop.children.at(0));
  if (truth && !*truth) return "constant FALSE condition";
  auto stmts = body_statements(loop.children.at(1));
  if (!stmts.empty() && std::all_of(stmts.begin(), stmts.end(), [](const SyntaxNode* s) {
        return is_call_to(*s, "return") || is_call_to(*s, "stop");
      })) {
    return "body only returns or stops";
  }
  return std::nullopt;
}

void collect_degenerate(const SyntaxNode& n, std::vector<DegenerateFinding>& out) {
  switch (n.kind) {
    case SyntaxKind::If:
      if (constant_truth(n.children.at(0))) {
        out.push_back({DegenerateKind::ConstantIfCondition, n.children[0].span, "constant condition"});
      }
      break;
    case SyntaxKind::For:
      if (auto why = degenerate_for_reason(n)) out.push_back({DegenerateKind::DegenerateFor, n.span, *why});
      break;
    case SyntaxKind::While:
      if (auto truth = constant_truth(n.children.at(0)); truth && !*truth) {
        out.push_back({DegenerateKind::ConstantWhileCondition, n.children[0].span, "constant FALSE condition"});
      }
      if (auto why = degenerate_while_reason(n)) out.push_back({DegenerateKind::DegenerateWhile, n.span, *why});
      break;
    default:
      break;
  }
  for (const auto& c : n.children) collect_degenerate(c, out);
}

std::string_view constant_kind_key(SyntaxKind kind) {
  switch (kind) {
    case SyntaxKind::Number: return "Number";
    case SyntaxKind::String: return "String";
    case SyntaxKind::RawString: return "RawString";
    case SyntaxKind::LogicalConst: return "Logical";
    case SyntaxKind::NullConst: return "Null";
    case SyntaxKind::NAConst: return "NA";
    case SyntaxKind::InfConst: return "Inf";
    default: return {};
  }
}

std::string condition_key(const SyntaxNode& cond) {
  std::string key(syntax_kind_name(cond.kind));
  if (cond.kind == SyntaxKind::BinaryOp || cond.kind == SyntaxKind::UnaryOp ||
      cond.kind == SyntaxKind::SpecialInfixOp) {
    key += ":" + cond.op;
  }
  return key;
}

bool is_infix_name(const std::string& name) {
  return name.size() > 2 && name.front() == '%' && name.back() == '%' && !contains(kBaseOperators, name);
}

bool is_replacement_name(const std::string& name) {
  return name.size() > 2 && name.compare(name.size() - 2, 2, "<-") == 0;
}

bool is_truthy_flag(const SyntaxNode* n) {
  if (n == nullptr) return false;
  auto t = constant_truth(*n);
  return t && *t;
}

// Function argument of an apply-family call: FUN= or the second positional.
const SyntaxNode* apply_function_arg(const Args& args) {
  if (const SyntaxNode* f = args.get("FUN")) return f;
  // With FUN named, the remaining positionals shift; without it the function
  // is the second positional argument.
  if (args.positional.size() >= 2) return args.positional[1];
  return nullptr;
}

// Adds literal package names from `X` of a vectorized load; returns false if
// the vector is not a literal.
bool literal_names(const SyntaxNode& vec, std::set<std::string>& out) {
  const SyntaxNode& v = unwrap_parens(vec);
  if (v.kind == SyntaxKind::String || v.kind == SyntaxKind::RawString) {
    out.insert(unquote(v));
    return true;
  }
  if (!is_call_to(v, "c")) return false;
  Args args = split_args(v);
  std::set<std::string> found;
  for (const SyntaxNode* a : args.positional) {
    if (a->kind != SyntaxKind::String && a->kind != SyntaxKind::RawString) return false;
    found.insert(unquote(*a));
  }
  for (const auto& [name, a] : args.named) {
    if (a->kind != SyntaxKind::String && a->kind != SyntaxKind::RawString) return false;
    found.insert(unquote(*a));
  }
  out.insert(found.begin(), found.end());
  return true;
}

// Returns true when `call` is a vectorized load.
bool vectorized_load(const SyntaxNode& call, const std::string& name, std::set<std::string>* known) {
  if (!contains(kApplyFamily, name)) return false;
  Args args = split_args(call);
  const SyntaxNode* fn = apply_function_arg(args);
  if (fn == nullptr) return false;
  const SyntaxNode& f = unwrap_parens(*fn);
  if (f.kind != SyntaxKind::Symbol && f.kind != SyntaxKind::QuotedSymbol) return false;
  auto fname = binding_name(f);
  if (!fname || (*fname != "library" && *fname != "require")) return false;
  if (known != nullptr) {
    const SyntaxNode* x = args.get("X");
    if (x == nullptr && !args.positional.empty() && args.positional[0] != fn) x = args.positional[0];
    if (x != nullptr) literal_names(*x, *known);
  }
  return true;
}

void count_vectorized(const SyntaxNode& n, Count& count, std::set<std::string>* known) {
  if (n.kind == SyntaxKind::Call) {
    if (auto name = call_name(n); name && vectorized_load(n, *name, known)) ++count;
  }
  for (const auto& c : n.children) count_vectorized(c, count, known);
}

class Extractor {
 public:
  Extractor(FeatureReport& report, const ExtractOptions& options) : r_(report), options_(options) {}

  void visit(const SyntaxNode& n) {
    switch (n.kind) {
      case SyntaxKind::Number:
      case SyntaxKind::String:
      case SyntaxKind::RawString:
      case SyntaxKind::LogicalConst:
      case SyntaxKind::NullConst:
      case SyntaxKind::NAConst:
      case SyntaxKind::InfConst:
        ++r_.values.constant_kind[std::string(constant_kind_key(n.kind))];
        return;
      case SyntaxKind::Break:
        ++r_.loops.break_count;
        return;
      case SyntaxKind::Next:
        ++r_.loops.next_count;
        return;
      case SyntaxKind::IndexBracket:
        ++r_.data_access.single_bracket;
        break;
      case SyntaxKind::IndexDoubleBracket:
        ++r_.data_access.double_bracket;
        break;
      case SyntaxKind::DollarAccess:
      case SyntaxKind::AtAccess:
        ++(n.kind == SyntaxKind::DollarAccess ? r_.data_access.dollar : r_.data_access.at);
        visit(n.children.at(0));  // the member name is not a value
        return;
      case SyntaxKind::NamespaceAccess:
      case SyntaxKind::InternalNamespaceAccess:
        ++(n.kind == SyntaxKind::NamespaceAccess ? r_.packages.ns_access : r_.packages.internal_ns_access);
        if (auto pkg = binding_name(n.children.at(0))) r_.packages.ns_packages.insert(*pkg);
        return;
      case SyntaxKind::NamedArg:
        visit(n.children.at(1));
        return;
      case SyntaxKind::Assign:
        visit_assign(n);
        return;
      case SyntaxKind::Call:
        visit_call(n, false);
        return;
      case SyntaxKind::FunctionDef:
        visit_function(n);
        return;
      case SyntaxKind::If:
        visit_if(n);
        break;
      case SyntaxKind::For:
        visit_for(n);
        return;
      case SyntaxKind::While: {
        ++r_.loops.while_count;
        if (body_statements(n.children.at(1)).size() == 1) ++r_.loops.while_single_expr_body;
        break;
      }
      case SyntaxKind::Repeat:
        ++r_.loops.repeat_count;
        break;
      default:
        break;
    }
    for (const auto& c : n.children) visit(c);
  }

 private:
  void visit_assign(const SyntaxNode& n) {
    ++r_.assignments.by_operator[n.op];
    r_.assignments.operator_set.insert(n.op);
    const SyntaxNode& target = assign_target(n);
    const SyntaxNode& value = assign_value(n);
    ++r_.assignments.assigned_value_kind[std::string(value_kind_name(classify_assigned_value(value)))];

    std::optional<std::string> name;
    if (target.kind != SyntaxKind::LogicalConst || target.text == "T" || target.text == "F") {
      name = binding_name(target);
    }
    if (name) {
      if (value.kind == SyntaxKind::FunctionDef) {
        ++r_.fun_defs.assigned_defs;
        bump_if_member(r_.fun_defs.hook_defs, kHooks, *name);
        if (is_infix_name(*name)) {
          ++r_.fun_defs.infix_defs;
          r_.fun_defs.infix_names.insert(*name);
        }
        if (is_replacement_name(*name)) ++r_.fun_defs.replacement_defs;
      }
      if (contains(kBaseOperators, *name)) {
        ++r_.fun_defs.operator_redefs;
        r_.fun_defs.operator_redef_names.insert(*name);
      }
    }

    visit(value);
    if (name) return;
    if (target.kind == SyntaxKind::Call) {
      visit_call(target, true);
    } else {
      visit(target);
    }
  }

  void visit_call(const SyntaxNode& n, bool replacement) {
    auto& calls = r_.fun_calls;
    ++calls.total_calls;
    const SyntaxNode& callee = n.children.at(0);
    const SyntaxNode& bare = unwrap_parens(callee);
    if (bare.kind == SyntaxKind::FunctionDef || bare.kind == SyntaxKind::Call) ++calls.anonymous_calls;

    auto name = call_name(n);
    if (!name) {
      ++calls.by_name["<dynamic>"];
      visit(callee);
    } else {
      ++calls.by_name[replacement ? *name + "<-" : *name];
      if (callee.kind == SyntaxKind::NamespaceAccess || callee.kind == SyntaxKind::InternalNamespaceAccess) {
        visit(callee);
      }
      on_named_call(n, *name);
    }
    for (std::size_t i = 1; i < n.children.size(); ++i) visit(n.children[i]);
  }

  void on_named_call(const SyntaxNode& n, const std::string& name) {
    bump_if_member(r_.fun_calls.reflective, kReflective, name);
    bump_if_member(r_.fun_calls.ffi, kFfi, name);
    if (name == "test_that" || name == "context" || name.rfind("expect_", 0) == 0) ++r_.fun_calls.testing;
    bump_if_member(r_.data_access.get_family, kGetFamily, name);
    bump_if_member(r_.assignments.assign_functions, kAssignFunctions, name);
    bump_if_member(r_.assignments.lock_functions, kLockFunctions, name);
    bump_if_member(r_.loops.apply_family, kApplyFamily, name);
    if (name == "ifelse") ++r_.conditionals.ifelse_calls;
    if (name == "switch") ++r_.conditionals.switch_calls;
    if (contains(kLoadFunctions, name)) on_load(n, name);
    if (vectorized_load(n, name, &r_.packages.loaded_names)) ++r_.packages.vectorized_load_pattern;
    if (std::find(options_.forbidden_calls.begin(), options_.forbidden_calls.end(), name) !=
        options_.forbidden_calls.end()) {
      r_.lint.strict_mode_flags.push_back({name, n.span});
    }
  }

  void on_load(const SyntaxNode& n, const std::string& name) {
    ++r_.packages.load_calls[name];
    Args args = split_args(n);
    const SyntaxNode* pkg = args.get("package");
    if (pkg == nullptr && !args.positional.empty()) pkg = args.positional[0];
    // library/require take a bare name unless character.only is set; the
    // namespace functions always evaluate their argument.
    const bool takes_symbol =
        (name == "library" || name == "require") && !is_truthy_flag(args.get("character.only"));
    std::optional<std::string> known;
    if (pkg != nullptr) {
      if (pkg->kind == SyntaxKind::String || pkg->kind == SyntaxKind::RawString) {
        known = unquote(*pkg);
      } else if (takes_symbol && (pkg->kind == SyntaxKind::Symbol || pkg->kind == SyntaxKind::QuotedSymbol)) {
        known = binding_name(*pkg);
      }
    }
    if (known) {
      r_.packages.loaded_names.insert(*known);
    } else {
      ++r_.packages.unknown_name_loads;
    }
  }

  void visit_function(const SyntaxNode& n) {
    ++r_.fun_defs.total_defs;
    if (is_lambda_form(n)) ++r_.fun_defs.lambda_defs;
    for (const auto& p : function_params(n).children) {
      if (p.kind == SyntaxKind::DefaultArg) visit(p.children.at(1));
    }
    visit(function_body(n));
  }

  void visit_if(const SyntaxNode& n) {
    auto& c = r_.conditionals;
    ++(n.children.size() == 3 ? c.if_with_else : c.if_without_else);
    const SyntaxNode& cond = n.children.at(0);
    if (constant_truth(cond)) ++c.constant_condition_count;
    ++c.condition_root_kind[condition_key(cond)];
    for (std::size_t i = 1; i < n.children.size(); ++i) ++c.body_arity[std::string(arity_name(n.children[i]))];
  }

  void visit_for(const SyntaxNode& n) {
    auto& l = r_.loops;
    ++l.for_count;
    if (for_depth_ > 0) ++l.nested_for;
    ++l.for_vector_kind[std::string(vector_kind_name(classify_for_vector(n.children.at(1))))];
    visit(n.children.at(1));
    ++for_depth_;
    visit(n.children.at(2));
    --for_depth_;
  }

  FeatureReport& r_;
  const ExtractOptions& options_;
  int for_depth_ = 0;
};

void fill_variables(const DataflowGraph& graph, FeatureReport& r) {
  std::unordered_set<NodeId> reads;
  for (const auto& e : graph.edges) {
    if (e.type == EdgeType::ReadsFrom) reads.insert(e.from);
  }
  std::set<std::string> defined;
  std::map<std::pair<std::uint32_t, std::string>, Count> operator_defs;
  auto& v = r.variables;
  for (const auto& n : graph.nodes) {
    v.max_scope_depth = std::max<Count>(v.max_scope_depth, n.scope_depth);
    switch (n.role) {
      case DefUseRole::Definition:
        ++v.definitions;
        defined.insert(n.name);
        ++operator_defs[{n.frame, n.name}];
        break;
      case DefUseRole::ParameterDef:
        ++v.parameter_definitions;
        break;
      case DefUseRole::LoopVarDef:
        ++v.loop_variables;
        break;
      case DefUseRole::Use:
        ++v.uses;
        if (reads.count(n.id) == 0) ++v.uses_without_definition;
        break;
      case DefUseRole::FunctionCallSite:
        break;
    }
  }
  v.distinct_defined_names = static_cast<Count>(defined.size());
  r.data_access.plain_symbol_uses = v.uses;
  for (const auto& [key, k] : operator_defs) r.assignments.redefinition_count += k - 1;
  r.assignments.files_redefining = r.assignments.redefinition_count > 0;
}

}  // namespace

std::string_view degenerate_kind_name(DegenerateKind kind) {
  switch (kind) {
    case DegenerateKind::ConstantIfCondition: return "constant-condition";
    case DegenerateKind::ConstantWhileCondition: return "constant-while-condition";
    case DegenerateKind::DegenerateFor: return "degenerate-for";
    case DegenerateKind::DegenerateWhile: return "degenerate-while";
  }
  return "?";
}

std::string_view value_kind_name(ValueKind kind) { return kValueKinds.at(static_cast<std::size_t>(kind)); }

std::string_view vector_kind_name(VectorKind kind) { return kVectorKinds.at(static_cast<std::size_t>(kind)); }

FeatureReport empty_report() {
  FeatureReport r;
  for (AssignOp op : kAllAssignOps) r.assignments.by_operator.emplace(std::string(assign_op_text(op)), 0);
  seed(r.assignments.assigned_value_kind, kValueKinds);
  seed(r.assignments.assign_functions, kAssignFunctions);
  seed(r.assignments.lock_functions, kLockFunctions);
  seed(r.data_access.get_family, kGetFamily);
  seed(r.conditionals.body_arity, kBodyArity);
  seed(r.loops.for_vector_kind, kVectorKinds);
  seed(r.loops.apply_family, kApplyFamily);
  seed(r.fun_defs.hook_defs, kHooks);
  seed(r.fun_calls.reflective, kReflective);
  seed(r.fun_calls.ffi, kFfi);
  seed(r.packages.load_calls, kLoadFunctions);
  seed(r.packages.roxygen_imports, kRoxygenTags);
  seed(r.values.constant_kind, kConstantKinds);
  return r;
}

ValueKind classify_assigned_value(const SyntaxNode& rhs) {
  switch (rhs.kind) {
    case SyntaxKind::Call: {
      const SyntaxNode& callee = unwrap_parens(rhs.children.at(0));
      if (callee.kind == SyntaxKind::FunctionDef || callee.kind == SyntaxKind::Call) return ValueKind::AnonymousCall;
      return callee_name(rhs) ? ValueKind::FunctionCall : ValueKind::Other;
    }
    case SyntaxKind::Number:
    case SyntaxKind::String:
    case SyntaxKind::RawString:
    case SyntaxKind::LogicalConst:
    case SyntaxKind::NullConst:
    case SyntaxKind::NAConst:
    case SyntaxKind::InfConst:
      return ValueKind::Constant;
    case SyntaxKind::Symbol:
    case SyntaxKind::QuotedSymbol:
    case SyntaxKind::Dots:
      return ValueKind::Symbol;
    case SyntaxKind::BinaryOp:
    case SyntaxKind::SpecialInfixOp:
    case SyntaxKind::ColonOp:
      return ValueKind::BinaryOp;
    case SyntaxKind::Tilde:
      return rhs.children.size() == 2 ? ValueKind::BinaryOp : ValueKind::UnaryOp;
    case SyntaxKind::UnaryOp:
      return ValueKind::UnaryOp;
    case SyntaxKind::FunctionDef:
      return ValueKind::FunctionDef;
    case SyntaxKind::IndexBracket:
    case SyntaxKind::IndexDoubleBracket:
    case SyntaxKind::DollarAccess:
    case SyntaxKind::AtAccess:
      return ValueKind::IndexExpr;
    default:
      return ValueKind::Other;
  }
}

VectorKind classify_for_vector(const SyntaxNode& vec) {
  const SyntaxNode& v = unwrap_parens(vec);
  switch (v.kind) {
    case SyntaxKind::ColonOp:
      return VectorKind::ColonRange;
    case SyntaxKind::Symbol:
    case SyntaxKind::QuotedSymbol:
      return VectorKind::SymbolVector;
    case SyntaxKind::Call: {
      auto name = call_name(v);
      if (name == "seq") return VectorKind::SeqCall;
      if (name == "seq_along" || name == "seq_len") return VectorKind::SeqAlongLen;
      if (name == "c") {
        Args args = split_args(v);
        bool literal = args.named.empty() && std::all_of(args.positional.begin(), args.positional.end(),
                                                         [](const SyntaxNode* a) { return is_signed_literal(*a); });
        if (literal) return VectorKind::ConstantVector;
      }
      return VectorKind::OtherCall;
    }
    default:
      return is_signed_literal(v) ? VectorKind::ConstantVector : VectorKind::Other;
  }
}

std::optional<bool> constant_truth(const SyntaxNode& expr) {
  switch (expr.kind) {
    case SyntaxKind::LogicalConst:
      return expr.text == "TRUE" || expr.text == "T";
    case SyntaxKind::Number: {
      std::string digits = expr.text;
      if (!digits.empty() && (digits.back() == 'L' || digits.back() == 'i')) digits.pop_back();
      return std::strtod(digits.c_str(), nullptr) != 0.0;
    }
    case SyntaxKind::InfConst:
      if (expr.text == "Inf") return true;
      return std::nullopt;
    case SyntaxKind::Paren:
      return constant_truth(expr.children.at(0));
    case SyntaxKind::UnaryOp:
      if (expr.op == "!") {
        if (auto inner = constant_truth(expr.children.at(0))) return !*inner;
      }
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

std::vector<DegenerateFinding> detect_degenerate_control(const SyntaxNode& ast) {
  std::vector<DegenerateFinding> out;
  collect_degenerate(ast, out);
  return out;
}

CountMap scan_roxygen_imports(const std::vector<Token>& tokens) {
  CountMap out;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::Comment || t.text.rfind("#'", 0) != 0) continue;
    std::string_view text = t.text;
    for (std::size_t at = text.find('@'); at != std::string_view::npos; at = text.find('@', at + 1)) {
      std::size_t end = at + 1;
      while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) != 0 || text[end] == '_')) {
        ++end;
      }
      std::string tag(text.substr(at, end - at));
      if (contains(kRoxygenTags, tag)) ++out[tag];
    }
  }
  return out;
}

Count detect_vectorized_package_load(const SyntaxNode& ast, std::set<std::string>* known_names) {
  Count count = 0;
  count_vectorized(ast, count, known_names);
  return count;
}

FileMetrics compute_file_metrics(std::string_view source, const std::vector<Token>& tokens) {
  FileMetrics m;
  m.bytes = static_cast<Count>(source.size());
  Count total_chars = 0;
  std::size_t pos = 0;
  while (pos < source.size()) {
    std::size_t nl = source.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? source.size() : nl;
    std::size_t stop = end;
    if (stop > pos && source[stop - 1] == '\r') --stop;
    Count chars = 0;
    for (std::size_t i = pos; i < stop; ++i) {
      if ((static_cast<unsigned char>(source[i]) & 0xC0) != 0x80) ++chars;
    }
    ++m.lines;
    total_chars += chars;
    m.max_line_length = std::max(m.max_line_length, chars);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (m.lines > 0) m.mean_line_length = static_cast<double>(total_chars) / static_cast<double>(m.lines);
  std::set<std::uint32_t> comment_lines;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Comment) comment_lines.insert(t.line);
  }
  m.comment_lines = static_cast<Count>(comment_lines.size());
  return m;
}

FeatureReport extract_features(const SyntaxNode& ast, const DataflowGraph& graph, std::string_view source,
                               const ExtractOptions& options) {
  FeatureReport r = empty_report();
  Extractor(r, options).visit(ast);
  fill_variables(graph, r);

  TokenStream stream = tokenize(source);
  for (const auto& [tag, n] : scan_roxygen_imports(stream.tokens)) r.packages.roxygen_imports[tag] += n;
  r.metadata = compute_file_metrics(source, stream.tokens);
  std::set<std::uint32_t> roxygen_lines;
  for (const auto& t : stream.tokens) {
    if (t.kind == TokenKind::Comment && t.text.rfind("#'", 0) == 0) roxygen_lines.insert(t.line);
  }
  r.comments.comment_lines = r.metadata.comment_lines;
  r.comments.roxygen_lines = static_cast<Count>(roxygen_lines.size());

  for (auto& f : detect_degenerate_control(ast)) {
    switch (f.kind) {
      case DegenerateKind::ConstantIfCondition:
      case DegenerateKind::ConstantWhileCondition:
        r.lint.generalized_constant_conditions.push_back(f.span);
        break;
      case DegenerateKind::DegenerateFor:
        ++r.loops.degenerate_for;
        r.lint.degenerate_loops.push_back(std::move(f));
        break;
      case DegenerateKind::DegenerateWhile:
        ++r.loops.degenerate_while;
        r.lint.degenerate_loops.push_back(std::move(f));
        break;
    }
  }
  for (const auto& op : r.assignments.operator_set) {
    if (contains(kLocalAssignOps, op)) r.lint.mixed_operator_set.insert(op);
  }
  r.lint.mixed_assignment_operators = r.lint.mixed_operator_set.size() >= 2;
  return r;
}

// ---- serialization ----

namespace {

using nlohmann::json;

json span_json(Span s) { return json::array({s.begin, s.end}); }
Span span_from(const json& j) { return Span{j.at(0).get<std::uint32_t>(), j.at(1).get<std::uint32_t>()}; }

std::set<std::string> set_from(const json& j) { return j.get<std::set<std::string>>(); }

}  // namespace

json report_to_json(const FeatureReport& r) {
  json j;
  j["schema_version"] = kFeatureSchemaVersion;
  const auto& a = r.assignments;
  j["assignments"] = {{"by_operator", a.by_operator},
                      {"operator_set", a.operator_set},
                      {"assigned_value_kind", a.assigned_value_kind},
                      {"assign_functions", a.assign_functions},
                      {"lock_functions", a.lock_functions},
                      {"files_redefining", a.files_redefining},
                      {"redefinition_count", a.redefinition_count}};
  const auto& d = r.data_access;
  j["data_access"] = {{"single_bracket", d.single_bracket}, {"double_bracket", d.double_bracket},
                      {"dollar", d.dollar},                 {"at", d.at},
                      {"get_family", d.get_family},         {"plain_symbol_uses", d.plain_symbol_uses}};
  const auto& c = r.conditionals;
  j["conditionals"] = {{"if_without_else", c.if_without_else},
                       {"if_with_else", c.if_with_else},
                       {"constant_condition_count", c.constant_condition_count},
                       {"condition_root_kind", c.condition_root_kind},
                       {"body_arity", c.body_arity},
                       {"ifelse_calls", c.ifelse_calls},
                       {"switch_calls", c.switch_calls}};
  const auto& l = r.loops;
  j["loops"] = {{"for_count", l.for_count},
                {"while_count", l.while_count},
                {"repeat_count", l.repeat_count},
                {"for_vector_kind", l.for_vector_kind},
                {"nested_for", l.nested_for},
                {"degenerate_for", l.degenerate_for},
                {"degenerate_while", l.degenerate_while},
                {"while_single_expr_body", l.while_single_expr_body},
                {"break_count", l.break_count},
                {"next_count", l.next_count},
                {"apply_family", l.apply_family}};
  const auto& f = r.fun_defs;
  j["fun_defs"] = {{"total_defs", f.total_defs},
                   {"assigned_defs", f.assigned_defs},
                   {"lambda_defs", f.lambda_defs},
                   {"hook_defs", f.hook_defs},
                   {"infix_names", f.infix_names},
                   {"infix_defs", f.infix_defs},
                   {"replacement_defs", f.replacement_defs},
                   {"operator_redef_names", f.operator_redef_names},
                   {"operator_redefs", f.operator_redefs}};
  const auto& k = r.fun_calls;
  j["fun_calls"] = {{"total_calls", k.total_calls}, {"by_name", k.by_name}, {"reflective", k.reflective},
                    {"ffi", k.ffi},                 {"testing", k.testing}, {"anonymous_calls", k.anonymous_calls}};
  const auto& p = r.packages;
  j["packages"] = {{"load_calls", p.load_calls},
                   {"loaded_names", p.loaded_names},
                   {"unknown_name_loads", p.unknown_name_loads},
                   {"ns_access", p.ns_access},
                   {"internal_ns_access", p.internal_ns_access},
                   {"ns_packages", p.ns_packages},
                   {"roxygen_imports", p.roxygen_imports},
                   {"vectorized_load_pattern", p.vectorized_load_pattern}};
  j["values"] = {{"constant_kind", r.values.constant_kind}};
  j["comments"] = {{"comment_lines", r.comments.comment_lines}, {"roxygen_lines", r.comments.roxygen_lines}};
  const auto& v = r.variables;
  j["variables"] = {{"definitions", v.definitions},
                    {"parameter_definitions", v.parameter_definitions},
                    {"loop_variables", v.loop_variables},
                    {"uses", v.uses},
                    {"uses_without_definition", v.uses_without_definition},
                    {"distinct_defined_names", v.distinct_defined_names},
                    {"max_scope_depth", v.max_scope_depth}};
  const auto& m = r.metadata;
  j["metadata"] = {{"bytes", m.bytes},
                   {"lines", m.lines},
                   {"max_line_length", m.max_line_length},
                   {"mean_line_length", m.mean_line_length},
                   {"comment_lines", m.comment_lines}};
  json conds = json::array();
  for (Span s : r.lint.generalized_constant_conditions) conds.push_back(span_json(s));
  json loops = json::array();
  for (const auto& g : r.lint.degenerate_loops) {
    loops.push_back({{"kind", degenerate_kind_name(g.kind)}, {"span", span_json(g.span)}, {"detail", g.detail}});
  }
  json flags = json::array();
  for (const auto& s : r.lint.strict_mode_flags) flags.push_back({{"name", s.name}, {"span", span_json(s.span)}});
  j["lint"] = {{"mixed_assignment_operators", r.lint.mixed_assignment_operators},
               {"mixed_operator_set", r.lint.mixed_operator_set},
               {"generalized_constant_conditions", conds},
               {"degenerate_loops", loops},
               {"strict_mode_flags", flags}};
  return j;
}

FeatureReport report_from_json(const json& j) {
  FeatureReport r = empty_report();
  auto merge = [](CountMap& into, const json& from) {
    for (auto& [key, value] : from.items()) into[key] = value.get<Count>();
  };
  const json& a = j.at("assignments");
  merge(r.assignments.by_operator, a.at("by_operator"));
  r.assignments.operator_set = set_from(a.at("operator_set"));
  merge(r.assignments.assigned_value_kind, a.at("assigned_value_kind"));
  merge(r.assignments.assign_functions, a.at("assign_functions"));
  merge(r.assignments.lock_functions, a.at("lock_functions"));
  r.assignments.files_redefining = a.at("files_redefining").get<bool>();
  r.assignments.redefinition_count = a.at("redefinition_count").get<Count>();

  const json& d = j.at("data_access");
  r.data_access.single_bracket = d.at("single_bracket").get<Count>();
  r.data_access.double_bracket = d.at("double_bracket").get<Count>();
  r.data_access.dollar = d.at("dollar").get<Count>();
  r.data_access.at = d.at("at").get<Count>();
  merge(r.data_access.get_family, d.at("get_family"));
  r.data_access.plain_symbol_uses = d.at("plain_symbol_uses").get<Count>();

  const json& c = j.at("conditionals");
  r.conditionals.if_without_else = c.at("if_without_else").get<Count>();
  r.conditionals.if_with_else = c.at("if_with_else").get<Count>();
  r.conditionals.constant_condition_count = c.at("constant_condition_count").get<Count>();
  merge(r.conditionals.condition_root_kind, c.at("condition_root_kind"));
  merge(r.conditionals.body_arity, c.at("body_arity"));
  r.conditionals.ifelse_calls = c.at("ifelse_calls").get<Count>();
  r.conditionals.switch_calls = c.at("switch_calls").get<Count>();

  const json& l = j.at("loops");
  r.loops.for_count = l.at("for_count").get<Count>();
  r.loops.while_count = l.at("while_count").get<Count>();
  r.loops.repeat_count = l.at("repeat_count").get<Count>();
  merge(r.loops.for_vector_kind, l.at("for_vector_kind"));
  r.loops.nested_for = l.at("nested_for").get<Count>();
  r.loops.degenerate_for = l.at("degenerate_for").get<Count>();
  r.loops.degenerate_while = l.at("degenerate_while").get<Count>();
  r.loops.while_single_expr_body = l.at("while_single_expr_body").get<Count>();
  r.loops.break_count = l.at("break_count").get<Count>();
  r.loops.next_count = l.at("next_count").get<Count>();
  merge(r.loops.apply_family, l.at("apply_family"));

  const json& f = j.at("fun_defs");
  r.fun_defs.total_defs = f.at("total_defs").get<Count>();
  r.fun_defs.assigned_defs = f.at("assigned_defs").get<Count>();
  r.fun_defs.lambda_defs = f.at("lambda_defs").get<Count>();
  merge(r.fun_defs.hook_defs, f.at("hook_defs"));
  r.fun_defs.infix_names = set_from(f.at("infix_names"));
  r.fun_defs.infix_defs = f.at("infix_defs").get<Count>();
  r.fun_defs.replacement_defs = f.at("replacement_defs").get<Count>();
  r.fun_defs.operator_redef_names = set_from(f.at("operator_redef_names"));
  r.fun_defs.operator_redefs = f.at("operator_redefs").get<Count>();

  const json& k = j.at("fun_calls");
  r.fun_calls.total_calls = k.at("total_calls").get<Count>();
  merge(r.fun_calls.by_name, k.at("by_name"));
  merge(r.fun_calls.reflective, k.at("reflective"));
  merge(r.fun_calls.ffi, k.at("ffi"));
  r.fun_calls.testing = k.at("testing").get<Count>();
  r.fun_calls.anonymous_calls = k.at("anonymous_calls").get<Count>();

  const json& p = j.at("packages");
  merge(r.packages.load_calls, p.at("load_calls"));
  r.packages.loaded_names = set_from(p.at("loaded_names"));
  r.packages.unknown_name_loads = p.at("unknown_name_loads").get<Count>();
  r.packages.ns_access = p.at("ns_access").get<Count>();
  r.packages.internal_ns_access = p.at("internal_ns_access").get<Count>();
  r.packages.ns_packages = set_from(p.at("ns_packages"));
  merge(r.packages.roxygen_imports, p.at("roxygen_imports"));
  r.packages.vectorized_load_pattern = p.at("vectorized_load_pattern").get<Count>();

  merge(r.values.constant_kind, j.at("values").at("constant_kind"));
  r.comments.comment_lines = j.at("comments").at("comment_lines").get<Count>();
  r.comments.roxygen_lines = j.at("comments").at("roxygen_lines").get<Count>();

  const json& v = j.at("variables");
  r.variables.definitions = v.at("definitions").get<Count>();
  r.variables.parameter_definitions = v.at("parameter_definitions").get<Count>();
  r.variables.loop_variables = v.at("loop_variables").get<Count>();
  r.variables.uses = v.at("uses").get<Count>();
  r.variables.uses_without_definition = v.at("uses_without_definition").get<Count>();
  r.variables.distinct_defined_names = v.at("distinct_defined_names").get<Count>();
  r.variables.max_scope_depth = v.at("max_scope_depth").get<Count>();

  const json& m = j.at("metadata");
  r.metadata.bytes = m.at("bytes").get<Count>();
  r.metadata.lines = m.at("lines").get<Count>();
  r.metadata.max_line_length = m.at("max_line_length").get<Count>();
  r.metadata.mean_line_length = m.at("mean_line_length").get<double>();
  r.metadata.comment_lines = m.at("comment_lines").get<Count>();

  const json& lint = j.at("lint");
  r.lint.mixed_assignment_operators = lint.at("mixed_assignment_operators").get<bool>();
  r.lint.mixed_operator_set = set_from(lint.at("mixed_operator_set"));
  for (const auto& s : lint.at("generalized_constant_conditions")) {
    r.lint.generalized_constant_conditions.push_back(span_from(s));
  }
  for (const auto& g : lint.at("degenerate_loops")) {
    auto name = g.at("kind").get<std::string>();
    DegenerateKind kind = name == "degenerate-for" ? DegenerateKind::DegenerateFor : DegenerateKind::DegenerateWhile;
    r.lint.degenerate_loops.push_back({kind, span_from(g.at("span")), g.at("detail").get<std::string>()});
  }
  for (const auto& s : lint.at("strict_mode_flags")) {
    r.lint.strict_mode_flags.push_back({s.at("name").get<std::string>(), span_from(s.at("span"))});
  }
  return r;
}

std::vector<FlatCounter> flatten_counters(const FeatureReport& r) {
  std::vector<FlatCounter> out;
  using T = FlatCounter::Type;
  auto count = [&](std::string key, Count v) { out.push_back({std::move(key), static_cast<double>(v), T::Count}); };
  auto flag = [&](std::string key, bool v) { out.push_back({std::move(key), v ? 1.0 : 0.0, T::Boolean}); };
  auto map = [&](const std::string& prefix, const CountMap& m) {
    for (const auto& [k, v] : m) count(prefix + "." + k, v);
  };

  const auto& a = r.assignments;
  map("assignments.by_operator", a.by_operator);
  map("assignments.assigned_value_kind", a.assigned_value_kind);
  map("assignments.assign_functions", a.assign_functions);
  map("assignments.lock_functions", a.lock_functions);
  flag("assignments.files_redefining", a.files_redefining);
  count("assignments.redefinition_count", a.redefinition_count);

  const auto& d = r.data_access;
  count("data_access.single_bracket", d.single_bracket);
  count("data_access.double_bracket", d.double_bracket);
  count("data_access.dollar", d.dollar);
  count("data_access.at", d.at);
  map("data_access.get_family", d.get_family);
  count("data_access.plain_symbol_uses", d.plain_symbol_uses);

  const auto& c = r.conditionals;
  count("conditionals.if_without_else", c.if_without_else);
  count("conditionals.if_with_else", c.if_with_else);
  count("conditionals.constant_condition_count", c.constant_condition_count);
  map("conditionals.condition_root_kind", c.condition_root_kind);
  map("conditionals.body_arity", c.body_arity);
  count("conditionals.ifelse_calls", c.ifelse_calls);
  count("conditionals.switch_calls", c.switch_calls);

  const auto& l = r.loops;
  count("loops.for_count", l.for_count);
  count("loops.while_count", l.while_count);
  count("loops.repeat_count", l.repeat_count);
  map("loops.for_vector_kind", l.for_vector_kind);
  count("loops.nested_for", l.nested_for);
  count("loops.degenerate_for", l.degenerate_for);
  count("loops.degenerate_while", l.degenerate_while);
  count("loops.while_single_expr_body", l.while_single_expr_body);
  count("loops.break_count", l.break_count);
  count("loops.next_count", l.next_count);
  map("loops.apply_family", l.apply_family);

  const auto& f = r.fun_defs;
  count("fun_defs.total_defs", f.total_defs);
  count("fun_defs.assigned_defs", f.assigned_defs);
  count("fun_defs.lambda_defs", f.lambda_defs);
  map("fun_defs.hook_defs", f.hook_defs);
  count("fun_defs.infix_defs", f.infix_defs);
  count("fun_defs.replacement_defs", f.replacement_defs);
  count("fun_defs.operator_redefs", f.operator_redefs);

  const auto& k = r.fun_calls;
  count("fun_calls.total_calls", k.total_calls);
  map("fun_calls.reflective", k.reflective);
  map("fun_calls.ffi", k.ffi);
  count("fun_calls.testing", k.testing);
  count("fun_calls.anonymous_calls", k.anonymous_calls);

  const auto& p = r.packages;
  map("packages.load_calls", p.load_calls);
  count("packages.unknown_name_loads", p.unknown_name_loads);
  count("packages.ns_access", p.ns_access);
  count("packages.internal_ns_access", p.internal_ns_access);
  map("packages.roxygen_imports", p.roxygen_imports);
  count("packages.vectorized_load_pattern", p.vectorized_load_pattern);

  map("values.constant_kind", r.values.constant_kind);
  count("comments.comment_lines", r.comments.comment_lines);
  count("comments.roxygen_lines", r.comments.roxygen_lines);

  const auto& v = r.variables;
  count("variables.definitions", v.definitions);
  count("variables.parameter_definitions", v.parameter_definitions);
  count("variables.loop_variables", v.loop_variables);
  count("variables.uses", v.uses);
  count("variables.uses_without_definition", v.uses_without_definition);
  count("variables.distinct_defined_names", v.distinct_defined_names);
  count("variables.max_scope_depth", v.max_scope_depth);

  const auto& m = r.metadata;
  count("metadata.bytes", m.bytes);
  count("metadata.lines", m.lines);
  count("metadata.max_line_length", m.max_line_length);
  out.push_back({"metadata.mean_line_length", m.mean_line_length, T::Real});
  count("metadata.comment_lines", m.comment_lines);

  flag("lint.mixed_assignment_operators", r.lint.mixed_assignment_operators);
  count("lint.generalized_constant_conditions", static_cast<Count>(r.lint.generalized_constant_conditions.size()));
  count("lint.degenerate_loops", static_cast<Count>(r.lint.degenerate_loops.size()));
  count("lint.strict_mode_flags", static_cast<Count>(r.lint.strict_mode_flags.size()));
  return out;
}

}  // namespace ranatomy
