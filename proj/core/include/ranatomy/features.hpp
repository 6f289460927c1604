#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranatomy/dataflow.hpp"
#include "ranatomy/lexer.hpp"
#include "ranatomy/syntax.hpp"

namespace ranatomy {

using Count = std::int64_t;
using CountMap = std::map<std::string, Count>;

inline constexpr int kFeatureSchemaVersion = 1;

struct AssignStats {
  CountMap by_operator;          // <-  ->  <<-  ->>  =  :=
  std::set<std::string> operator_set;
  CountMap assigned_value_kind;  // see ValueKind
  CountMap assign_functions;     // assign, assignInNamespace, setGeneric, ...
  CountMap lock_functions;       // lockEnvironment, lockBinding
  bool files_redefining = false;
  // Operator definitions that follow an earlier operator definition of the
  // same name in the same frame.
  Count redefinition_count = 0;
};

struct AccessStats {
  Count single_bracket = 0;
  Count double_bracket = 0;
  Count dollar = 0;
  Count at = 0;
  CountMap get_family;  // get, mget, get0, exists
  Count plain_symbol_uses = 0;
};

struct CondStats {
  Count if_without_else = 0;
  Count if_with_else = 0;
  Count constant_condition_count = 0;
  CountMap condition_root_kind;  // open key set: "Call", "BinaryOp:==", ...
  CountMap body_arity;           // Empty, Single, Multiple (then and else bodies)
  Count ifelse_calls = 0;
  Count switch_calls = 0;
};

struct LoopStats {
  Count for_count = 0;
  Count while_count = 0;
  Count repeat_count = 0;
  CountMap for_vector_kind;
  Count nested_for = 0;
  Count degenerate_for = 0;
  Count degenerate_while = 0;
  Count while_single_expr_body = 0;
  Count break_count = 0;
  Count next_count = 0;
  CountMap apply_family;
};

struct FunDefStats {
  Count total_defs = 0;
  Count assigned_defs = 0;
  Count lambda_defs = 0;
  CountMap hook_defs;  // .onAttach .onLoad .onUnload .onDetach
  std::set<std::string> infix_names;
  Count infix_defs = 0;
  Count replacement_defs = 0;
  std::set<std::string> operator_redef_names;
  Count operator_redefs = 0;
};

struct CallStats {
  Count total_calls = 0;
  CountMap by_name;  // open key set; "<dynamic>" for computed callees
  CountMap reflective;
  CountMap ffi;
  Count testing = 0;
  Count anonymous_calls = 0;
};

struct PackageStats {
  CountMap load_calls;  // library require requireNamespace loadNamespace attachNamespace
  std::set<std::string> loaded_names;
  Count unknown_name_loads = 0;
  Count ns_access = 0;
  Count internal_ns_access = 0;
  std::set<std::string> ns_packages;  // packages reached through :: or :::
  CountMap roxygen_imports;           // @import @importFrom
  Count vectorized_load_pattern = 0;
};

struct ValueStats {
  CountMap constant_kind;  // Number String RawString Logical Null NA Inf
};

struct CommentStats {
  Count comment_lines = 0;
  Count roxygen_lines = 0;
};

struct VarStats {
  Count definitions = 0;
  Count parameter_definitions = 0;
  Count loop_variables = 0;
  Count uses = 0;
  Count uses_without_definition = 0;
  Count distinct_defined_names = 0;
  Count max_scope_depth = 0;
};

struct FileMetrics {
  Count bytes = 0;
  Count lines = 0;
  Count max_line_length = 0;  // characters, line terminator excluded
  double mean_line_length = 0.0;
  Count comment_lines = 0;
};

// ConstantWhileCondition is only reported for constant-FALSE conditions, together
// with a DegenerateWhile finding for the loop.
enum class DegenerateKind : std::uint8_t { ConstantIfCondition, ConstantWhileCondition, DegenerateFor, DegenerateWhile };

[[nodiscard]] std::string_view degenerate_kind_name(DegenerateKind kind);

struct DegenerateFinding {
  DegenerateKind kind;
  Span span;  // the condition, vector or loop
  std::string detail;
};

struct StrictFlag {
  std::string name;
  Span span;
};

struct LintFindings {
  bool mixed_assignment_operators = false;
  std::set<std::string> mixed_operator_set;
  std::vector<Span> generalized_constant_conditions;
  std::vector<DegenerateFinding> degenerate_loops;
  std::vector<StrictFlag> strict_mode_flags;
};

struct FeatureReport {
  AssignStats assignments;
  AccessStats data_access;
  CondStats conditionals;
  LoopStats loops;
  FunDefStats fun_defs;
  CallStats fun_calls;
  PackageStats packages;
  ValueStats values;
  CommentStats comments;
  VarStats variables;
  FileMetrics metadata;
  LintFindings lint;
};

/// A report with every fixed-key map populated with zeros.
[[nodiscard]] FeatureReport empty_report();

struct ExtractOptions {
  // Calls reported as strict-mode lint flags.
  std::vector<std::string> forbidden_calls{"eval", "evalq", "assignInNamespace"};
};

/// One pass over the AST plus the graph's definitions. Deterministic.
[[nodiscard]] FeatureReport extract_features(const SyntaxNode& ast, const DataflowGraph& graph,
                                             std::string_view source,
                                             const ExtractOptions& options = {});

enum class ValueKind : std::uint8_t {
  FunctionCall,
  Constant,
  Symbol,
  BinaryOp,
  UnaryOp,
  FunctionDef,
  AnonymousCall,
  IndexExpr,
  Other,
};
[[nodiscard]] std::string_view value_kind_name(ValueKind kind);

/// Kind of the root of an assigned value (pass assign_value(), which already
/// accounts for `->` and `->>`).
[[nodiscard]] ValueKind classify_assigned_value(const SyntaxNode& rhs);

enum class VectorKind : std::uint8_t {
  ColonRange,
  SeqCall,
  SeqAlongLen,
  SymbolVector,
  ConstantVector,
  OtherCall,
  Other,
};
[[nodiscard]] std::string_view vector_kind_name(VectorKind kind);

[[nodiscard]] VectorKind classify_for_vector(const SyntaxNode& vec);

/// Truth value of a syntactically constant condition: logical literals,
/// numeric literals (zero is false), parentheses and `!` around those.
[[nodiscard]] std::optional<bool> constant_truth(const SyntaxNode& expr);

/// Constant if-conditions, constant-FALSE while-conditions, and loops that
/// cannot iterate meaningfully, in source order.
[[nodiscard]] std::vector<DegenerateFinding> detect_degenerate_control(const SyntaxNode& ast);

/// Counts @import and @importFrom tags in roxygen (#') comments.
[[nodiscard]] CountMap scan_roxygen_imports(const std::vector<Token>& tokens);

/// Apply-family calls whose function argument is `library` or `require`.
/// Package names found in a literal first argument are added to
/// `known_names` when it is given.
[[nodiscard]] Count detect_vectorized_package_load(const SyntaxNode& ast,
                                                   std::set<std::string>* known_names = nullptr);

[[nodiscard]] FileMetrics compute_file_metrics(std::string_view source, const std::vector<Token>& tokens);

[[nodiscard]] nlohmann::json report_to_json(const FeatureReport& report);
[[nodiscard]] FeatureReport report_from_json(const nlohmann::json& j);

/// Scalar view of every numeric counter, keyed "section.field[.key]". Sets
/// and the open-ended calls.by_name map are left out; booleans become 0/1 and
/// finding lists become their lengths.
struct FlatCounter {
  std::string key;
  double value;
  enum class Type : std::uint8_t { Count, Boolean, Real } type;
};
[[nodiscard]] std::vector<FlatCounter> flatten_counters(const FeatureReport& report);

}  // namespace ranatomy
