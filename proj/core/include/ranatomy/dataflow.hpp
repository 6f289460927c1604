#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranatomy/syntax.hpp"

namespace ranatomy {

using NodeId = std::uint32_t;

enum class DefUseRole : std::uint8_t { Definition, Use, FunctionCallSite, ParameterDef, LoopVarDef };

enum class EdgeType : std::uint8_t { ReadsFrom, Redefines, CallsTarget };

[[nodiscard]] std::string_view role_name(DefUseRole role);
[[nodiscard]] std::string_view edge_type_name(EdgeType type);

struct DefUseNode {
  NodeId id = 0;
  std::string name;
  DefUseRole role = DefUseRole::Use;
  Span span;
  // Number of function frames enclosing the environment the node lives in.
  std::uint32_t scope_depth = 0;
  // Identity of that environment (0 is the file's global frame).
  std::uint32_t frame = 0;
  // Defining construct: the assignment operator, "param" or "for". Empty for
  // uses and call sites.
  std::string via;
  // Definitions only: the assigned value is a function definition.
  bool binds_function = false;
};

struct DataflowEdge {
  EdgeType type;
  NodeId from;
  NodeId to;
  friend bool operator==(const DataflowEdge&, const DataflowEdge&) = default;
};

struct DataflowGraph {
  std::vector<DefUseNode> nodes;  // indexed by id
  std::vector<DataflowEdge> edges;
  std::vector<NodeId> unresolved_calls;

  [[nodiscard]] const DefUseNode& node(NodeId id) const { return nodes.at(id); }
  [[nodiscard]] std::vector<DataflowEdge> edges_from(NodeId id, EdgeType type) const;
};

struct DataflowOptions {
  std::size_t node_cap = 2'000'000;
  // Construction gives up with TimeBudgetExceeded once this passes.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

class ResourceLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Folds the AST once, in evaluation order, with a stack of environments.
///
/// Function definitions open a frame holding their parameters; their body is
/// analysed where the function is defined. Loops are walked once and joined
/// with the state before the loop; the arms of an `if` are joined. A use
/// reads from every definition of the name that may reach it in the nearest
/// frame binding the name. `<<-` and `->>` define in the nearest enclosing
/// frame that already binds the name (the global frame if none does) and add
/// to, rather than replace, that frame's reaching definitions.
///
/// Throws ResourceLimitExceeded past options.node_cap graph nodes and
/// TimeBudgetExceeded past options.deadline.
[[nodiscard]] DataflowGraph build_dataflow(const SyntaxNode& ast, const DataflowOptions& options = {});

struct Redefinition {
  std::string name;
  std::vector<Span> definitions;  // in source order
};

/// Names with two or more Definition/ParameterDef nodes (at least one of them a
/// Definition) in the same frame. Loop variables never count. Ordered by the
/// span of the first definition.
[[nodiscard]] std::vector<Redefinition> redefinitions(const DataflowGraph& graph);

/// Target definition of a call site; nullopt when the name is not bound to a
/// locally defined function (assumed to come from a package or base R).
[[nodiscard]] std::optional<NodeId> resolve_call_target(const DataflowGraph& graph, NodeId call_site);

/// {"schema_version", "nodes": [...], "edges": [...], "unresolved_calls": [...]}
[[nodiscard]] std::string dataflow_to_json(const DataflowGraph& graph);

/// Compact line-per-node/edge dump used by golden tests:
///   n0 Definition x [0,1) frame=0 depth=0 via=<-
///   e Redefines n0 -> n2
[[nodiscard]] std::string dataflow_to_text(const DataflowGraph& graph);

}  // namespace ranatomy
