#include "ranatomy/dataflow.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <utility>

#include <nlohmann/json.hpp>

namespace ranatomy {

std::string_view role_name(DefUseRole role) {
  switch (role) {
    case DefUseRole::Definition: return "Definition";
    case DefUseRole::Use: return "Use";
    case DefUseRole::FunctionCallSite: return "FunctionCallSite";
    case DefUseRole::ParameterDef: return "ParameterDef";
    case DefUseRole::LoopVarDef: return "LoopVarDef";
  }
  return "?";
}

std::string_view edge_type_name(EdgeType type) {
  switch (type) {
    case EdgeType::ReadsFrom: return "ReadsFrom";
    case EdgeType::Redefines: return "Redefines";
    case EdgeType::CallsTarget: return "CallsTarget";
  }
  return "?";
}

std::vector<DataflowEdge> DataflowGraph::edges_from(NodeId id, EdgeType type) const {
  std::vector<DataflowEdge> out;
  for (const auto& e : edges) {
    if (e.from == id && e.type == type) out.push_back(e);
  }
  return out;
}

namespace {

using Reaching = std::unordered_map<std::string, std::vector<NodeId>>;

struct Frame {
  std::uint32_t id = 0;
  std::uint32_t depth = 0;
  Reaching reaching;
};

void merge_sorted(std::vector<NodeId>& into, const std::vector<NodeId>& from) {
  std::vector<NodeId> merged;
  merged.reserve(into.size() + from.size());
  std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(merged));
  into = std::move(merged);
}

class Builder {
 public:
  explicit Builder(const DataflowOptions& options) : options_(options) {
    frames_.push_back(Frame{0, 0, {}});
  }

  DataflowGraph run(const SyntaxNode& root) {
    visit(root);
    return std::move(graph_);
  }

 private:
  NodeId add_node(std::string name, DefUseRole role, Span span, const Frame& frame,
                  std::string via = {}, bool binds_function = false) {
    if (graph_.nodes.size() >= options_.node_cap) {
      throw ResourceLimitExceeded("dataflow graph exceeds node cap of " +
                                  std::to_string(options_.node_cap));
    }
    if (options_.deadline && (graph_.nodes.size() & 0xFF) == 0 &&
        std::chrono::steady_clock::now() > *options_.deadline) {
      throw TimeBudgetExceeded("dataflow construction exceeded its time budget");
    }
    DefUseNode n;
    n.id = static_cast<NodeId>(graph_.nodes.size());
    n.name = std::move(name);
    n.role = role;
    n.span = span;
    n.scope_depth = frame.depth;
    n.frame = frame.id;
    n.via = std::move(via);
    n.binds_function = binds_function;
    graph_.nodes.push_back(std::move(n));
    return graph_.nodes.back().id;
  }

  void add_edge(EdgeType type, NodeId from, NodeId to) { graph_.edges.push_back({type, from, to}); }

  // --- environment operations ----------------------------------------------

  void record_use(const std::string& name, Span span) {
    NodeId use = add_node(name, DefUseRole::Use, span, frames_.back());
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
      auto found = it->reaching.find(name);
      if (found == it->reaching.end() || found->second.empty()) continue;
      for (NodeId def : found->second) add_edge(EdgeType::ReadsFrom, use, def);
      return;
    }
  }

  void record_call(const std::string& name, Span span, bool namespaced) {
    NodeId site = add_node(name, DefUseRole::FunctionCallSite, span, frames_.back());
    if (!namespaced) {
      for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
        auto found = it->reaching.find(name);
        if (found == it->reaching.end()) continue;
        std::optional<NodeId> best;
        for (NodeId def : found->second) {
          if (graph_.nodes[def].binds_function) best = def;
        }
        if (best) {
          add_edge(EdgeType::CallsTarget, site, *best);
          return;
        }
      }
    }
    graph_.unresolved_calls.push_back(site);
  }

  void define(const std::string& name, Span span, AssignOp op, bool binds_function) {
    const bool super = op == AssignOp::SuperLeft || op == AssignOp::SuperRight;
    Frame* target = &frames_.front();
    if (!super) {
      target = &frames_.back();
    } else {
      for (std::size_t i = frames_.size() - 1; i-- > 0;) {
        auto found = frames_[i].reaching.find(name);
        if (found != frames_[i].reaching.end() && !found->second.empty()) {
          target = &frames_[i];
          break;
        }
      }
    }
    NodeId def = add_node(name, DefUseRole::Definition, span, *target,
                          std::string(assign_op_text(op)), binds_function);
    const auto index = static_cast<std::uint32_t>(target - frames_.data());
    std::vector<NodeId> reaching = lookup(index, name);
    for (NodeId prev : reaching) {
      DefUseRole r = graph_.nodes[prev].role;
      if (r == DefUseRole::Definition || r == DefUseRole::ParameterDef) {
        add_edge(EdgeType::Redefines, prev, def);
      }
    }
    if (super) {
      reaching.push_back(def);
    } else {
      reaching.assign(1, def);
    }
    store(index, name, std::move(reaching));
  }

  void define_plain(const std::string& name, Span span, DefUseRole role, std::string via) {
    NodeId def = add_node(name, role, span, frames_.back(), std::move(via));
    store(static_cast<std::uint32_t>(frames_.size() - 1), name, {def});
  }

  // --- branches ----------------------------------------------------------------
  // Inside a branch every change to a reaching set is journaled with its old
  // value, so a branch can be undone and joined without copying whole frames.

  using Key = std::pair<std::uint32_t, std::string>;

  struct JournalEntry {
    std::uint32_t frame;
    std::string name;
    std::vector<NodeId> previous;
  };

  std::vector<NodeId> lookup(std::uint32_t frame, const std::string& name) const {
    const auto& r = frames_[frame].reaching;
    auto it = r.find(name);
    return it == r.end() ? std::vector<NodeId>{} : it->second;
  }

  void store(std::uint32_t frame, const std::string& name, std::vector<NodeId> defs) {
    auto& slot = frames_[frame].reaching[name];
    if (open_branches_ > 0) journal_.push_back({frame, name, std::move(slot)});
    slot = std::move(defs);
  }

  std::size_t open_branch() {
    ++open_branches_;
    return journal_.size();
  }

  // Reaching sets as they were when the branch opened, for every entry of a
  // frame below `base` changed since `mark`.
  std::map<Key, std::vector<NodeId>> changed_since(std::size_t mark, std::size_t base) const {
    std::map<Key, std::vector<NodeId>> out;
    for (std::size_t i = mark; i < journal_.size(); ++i) {
      const auto& e = journal_[i];
      if (e.frame < base) out.try_emplace(Key{e.frame, e.name}, e.previous);
    }
    return out;
  }

  void undo_to(std::size_t mark, std::size_t base) {
    for (std::size_t i = journal_.size(); i-- > mark;) {
      auto& e = journal_[i];
      if (e.frame < base) frames_[e.frame].reaching[e.name] = std::move(e.previous);
    }
    journal_.resize(mark);
  }

  void close_branch(std::size_t mark) {
    if (--open_branches_ == 0) journal_.resize(mark);
  }

  void join(const Key& key, const std::vector<NodeId>& other) {
    std::vector<NodeId> defs = lookup(key.first, key.second);
    merge_sorted(defs, other);
    store(key.first, key.second, std::move(defs));
  }

  // A body that may run zero or more times: what reaches afterwards is the
  // union of the state before it and the state after one pass.
  void visit_loop_body(const SyntaxNode& body) {
    const std::size_t base = frames_.size();
    const std::size_t mark = open_branch();
    visit(body);
    auto before = changed_since(mark, base);
    close_branch(mark);
    for (const auto& [key, defs] : before) join(key, defs);
  }

  // --- traversal -------------------------------------------------------------

  void visit_children(const SyntaxNode& node) {
    for (const auto& c : node.children) visit(c);
  }

  void visit_args(const SyntaxNode& node, std::size_t first) {
    for (std::size_t i = first; i < node.children.size(); ++i) visit(node.children[i]);
  }

  void visit(const SyntaxNode& node) {
    switch (node.kind) {
      case SyntaxKind::Symbol:
      case SyntaxKind::QuotedSymbol:
        record_use(*binding_name(node), node.span);
        return;

      case SyntaxKind::Call:
        visit_call(node);
        return;

      case SyntaxKind::NamedArg:
        visit(node.children.at(1));
        return;

      case SyntaxKind::DollarAccess:
      case SyntaxKind::AtAccess:
        visit(node.children.at(0));
        return;

      case SyntaxKind::NamespaceAccess:
      case SyntaxKind::InternalNamespaceAccess:
        return;

      case SyntaxKind::Assign:
        visit_assign(node);
        return;

      case SyntaxKind::FunctionDef:
        visit_function(node);
        return;

      case SyntaxKind::If: {
        visit(node.children.at(0));
        const std::size_t base = frames_.size();
        const std::size_t mark = open_branch();
        visit(node.children.at(1));
        std::map<Key, std::vector<NodeId>> after_then;
        for (const auto& [key, old] : changed_since(mark, base)) after_then.emplace(key, lookup(key.first, key.second));
        undo_to(mark, base);
        if (node.children.size() > 2) visit(node.children.at(2));
        auto before_else = changed_since(mark, base);
        close_branch(mark);
        for (const auto& [key, defs] : after_then) join(key, defs);
        for (const auto& [key, defs] : before_else) {
          if (after_then.count(key) == 0) join(key, defs);
        }
        return;
      }

      case SyntaxKind::For: {
        visit(node.children.at(1));
        const SyntaxNode& var = node.children.at(0);
        define_plain(*binding_name(var), var.span, DefUseRole::LoopVarDef, "for");
        visit_loop_body(node.children.at(2));
        return;
      }

      case SyntaxKind::While: {
        visit(node.children.at(0));
        visit_loop_body(node.children.at(1));
        return;
      }

      default:
        if (!node.is_leaf()) visit_children(node);
        return;
    }
  }

  void visit_call(const SyntaxNode& call) {
    const SyntaxNode& callee = call.children.at(0);
    if (auto name = callee_name(call)) {
      if (name->package.empty()) {
        record_call(name->name, callee.span, false);
      } else {
        record_call(name->package + callee.op + name->name, callee.span, true);
      }
    } else {
      visit(callee);
    }
    visit_args(call, 1);
  }

  void visit_assign(const SyntaxNode& assign) {
    const AssignOp op = assign_op(assign);
    const SyntaxNode& value = assign_value(assign);
    const SyntaxNode& target = assign_target(assign);
    visit(value);

    if (auto name = binding_name(target)) {
      define(*name, target.span, op, value.kind == SyntaxKind::FunctionDef);
      return;
    }
    if (target.kind == SyntaxKind::Call) {
      // f(x) <- v calls the replacement function `f<-`.
      if (auto callee = callee_name(target); callee && callee->package.empty()) {
        record_call(callee->name + "<-", target.children.at(0).span, false);
      } else {
        visit(target.children.at(0));
      }
      visit_args(target, 1);
      return;
    }
    visit(target);
  }

  void visit_function(const SyntaxNode& fn) {
    const std::uint32_t depth = frames_.back().depth + 1;
    frames_.push_back(Frame{++frame_counter_, depth, {}});
    const SyntaxNode& params = function_params(fn);
    for (const auto& p : params.children) {
      const SyntaxNode& name = p.kind == SyntaxKind::DefaultArg ? p.children.at(0) : p;
      std::string text = name.kind == SyntaxKind::Dots ? "..." : *binding_name(name);
      define_plain(text, name.span, DefUseRole::ParameterDef, "param");
    }
    for (const auto& p : params.children) {
      if (p.kind == SyntaxKind::DefaultArg) visit(p.children.at(1));
    }
    visit(function_body(fn));
    frames_.pop_back();
  }

  DataflowOptions options_;
  DataflowGraph graph_;
  std::vector<Frame> frames_;
  std::uint32_t frame_counter_ = 0;
  std::vector<JournalEntry> journal_;
  std::size_t open_branches_ = 0;
};

}  // namespace

DataflowGraph build_dataflow(const SyntaxNode& ast, const DataflowOptions& options) {
  return Builder(options).run(ast);
}

std::vector<Redefinition> redefinitions(const DataflowGraph& graph) {
  struct Group {
    std::vector<Span> spans;
    bool has_definition = false;
  };
  std::map<std::pair<std::uint32_t, std::string>, Group> groups;
  for (const auto& n : graph.nodes) {
    if (n.role != DefUseRole::Definition && n.role != DefUseRole::ParameterDef) continue;
    auto& g = groups[{n.frame, n.name}];
    g.spans.push_back(n.span);
    g.has_definition |= n.role == DefUseRole::Definition;
  }
  std::vector<Redefinition> out;
  for (auto& [key, g] : groups) {
    if (g.spans.size() < 2 || !g.has_definition) continue;
    std::sort(g.spans.begin(), g.spans.end(),
              [](const Span& a, const Span& b) { return a.begin < b.begin; });
    out.push_back(Redefinition{key.second, std::move(g.spans)});
  }
  std::sort(out.begin(), out.end(), [](const Redefinition& a, const Redefinition& b) {
    return a.definitions.front().begin < b.definitions.front().begin;
  });
  return out;
}

std::optional<NodeId> resolve_call_target(const DataflowGraph& graph, NodeId call_site) {
  for (const auto& e : graph.edges) {
    if (e.type == EdgeType::CallsTarget && e.from == call_site) return e.to;
  }
  return std::nullopt;
}

std::string dataflow_to_json(const DataflowGraph& graph) {
  nlohmann::json j;
  j["schema_version"] = 1;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::json jn{{"id", n.id},
                      {"name", n.name},
                      {"role", role_name(n.role)},
                      {"span", {n.span.begin, n.span.end}},
                      {"scope_depth", n.scope_depth},
                      {"frame", n.frame}};
    if (!n.via.empty()) jn["via"] = n.via;
    if (n.role == DefUseRole::Definition) jn["binds_function"] = n.binds_function;
    nodes.push_back(std::move(jn));
  }
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"type", edge_type_name(e.type)}, {"from", e.from}, {"to", e.to}});
  }
  j["unresolved_calls"] = graph.unresolved_calls;
  return j.dump(2) + "\n";
}

std::string dataflow_to_text(const DataflowGraph& graph) {
  std::string out;
  for (const auto& n : graph.nodes) {
    out += "n" + std::to_string(n.id) + " " + std::string(role_name(n.role)) + " " + n.name + " [" +
           std::to_string(n.span.begin) + "," + std::to_string(n.span.end) + ") frame=" +
           std::to_string(n.frame) + " depth=" + std::to_string(n.scope_depth);
    if (!n.via.empty()) out += " via=" + n.via;
    if (n.binds_function) out += " fn";
    out += "\n";
  }
  for (const auto& e : graph.edges) {
    out += "e " + std::string(edge_type_name(e.type)) + " n" + std::to_string(e.from) + " -> n" +
           std::to_string(e.to) + "\n";
  }
  for (NodeId id : graph.unresolved_calls) out += "u n" + std::to_string(id) + "\n";
  return out;
}

}  // namespace ranatomy
