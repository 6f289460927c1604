#include "ranatomy/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <thread>

#include <CLI11.hpp>

#include "ranatomy/corpus.hpp"
#include "ranatomy/dataflow.hpp"
#include "ranatomy/parser.hpp"
#include "ranatomy/report.hpp"

namespace ranatomy {

namespace fs = std::filesystem;

namespace {

// Collects local assignments (<-, =, ->) in source order.
void local_assignments(const SyntaxNode& n, std::vector<const SyntaxNode*>& out) {
  if (n.kind == SyntaxKind::Assign && (n.op == "<-" || n.op == "=" || n.op == "->")) out.push_back(&n);
  for (const auto& c : n.children) local_assignments(c, out);
}

}  // namespace

std::vector<LintDiagnostic> lint_source(std::string_view source, const ExtractOptions& options) {
  std::vector<LintDiagnostic> out;
  LineIndex lines(source);
  auto add = [&](Span span, std::string rule, std::string message) {
    out.push_back({lines.locate(span.begin), span, std::move(rule), std::move(message)});
  };

  ParseOutcome parsed = parse_and_classify(source);
  if (!parsed.ok()) {
    const FailureRecord& f = parsed.failure();
    add(f.first_error_span, "parse-error", std::string(failure_category_name(f.category)) + ": " + f.message);
    return out;
  }
  const SyntaxNode& ast = parsed.ast();
  DataflowGraph graph = build_dataflow(ast);
  FeatureReport report = extract_features(ast, graph, source, options);

  if (report.lint.mixed_assignment_operators) {
    std::vector<const SyntaxNode*> assigns;
    local_assignments(ast, assigns);
    std::sort(assigns.begin(), assigns.end(),
              [](const SyntaxNode* a, const SyntaxNode* b) { return a->span.begin < b->span.begin; });
    std::string ops;
    for (const auto& op : report.lint.mixed_operator_set) ops += (ops.empty() ? "" : ", ") + op;
    for (const SyntaxNode* a : assigns) {
      if (a->op != assigns.front()->op) {
        add(a->span, "mixed-assignment",
            "uses " + a->op + " after " + assigns.front()->op + " (file mixes " + ops + ")");
        break;
      }
    }
  }
  for (Span s : report.lint.generalized_constant_conditions) add(s, "constant-condition", "condition is constant");
  for (const auto& d : report.lint.degenerate_loops) add(d.span, std::string(degenerate_kind_name(d.kind)), d.detail);
  for (const auto& f : report.lint.strict_mode_flags) {
    add(f.span, "forbidden-call", "call to forbidden function " + f.name);
  }
  std::stable_sort(out.begin(), out.end(), [](const LintDiagnostic& a, const LintDiagnostic& b) {
    return a.span.begin < b.span.begin;
  });
  return out;
}

std::string format_diagnostic(std::string_view path, const LintDiagnostic& d) {
  return std::string(path) + ":" + std::to_string(d.position.line) + ":" + std::to_string(d.position.column) +
         ": " + d.rule + ": " + d.message;
}

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.generic_string());
  f << content;
  if (!f) throw IoError("cannot write " + path.generic_string());
}

std::string dump(const nlohmann::json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

unsigned default_jobs() {
  if (const char* env = std::getenv("RANATOMY_JOBS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string percent(std::uint64_t part, std::uint64_t whole) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole));
  return buf;
}

struct ExtractArgs {
  std::vector<std::string> roots;
  std::string label;
  std::string out;
  unsigned jobs = 1;
  bool archives = false;
  bool resume = false;
  bool timings = false;
  std::size_t node_cap = 2'000'000;
  double time_budget = 60.0;
};

int run_extract(const ExtractArgs& a, std::ostream& out) {
  std::vector<fs::path> roots(a.roots.begin(), a.roots.end());
  CorpusManifest manifest = scan(roots, a.label, ScanOptions{a.archives});
  RunOptions opts;
  opts.out_dir = a.out;
  opts.jobs = a.jobs;
  opts.resume = a.resume;
  opts.record_timings = a.timings;
  opts.process.node_cap = a.node_cap;
  opts.process.time_budget = std::chrono::milliseconds(static_cast<long long>(a.time_budget * 1000.0));
  opts.cancel = &g_interrupted;

  g_interrupted.store(false);
  auto previous = std::signal(SIGINT, on_sigint);
  RunResult result;
  try {
    result = run_corpus(manifest, opts);
  } catch (...) {
    std::signal(SIGINT, previous);
    throw;
  }
  std::signal(SIGINT, previous);

  const RunTotals& t = result.totals;
  out << "files: " << t.manifest_size << "\n"
      << "ok: " << t.ok << "\n"
      << "parse failed: " << t.parse_failed_total() << "\n"
      << "dataflow failed: " << t.dataflow_failed_total() << "\n";
  if (a.resume) out << "reused records: " << result.reused << "\n";
  if (!result.complete) out << "run interrupted; index marked incomplete\n";
  return kExitOk;
}

int run_summarize(const std::string& dir, const std::string& out_dir, const std::string& format, std::size_t top,
                  std::ostream& out) {
  SummaryTables s = summarize_dir(dir, SummaryOptions{top});
  fs::create_directories(out_dir);
  if (format == "json" || format == "both") write_file(fs::path(out_dir) / "summary.json", dump(summary_to_json(s)));
  if (format == "csv" || format == "both") {
    for (const auto& [name, content] : summary_to_csv(s)) write_file(fs::path(out_dir) / name, content);
  }
  out << "summarized " << s.totals.ok_files << " ok files of " << s.funnel.manifest_size << "\n";
  return kExitOk;
}

int run_compare(const std::string& dir_a, const std::string& dir_b, const std::string& out_dir,
                std::optional<std::uint64_t> k, const std::string& format, std::ostream& out, std::ostream& err) {
  DatasetSamples a = load_samples(dir_a);
  DatasetSamples b = load_samples(dir_b);
  if (a.files == 0 || b.files == 0) {
    err << "compare: both datasets need at least one successfully processed file\n";
    return kExitUsage;
  }
  ComparisonReport r = compare(a, b, CompareOptions{k});
  fs::create_directories(out_dir);
  if (format == "json" || format == "both") write_file(fs::path(out_dir) / "comparison.json", dump(comparison_to_json(r)));
  if (format == "csv" || format == "both") write_file(fs::path(out_dir) / "comparison.csv", comparison_to_csv(r));
  out << "compared " << a.files << " vs " << b.files << " ok files; " << r.rows.size() << " rows, k = " << r.k << "\n";
  return kExitOk;
}

int run_failures(const std::string& dir, std::ostream& out) {
  RunIndex idx = read_index(dir);
  const RunTotals& t = idx.totals;
  const std::uint64_t n = t.manifest_size;
  out << "dataset: " << idx.dataset_label << (idx.complete ? "" : " (incomplete run)") << "\n";
  out << "files: " << n << "\n";
  out << "ok: " << t.ok << " (" << percent(t.ok, n) << ")\n";
  out << "parse failures: " << t.parse_failed_total() << " (" << percent(t.parse_failed_total(), n) << ")\n";
  for (FailureCategory c : kAllFailureCategories) {
    const std::string name(failure_category_name(c));
    auto it = t.parse_failed.find(name);
    const std::uint64_t v = it == t.parse_failed.end() ? 0 : it->second;
    out << "  " << name << ": " << v << " (" << percent(v, n) << ")\n";
  }
  out << "dataflow failures: " << t.dataflow_failed_total() << " (" << percent(t.dataflow_failed_total(), n) << ")\n";
  for (const auto& [reason, v] : t.dataflow_failed) out << "  " << reason << ": " << v << " (" << percent(v, n) << ")\n";
  return kExitOk;
}

int run_lint(const std::vector<std::string>& files, const std::vector<std::string>& forbid, bool default_forbid,
             std::ostream& out, std::ostream& err) {
  ExtractOptions options;
  if (!default_forbid) options.forbidden_calls = forbid;
  int status = kExitOk;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      err << path << ": cannot read file\n";
      status = kExitIo;
      continue;
    }
    std::string source((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (const auto& d : lint_source(source, options)) out << format_diagnostic(path, d) << "\n";
  }
  return status;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Static census of R source files: extraction, summaries, dataset comparison and lints", "ranatomy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  ExtractArgs ex;
  ex.jobs = default_jobs();
  auto* extract = app.add_subcommand("extract", "Scan corpus roots and write per-file records");
  extract->add_option("roots", ex.roots, "Directories or files to scan")->required();
  extract->add_option("--label", ex.label, "Dataset label")->required();
  extract->add_option("--out", ex.out, "Output directory")->required();
  extract->add_option("--jobs", ex.jobs, "Worker threads (default: $RANATOMY_JOBS or hardware threads)")
      ->check(CLI::PositiveNumber);
  extract->add_flag("--archives", ex.archives, "Also read .tar.gz, .tgz, .tar and .zip archives");
  extract->add_flag("--resume", ex.resume, "Reuse existing records with the current schema version");
  extract->add_flag("--timings", ex.timings, "Store per-stage timings in records");
  extract->add_option("--node-cap", ex.node_cap, "Dataflow node limit per file")->check(CLI::PositiveNumber);
  extract->add_option("--time-budget", ex.time_budget, "Seconds allowed per file")->check(CLI::PositiveNumber);

  std::string sum_dir, sum_out, sum_format = "both";
  std::size_t sum_top = 100;
  auto* summarize_cmd = app.add_subcommand("summarize", "Aggregate an extract directory into tables");
  summarize_cmd->add_option("dir", sum_dir, "Extract output directory")->required();
  summarize_cmd->add_option("--out", sum_out, "Directory for the tables")->required();
  summarize_cmd->add_option("--format", sum_format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  summarize_cmd->add_option("--top", sum_top, "Entries in the ranked tables")->check(CLI::PositiveNumber);

  std::string cmp_a, cmp_b, cmp_out, cmp_format = "both";
  std::optional<std::uint64_t> cmp_k;
  auto* compare_cmd = app.add_subcommand("compare", "Test every feature between two extract directories");
  compare_cmd->add_option("dir_a", cmp_a, "First extract directory")->required();
  compare_cmd->add_option("dir_b", cmp_b, "Second extract directory")->required();
  compare_cmd->add_option("--out", cmp_out, "Directory for the comparison")->required();
  compare_cmd->add_option("--k", cmp_k, "Bonferroni test count (default: number of testable rows)")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--format", cmp_format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));

  std::string fail_dir;
  auto* failures_cmd = app.add_subcommand("failures", "Print the failure breakdown of an extract directory");
  failures_cmd->add_option("dir", fail_dir, "Extract output directory")->required();

  std::vector<std::string> lint_files, lint_forbid;
  auto* lint_cmd = app.add_subcommand("lint", "Report mixed assignments, constant conditions and degenerate loops");
  lint_cmd->add_option("files", lint_files, "R files")->required();
  auto* forbid_opt = lint_cmd->add_option("--forbid", lint_forbid,
                                          "Function to flag as forbidden (repeatable; default eval, evalq, "
                                          "assignInNamespace)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) return run_extract(ex, out);
    if (*summarize_cmd) return run_summarize(sum_dir, sum_out, sum_format, sum_top, out);
    if (*compare_cmd) return run_compare(cmp_a, cmp_b, cmp_out, cmp_k, cmp_format, out, err);
    if (*failures_cmd) return run_failures(fail_dir, out);
    if (*lint_cmd) return run_lint(lint_files, lint_forbid, forbid_opt->count() == 0, out, err);
  } catch (const ScanError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace ranatomy
