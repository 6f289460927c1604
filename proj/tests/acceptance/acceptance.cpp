// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranatomy/cli.hpp"
#include "ranatomy/corpus.hpp"
#include "ranatomy/dataflow.hpp"
#include "ranatomy/features.hpp"
#include "ranatomy/parser.hpp"
#include "ranatomy/report.hpp"
#include "ranatomy/stats.hpp"
#include "support.hpp"

using namespace ranatomy;
namespace rt = ranatomy::testing;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  enum class Status { Pass, Fail, Skip } status = Status::Pass;
  std::vector<std::string> problems;
  std::string summary;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      status = Status::Fail;
      if (problems.size() < 10) problems.push_back(what);
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int run_cli_checked(Outcome& o, const std::vector<std::string>& args) {
  rt::CliRun r = rt::run_cli(args);
  if (r.status != 0) o.expect(false, "ranatomy " + args.front() + " exited " + std::to_string(r.status) + ": " + r.err);
  return r.status;
}

bool funnel_conserved(const RunTotals& t) {
  return t.ok + t.parse_failed_total() + t.dataflow_failed_total() == t.manifest_size;
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = rt::read_file(e.path());
  }
  return out;
}

void collect_kinds(const SyntaxNode& n, std::set<std::string>& seen) {
  std::string key(syntax_kind_name(n.kind));
  seen.insert(key);
  if (!n.op.empty()) seen.insert(key + " " + n.op);
  for (const auto& c : n.children) collect_kinds(c, seen);
}

Outcome parser_goldens() {
  Outcome o;
  const auto t0 = Clock::now();
  auto inputs = rt::list_files(rt::fixture_dir() / "parser", ".R");
  o.expect(inputs.size() >= 40, "only " + std::to_string(inputs.size()) + " snippets");
  std::set<std::string> seen;
  std::size_t matched = 0;
  for (const auto& in : inputs) {
    const std::string src = rt::read_file(in);
    ParseOutcome p = parse(src);
    if (!p.ok()) {
      o.expect(false, in.filename().string() + " does not parse");
      continue;
    }
    collect_kinds(p.ast(), seen);
    auto golden = fs::path(in).replace_extension(".ast");
    const bool same = fs::exists(golden) && pretty_print(p.ast()) == rt::read_file(golden);
    o.expect(same, in.filename().string() + " differs from its golden");
    if (same) ++matched;
  }
  for (const char* needed : {"Assign <-", "Assign ->", "Assign <<-", "Assign ->>", "Assign =", "Assign :=",
                             "NamespaceAccess", "InternalNamespaceAccess", "DollarAccess", "AtAccess",
                             "IndexBracket", "IndexDoubleBracket", "SpecialInfixOp", "FunctionDef \\", "RawString",
                             "If", "For", "While", "Repeat", "Break", "Next", "QuotedSymbol"}) {
    o.expect(seen.count(needed) == 1, std::string("no snippet covers ") + needed);
  }
  const double secs = seconds_since(t0);
  o.expect(secs < 5.0, "took " + std::to_string(secs) + " s");
  o.summary = std::to_string(matched) + "/" + std::to_string(inputs.size()) + " match, " + std::to_string(secs) + " s";
  return o;
}

Outcome failure_taxonomy() {
  Outcome o;
  const auto dir = rt::fixture_dir() / "failures";
  const std::pair<const char*, FailureCategory> cases[] = {
      {"doc_command.R", FailureCategory::DocumentationCommand},
      {"encoding_confusable.R", FailureCategory::EncodingError},
      {"not_r.R", FailureCategory::NotRCode},
      {"syntax_error.R", FailureCategory::RawSyntaxError},
  };
  for (const auto& [file, want] : cases) {
    ParseOutcome p = parse_and_classify(rt::read_file(dir / file));
    o.expect(!p.ok() && p.failure().category == want,
             std::string(file) + " not classified as " + std::string(failure_category_name(want)));
  }

  // Conservation on several runs, including archives and a capped run that
  // produces dataflow failures.
  rt::TempDir tmp("acc-funnel");
  std::size_t runs = 0;
  auto check_run = [&](const std::vector<fs::path>& roots, bool archives, std::size_t node_cap) {
    CorpusManifest m = scan(roots, "funnel", ScanOptions{archives});
    RunOptions opts;
    opts.out_dir = tmp.path() / std::to_string(runs++);
    opts.jobs = 2;
    opts.process.node_cap = node_cap;
    RunResult r = run_corpus(m, opts);
    o.expect(r.totals.manifest_size == m.files.size(), "manifest size not recorded");
    o.expect(funnel_conserved(r.totals), "funnel not conserved");
    o.expect(funnel_conserved(read_index(opts.out_dir).totals), "index funnel not conserved");
  };
  const auto fx = rt::fixture_dir();
  check_run({dir}, false, 2'000'000);
  check_run({fx / "corpus"}, true, 2'000'000);
  check_run({fx / "census", fx / "dataflow", fx / "parser", dir}, false, 2'000'000);
  check_run({fx / "census", fx / "corpus"}, true, 40);
  o.summary = "4 categories classified, funnel conserved on " + std::to_string(runs) + " runs";
  return o;
}

Outcome census() {
  Outcome o;
  const auto dir = rt::fixture_dir() / "census";
  json golden = json::parse(rt::read_file(dir / "census_golden.json"));
  auto files = rt::list_files(dir, ".R");
  o.expect(files.size() == 20 && golden["files"].size() == 20, "mini-corpus is not 20 files");
  std::vector<FileRecord> records;
  std::size_t counters = 0;
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    FileRecord rec = process_source(name, FileCategory::Default, rt::read_file(path));
    if (rec.status != FileStatus::Ok || !golden["files"].contains(name)) {
      o.expect(false, name + " failed or has no golden");
      continue;
    }
    const json& want = golden["files"][name];
    std::size_t listed = 0;
    for (const auto& c : flatten_counters(*rec.report)) {
      const double expected = want["counters"].value(c.key, 0.0);
      const bool same = c.type == FlatCounter::Type::Real ? std::abs(c.value - expected) <= 1e-12 * std::max(1.0, std::abs(expected))
                                                          : c.value == expected;
      o.expect(same, name + " " + c.key + " = " + std::to_string(c.value) + ", want " + std::to_string(expected));
      if (want["counters"].contains(c.key)) ++listed;
      ++counters;
    }
    o.expect(listed == want["counters"].size(), name + " golden lists an unknown counter");
    json j = report_to_json(*rec.report);
    const json& sets = want["sets"];
    const std::pair<const char*, json> got[] = {
        {"operator_set", j["assignments"]["operator_set"]},   {"loaded_names", j["packages"]["loaded_names"]},
        {"ns_packages", j["packages"]["ns_packages"]},        {"infix_names", j["fun_defs"]["infix_names"]},
        {"operator_redef_names", j["fun_defs"]["operator_redef_names"]},
    };
    for (const auto& [key, value] : got) o.expect(value == sets.value(key, json::array()), name + " " + key);
    records.push_back(std::move(rec));
  }
  std::map<std::string, std::uint64_t> want_combos = golden["operator_combinations"];
  o.expect(summarize(records).operator_combination_matrix == want_combos, "operator combination matrix differs");
  o.summary = std::to_string(records.size()) + " files, " + std::to_string(counters) + " counters compared";
  return o;
}

Outcome dataflow_goldens() {
  Outcome o;
  auto inputs = rt::list_files(rt::fixture_dir() / "dataflow", ".R");
  o.expect(inputs.size() >= 15, "only " + std::to_string(inputs.size()) + " graphs");
  std::size_t matched = 0;
  for (const auto& in : inputs) {
    ParseOutcome p = parse(rt::read_file(in));
    if (!p.ok()) {
      o.expect(false, in.filename().string() + " does not parse");
      continue;
    }
    auto golden = fs::path(in).replace_extension(".df");
    const bool same = fs::exists(golden) && dataflow_to_text(build_dataflow(p.ast())) == rt::read_file(golden);
    o.expect(same, in.filename().string() + " graph differs");
    if (same) ++matched;
  }

  // The stateful closure: <<- in the inner function writes the counter that
  // lives in the enclosing function's frame.
  ParseOutcome p = parse(rt::read_file(rt::fixture_dir() / "dataflow" / "closure_counter.R"));
  if (p.ok()) {
    DataflowGraph g = build_dataflow(p.ast());
    std::vector<const DefUseNode*> defs;
    for (const auto& n : g.nodes) {
      if (n.name == "count" && n.role == DefUseRole::Definition) defs.push_back(&n);
    }
    o.expect(defs.size() == 2 && defs[1]->via == "<<-" && defs[1]->frame == defs[0]->frame && defs[0]->frame != 0,
             "closure counter not attached to the enclosing frame");
  } else {
    o.expect(false, "closure_counter.R does not parse");
  }
  o.summary = std::to_string(matched) + "/" + std::to_string(inputs.size()) + " graphs match";
  return o;
}

double choose(unsigned n, unsigned k) {
  static const auto table = [] {
    std::vector<std::vector<double>> t(25);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i].assign(i + 1, 1.0);
      for (std::size_t j = 1; j < i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
    }
    return t;
  }();
  return k > n ? 0.0 : table[n][k];
}

double fisher_oracle(unsigned a, unsigned b, unsigned c, unsigned d) {
  const unsigned r1 = a + b, r2 = c + d, c1 = a + c, n = r1 + r2;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c1 == n) return 1.0;
  const double total = choose(n, c1);
  const double observed = choose(r1, a) * choose(r2, c) / total;
  double p = 0.0;
  for (unsigned x = 0; x <= std::min(r1, c1); ++x) {
    if (c1 - x > r2) continue;
    const double q = choose(r1, x) * choose(r2, c1 - x) / total;
    if (q <= observed * (1.0 + 1e-7)) p += q;
  }
  return std::min(p, 1.0);
}

Outcome stats_oracle() {
  Outcome o;
  auto close_rel = [](double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); };

  std::size_t tables = 0;
  for (unsigned a = 0; a <= 12; ++a) {
    for (unsigned b = 0; a + b <= 12; ++b) {
      for (unsigned c = 0; a + c <= 12; ++c) {
        for (unsigned d = 0; c + d <= 12 && b + d <= 12; ++d) {
          const double got = fisher_exact_2x2({a, b, c, d});
          o.expect(close_rel(got, fisher_oracle(a, b, c, d), 1e-9), "fisher differs on a table");
          ++tables;
        }
      }
    }
  }

  std::size_t samples = 0;
  for (unsigned n1 = 1; n1 <= 6; ++n1) {
    for (unsigned n2 = 1; n2 <= 6; ++n2) {
      const unsigned n = n1 + n2;
      // Null distribution of U by enumerating every rank assignment.
      std::vector<double> us;
      std::vector<bool> pick(n, false);
      std::fill(pick.begin(), pick.begin() + n1, true);
      do {
        double rank_sum = 0;
        for (unsigned i = 0; i < n; ++i) {
          if (pick[i]) rank_sum += i + 1;
        }
        us.push_back(rank_sum - n1 * (n1 + 1) / 2.0);
      } while (std::prev_permutation(pick.begin(), pick.end()));
      std::fill(pick.begin(), pick.end(), false);
      std::fill(pick.begin(), pick.begin() + n1, true);
      std::size_t idx = 0;
      do {
        std::vector<double> xs, ys;
        for (unsigned i = 0; i < n; ++i) (pick[i] ? xs : ys).push_back(i + 1.25);
        const double u = us[idx++];
        const double lower = static_cast<double>(std::count_if(us.begin(), us.end(), [u](double v) { return v <= u; }));
        const double upper = static_cast<double>(std::count_if(us.begin(), us.end(), [u](double v) { return v >= u; }));
        const double want = std::min(1.0, 2.0 * std::min(lower, upper) / static_cast<double>(us.size()));
        MannWhitneyResult r = mann_whitney(xs, ys);
        o.expect(r.exact && r.u == u && close_rel(r.p_value, want, 1e-12), "mann-whitney differs on a pair");
        ++samples;
      } while (std::prev_permutation(pick.begin(), pick.end()));
    }
  }

  // Reference values recomputed with an independent numeric script.
  const std::pair<ContingencyTable2x2, double> phis[] = {
      {{10, 2, 3, 15}, 0.65908204365730767},
      {{1, 11, 9, 3}, -0.67612340378281326},
      {{120, 30, 45, 80}, 0.44721359549995794},
  };
  for (const auto& [t, want] : phis) {
    auto phi = phi_coefficient(t);
    o.expect(phi && std::abs(*phi - want) <= 1e-12, "phi differs");
  }
  struct DCase {
    std::vector<double> xs, ys;
    double d, lo, hi;
  };
  const DCase ds[] = {
      {{1, 2, 3, 4, 5}, {3, 4, 5, 6, 7, 8}, -1.4301938838683885, -2.7589885844599485, -0.10139918327682840},
      {{2.5, 3.1, 4.7}, {1.0, 1.2, 0.9, 1.4}, 3.1215552994548418, 0.90468004609193126, 5.3384305528177524},
      {{10, 10, 11}, {9, 12, 13, 8}, -0.088665862766488581, -1.5863334385486381, 1.4090017130156609},
  };
  for (const auto& c : ds) {
    CohensD d = cohens_d(c.xs, c.ys);
    o.expect(std::abs(d.d - c.d) <= 1e-12 && std::abs(d.ci_low - c.lo) <= 1e-12 && std::abs(d.ci_high - c.hi) <= 1e-12,
             "cohen's d differs");
  }
  o.expect(effect_word(0.25) == "small", "effect_word(0.25) is " + std::string(effect_word(0.25)));
  o.summary = std::to_string(tables) + " tables, " + std::to_string(samples) + " sample pairs";
  return o;
}

Outcome determinism() {
  Outcome o;
  rt::TempDir tmp("acc-det");
  const auto fx = rt::fixture_dir();
  std::vector<std::string> roots;
  for (const char* sub : {"corpus", "census", "dataflow", "parser", "failures"}) roots.push_back((fx / sub).string());

  std::map<std::string, std::map<std::string, std::string>> outputs;
  for (const char* jobs : {"1", "8"}) {
    const auto out = tmp.path() / (std::string("jobs") + jobs);
    std::vector<std::string> args{"extract"};
    args.insert(args.end(), roots.begin(), roots.end());
    args.insert(args.end(), {"--label", "fixtures", "--out", (out / "run").string(), "--jobs", jobs, "--archives"});
    if (run_cli_checked(o, args) != 0) return o;
    if (run_cli_checked(o, {"summarize", (out / "run").string(), "--out", (out / "tables").string()}) != 0) return o;
    o.expect(funnel_conserved(read_index(out / "run").totals), "funnel not conserved");
    auto& files = outputs[jobs];
    files["index.json"] = rt::read_file(out / "run" / "index.json");
    for (const auto& [name, content] : dir_contents(out / "tables")) files["tables/" + name] = content;
  }
  const auto& a = outputs["1"];
  const auto& b = outputs["8"];
  o.expect(a.size() == b.size(), "different output file sets");
  for (const auto& [name, content] : a) {
    auto it = b.find(name);
    o.expect(it != b.end() && it->second == content, name + " differs between --jobs 1 and --jobs 8");
  }
  o.expect(a.count("tables/summary.json") == 1, "no summary written");
  o.summary = std::to_string(a.size()) + " files byte-identical";
  return o;
}

std::string generated_file(std::size_t i) {
  std::ostringstream s;
  s << "# generated " << i << "\n";
  if (i % 3 == 0) s << "library(stats)\n";
  s << "f" << i << " <- function(x, n = " << i % 7 << ") {\n"
    << "  total <- 0\n"
    << "  for (k in seq_len(n)) total <- total + x[k]\n"
    << "  if (total > " << i << ") warning(\"big\") else total = total * 2\n"
    << "  total\n"
    << "}\n";
  if (i % 5 == 0) s << "cfg <- list(a = 1, b = \"two\")\ncfg$a <- NULL\n";
  if (i % 7 == 0) s << "while (TRUE) break\n";
  if (i % 11 == 0) s << "y <- (\n";  // a few syntax errors
  s << "res <- f" << i << "(c(1, 2, 3))\nprint(res)\n";
  return s.str();
}

Outcome throughput() {
  Outcome o;
  rt::TempDir tmp("acc-throughput");
  constexpr std::size_t kFiles = 1200;
  for (std::size_t i = 0; i < kFiles; ++i) {
    rt::write_file(tmp.path() / "in" / ("d" + std::to_string(i % 20)) / ("f" + std::to_string(i) + ".R"),
                   generated_file(i));
  }
  const auto t0 = Clock::now();
  if (run_cli_checked(o, {"extract", (tmp.path() / "in").string(), "--label", "gen", "--out",
                          (tmp.path() / "out").string(), "--jobs", "4"}) != 0) {
    return o;
  }
  const double secs = seconds_since(t0);
  RunIndex idx = read_index(tmp.path() / "out");
  o.expect(idx.totals.manifest_size == kFiles, "manifest has " + std::to_string(idx.totals.manifest_size) + " files");
  o.expect(funnel_conserved(idx.totals), "funnel not conserved");
  o.expect(idx.totals.ok > 0 && idx.totals.parse_failed_total() > 0, "generated mix not reflected in the funnel");
  o.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  o.summary = std::to_string(kFiles) + " files in " + std::to_string(secs) + " s";
  return o;
}

Outcome smoke() {
  Outcome o;
  const char* root = std::getenv("RANATOMY_SMOKE_CORPUS");
  if (root == nullptr || *root == '\0') {
    o.status = Outcome::Status::Skip;
    o.summary = "RANATOMY_SMOKE_CORPUS not set";
    return o;
  }
  rt::TempDir tmp("acc-smoke");
  if (run_cli_checked(o, {"extract", root, "--label", "smoke", "--out", tmp.path().string(), "--archives"}) != 0) {
    return o;
  }
  RunIndex idx = read_index(tmp.path());
  const auto& t = idx.totals;
  const std::uint64_t crashes = t.dataflow_failed.count(std::string(kReasonInternalError))
                                    ? t.dataflow_failed.at(std::string(kReasonInternalError))
                                    : 0;
  o.expect(idx.complete, "run incomplete");
  o.expect(funnel_conserved(t), "funnel not conserved");
  o.expect(t.manifest_size > 0 && crashes * 100 < t.manifest_size, std::to_string(crashes) + " internal errors");
  std::ostringstream s;
  s << t.manifest_size << " files, ok " << t.ok << ", parse failed " << t.parse_failed_total() << " (";
  bool first = true;
  for (const auto& [cat, n] : t.parse_failed) {
    s << (first ? "" : ", ") << cat << " " << n;
    first = false;
  }
  s << "), dataflow failed " << t.dataflow_failed_total();
  o.summary = s.str();
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"parser-goldens", parser_goldens}, {"failure-taxonomy", failure_taxonomy},
      {"feature-census", census},         {"dataflow-goldens", dataflow_goldens},
      {"stats-oracle", stats_oracle},     {"determinism", determinism},
      {"throughput", throughput},         {"large-corpus-smoke", smoke},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    const char* word = o.status == Outcome::Status::Pass ? "PASS" : o.status == Outcome::Status::Skip ? "SKIP" : "FAIL";
    std::cout << word << " " << name << ": " << o.summary << "\n";
    for (const auto& p : o.problems) std::cout << "    " << p << "\n";
    if (o.status == Outcome::Status::Fail) ++failures;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
