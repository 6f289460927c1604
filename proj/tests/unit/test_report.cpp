#include <doctest.h>

#include <cmath>
#include <set>

#include "ranatomy/csv.hpp"
#include "ranatomy/report.hpp"
#include "support.hpp"

using namespace ranatomy;
namespace rt = ranatomy::testing;
namespace fs = std::filesystem;

namespace {

std::vector<FileRecord> census_records() {
  std::vector<FileRecord> out;
  for (const auto& p : rt::list_files(rt::fixture_dir() / "census", ".R")) {
    out.push_back(process_source(p.filename().string(), FileCategory::Default, rt::read_file(p)));
  }
  // A test-category file and a failing one, so categories and the funnel are not trivial.
  out.push_back(process_source("tests/test-a.R", FileCategory::Test, "expect_equal(f(1), 2)\nx = 3\n"));
  out.push_back(process_source("broken.R", FileCategory::Default, "x <- (\n"));
  return out;
}

FileRecord record_of(std::string_view src, FileCategory cat = FileCategory::Default) {
  FileRecord r = process_source("r.R", cat, src);
  REQUIRE(r.status == FileStatus::Ok);
  return r;
}

DatasetSamples samples_of(const std::string& label, const std::vector<std::string>& sources) {
  DatasetSamples s;
  s.label = label;
  for (const auto& src : sources) add_sample(s, record_of(src));
  return s;
}

double parse_number(const std::string& s) { return std::stod(s); }

}  // namespace

TEST_CASE("percentile examples") {
  CHECK(percentile({3, 1, 2}, 50) == 2);
  CHECK(percentile({10}, 99) == 10);
  CHECK(percentile({5}, 50) == 5);
  std::vector<double> hundred;
  for (int i = 1; i <= 100; ++i) hundred.push_back(i);
  CHECK(percentile(hundred, 99) == 99);
  CHECK(percentile({5, 4, 3, 2, 1}, 100) == 5);
  CHECK(percentile({5, 4, 3, 2, 1}, 1) == 1);
  CHECK(percentile({1, 2, 3, 4}, 25) == 1);
  CHECK(percentile({1, 2, 3, 4}, 26) == 2);
  CHECK_THROWS_AS((void)percentile({}, 50), std::invalid_argument);
  CHECK_THROWS_AS((void)percentile({1}, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)percentile({1}, 101), std::invalid_argument);
}

TEST_CASE("operator set keys follow the fixed order") {
  CHECK(operator_set_key({}).empty());
  CHECK(operator_set_key({"=", "<-"}) == "<-,=");
  CHECK(operator_set_key({"->>", "<-", ":="}) == "<-,->>,:=");
}

TEST_CASE("combination matrix is conserved") {
  auto records = census_records();
  SummaryTables s = summarize(records);
  std::uint64_t with_ops = 0, ok = 0;
  std::map<std::string, std::uint64_t> using_op;
  for (const auto& r : records) {
    if (r.status != FileStatus::Ok) continue;
    ++ok;
    const auto& ops = r.report->assignments.operator_set;
    if (!ops.empty()) ++with_ops;
    for (const auto& op : ops) ++using_op[op];
  }
  std::uint64_t combos = 0;
  for (const auto& [key, n] : s.operator_combination_matrix) combos += n;
  CHECK(combos == with_ops);
  CHECK(combos <= s.totals.ok_files);
  CHECK(s.totals.ok_files == ok);
  for (auto op : kOperatorOrder) {
    const std::string o(op);
    CHECK(s.operator_pair_matrix.at(o).at(o) == (using_op.count(o) ? using_op[o] : 0));
    for (auto other : kOperatorOrder) {
      CHECK(s.operator_pair_matrix.at(o).at(std::string(other)) == s.operator_pair_matrix.at(std::string(other)).at(o));
    }
  }
}

TEST_CASE("funnel and per-category tables add up") {
  auto records = census_records();
  SummaryTables s = summarize(records);
  CHECK(s.funnel.manifest_size == records.size());
  CHECK(s.funnel.ok + s.funnel.parse_failed_total() + s.funnel.dataflow_failed_total() == s.funnel.manifest_size);
  CHECK(s.funnel.parse_failed.at("RawSyntaxError") == 1);
  CHECK(s.funnel_by_category.at("Test") == 1);
  std::uint64_t by_cat = 0;
  for (const auto& [cat, n] : s.funnel_by_category) by_cat += n;
  CHECK(by_cat == s.totals.ok_files);
  for (const auto& [key, c] : s.totals.counters) {
    double sum = 0;
    std::uint64_t with = 0;
    for (const auto& [cat, t] : s.per_category) {
      auto it = t.counters.find(key);
      if (it == t.counters.end()) continue;
      sum += it->second.sum;
      with += it->second.files_with;
    }
    CAPTURE(key);
    CHECK(sum == doctest::Approx(c.sum));
    CHECK(with == c.files_with);
    CHECK(c.mean == doctest::Approx(c.sum / static_cast<double>(s.totals.ok_files)));
  }
}

TEST_CASE("csv and json carry the same numbers") {
  SummaryTables s = summarize(census_records());
  auto j = summary_to_json(s);
  auto csv = summary_to_csv(s);
  for (const char* name : {"funnel.csv", "totals.csv", "operator_combinations.csv", "operator_pairs.csv",
                           "top_functions.csv", "top_packages.csv", "size_distribution.csv"}) {
    CHECK(csv.count(name) == 1);
  }

  auto totals = parse_csv(csv.at("totals.csv"));
  std::size_t checked = 0;
  for (std::size_t i = 1; i < totals.size(); ++i) {
    const auto& row = totals[i];
    if (row[1] == "ok_files") continue;
    const auto& table = row[0] == "all" ? j["totals"] : j["per_category"][row[0]];
    const auto& c = table["counters"][row[1]];
    CAPTURE(row[1]);
    CHECK(parse_number(row[2]) == c["sum"].get<double>());
    CHECK(parse_number(row[3]) == c["mean"].get<double>());
    CHECK(parse_number(row[4]) == c["files_with"].get<double>());
    CHECK(parse_number(row[5]) == c["presence_pct"].get<double>());
    ++checked;
  }
  CHECK(checked > 50);

  auto combos = parse_csv(csv.at("operator_combinations.csv"));
  CHECK(combos.size() - 1 == j["operator_combination_matrix"].size());
  for (std::size_t i = 1; i < combos.size(); ++i) {
    CHECK(parse_number(combos[i][1]) == j["operator_combination_matrix"][combos[i][0]].get<double>());
  }

  auto fns = parse_csv(csv.at("top_functions.csv"));
  REQUIRE(fns.size() - 1 == j["top_functions"].size());
  for (std::size_t i = 1; i < fns.size(); ++i) {
    CHECK(fns[i][1] == j["top_functions"][i - 1]["name"]);
    CHECK(parse_number(fns[i][4]) == j["top_functions"][i - 1]["calls"].get<double>());
  }

  auto sizes = parse_csv(csv.at("size_distribution.csv"));
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    CHECK(parse_number(sizes[i][2]) == j["size_distribution"][sizes[i][0]][sizes[i][1]].get<double>());
  }
}

TEST_CASE("summarize examples") {
  SummaryTables two = summarize({record_of("x <- 1\n"), record_of("x <- 1\ny = 2\n")});
  CHECK(two.operator_combination_matrix == std::map<std::string, std::uint64_t>{{"<-", 1}, {"<-,=", 1}});

  SummaryTables empty_file = summarize({record_of("")});
  CHECK(empty_file.totals.ok_files == 1);
  for (const auto& [key, c] : empty_file.totals.counters) {
    CAPTURE(key);
    CHECK(c.sum == 0.0);
  }
  CHECK(empty_file.size_distribution.at("lines").at("p50") == 0);

  SummaryTables none = summarize({});
  CHECK(none.totals.ok_files == 0);
  CHECK(none.funnel.manifest_size == 0);
  CHECK(none.operator_combination_matrix.empty());
  CHECK(none.top_functions.empty());
  CHECK_NOTHROW((void)summary_to_csv(none));
}

TEST_CASE("top-N ties break by name") {
  std::vector<FileRecord> records{record_of("b(); b()\n"), record_of("a(); a()\n"), record_of("c()\nlibrary(zz)\n"),
                                  record_of("library(yy)\n")};
  SummaryOptions opts;
  opts.top_n = 2;
  SummaryTables s = summarize(records, opts);
  REQUIRE(s.top_functions.size() == 2);
  CHECK(s.top_functions[0].name == "a");
  CHECK(s.top_functions[1].name == "b");
  CHECK(s.top_functions[0].calls == 2);
  CHECK(s.top_functions[0].files == 1);
  CHECK(s.top_functions[0].presence_pct == doctest::Approx(25.0));
  REQUIRE(s.top_packages.size() == 2);
  CHECK(s.top_packages[0].name == "yy");
  CHECK(s.top_packages[1].name == "zz");
}

TEST_CASE("size distribution uses nearest rank") {
  std::vector<FileRecord> records{record_of("x\n"), record_of("x\ny\n"), record_of("x\ny\nz\n")};
  SummaryTables s = summarize(records);
  CHECK(s.size_distribution.at("lines").at("p50") == 2);
  CHECK(s.size_distribution.at("lines").at("p100") == 3);
  CHECK(s.size_distribution.at("lines").at("p1") == 1);
}

TEST_CASE("summarize_dir streams the same tables as summarize") {
  rt::TempDir tmp("sumdir");
  CorpusManifest m = scan({rt::fixture_dir() / "census", rt::fixture_dir() / "failures"}, "census");
  RunOptions opts;
  opts.out_dir = tmp.path();
  (void)run_corpus(m, opts);
  std::vector<FileRecord> records;
  for (const auto& e : m.files) records.push_back(process_file(e));
  SummaryBuilder b;
  b.set_funnel("census", read_index(tmp.path()).totals);
  for (const auto& r : records) b.add(r);
  CHECK(summary_to_json(summarize_dir(tmp.path())) == summary_to_json(b.finish()));
}

TEST_CASE("compare rows and k") {
  DatasetSamples a = samples_of("a", {"x <- 1\n", "y <- 2\nz <- 3\n", "f(1)\n", "w <- 4\n"});
  DatasetSamples b = samples_of("b", {"x = 1\n", "y = 2\n", "g(1)\n"});
  CHECK(a.files == 4);
  CHECK(b.files == 3);
  for (const auto& [key, v] : a.values) CHECK(v.size() == a.files);

  ComparisonReport r = compare(a, b);
  std::uint64_t testable = 0;
  std::set<std::pair<std::string, Framing>> seen;
  for (const auto& row : r.rows) {
    CHECK(seen.insert({row.feature, row.framing}).second);
    if (row.result) {
      ++testable;
      CHECK(row.result->k == r.k);
      CHECK(row.result->p_adjusted == doctest::Approx(std::min(1.0, row.result->p_value * r.k)));
    } else {
      CHECK(row.note.rfind("untestable", 0) == 0);
    }
  }
  CHECK(r.k == testable);
  CHECK(r.notes.size() == r.rows.size() - testable);

  const ComparisonRow* arrow = nullptr;
  for (const auto& row : r.rows) {
    if (row.feature == "assignments.by_operator.<-" && row.framing == Framing::Presence) arrow = &row;
  }
  REQUIRE(arrow);
  CHECK(arrow->a_value == doctest::Approx(75.0));
  CHECK(arrow->b_value == 0.0);
  REQUIRE(arrow->result);
  CHECK(arrow->result->test == TestKind::FisherExact);
  CHECK(arrow->result->p_value == doctest::Approx(fisher_exact_2x2({3, 1, 0, 3})));

  CompareOptions fixed;
  fixed.k = 7;
  CHECK(compare(a, b, fixed).k == 7);

  CHECK_THROWS_AS((void)compare(a, DatasetSamples{}), std::invalid_argument);
}

TEST_CASE("compare examples") {
  DatasetSamples loops = samples_of("a", {"for (i in x) f(i)\n", "for (j in y) g(j)\n"});
  DatasetSamples flat = samples_of("b", {"f(1)\n", "g(2)\n"});
  ComparisonReport r = compare(loops, flat);
  const ComparisonRow* row = nullptr;
  for (const auto& x : r.rows) {
    if (x.feature == "loops.for_count" && x.framing == Framing::Presence) row = &x;
  }
  REQUIRE(row);
  REQUIRE(row->result);
  // Margins (2,2|2,2): probabilities 1/6, 4/6, 1/6.
  CHECK(row->result->p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(*std::get<std::optional<double>>(row->result->effect) == doctest::Approx(1.0));

  DatasetSamples mixed = samples_of("m", {"x <- 1\n", "for (i in 1:3) y = i\n", "library(stats)\nif (a) b()\n"});
  ComparisonReport same = compare(mixed, mixed);
  std::size_t fisher_rows = 0;
  for (const auto& x : same.rows) {
    if (!x.result || x.framing != Framing::Presence) continue;
    CAPTURE(x.feature);
    CHECK(x.result->p_value == 1.0);
    CHECK(x.result->p_adjusted == 1.0);
    ++fisher_rows;
  }
  CHECK(fisher_rows > 5);
}

TEST_CASE("comparison csv and json agree") {
  DatasetSamples a = samples_of("a", {"x <- 1\nif (x > 0) y <- 2\n", "library(stats)\nz <- 3\n", "f <- function() 1\n"});
  DatasetSamples b = samples_of("b", {"x = 1\n", "for (i in 1:3) print(i)\n", "q <- 2\n"});
  ComparisonReport r = compare(a, b);
  auto j = comparison_to_json(r);
  auto rows = parse_csv(comparison_to_csv(r));
  REQUIRE(rows.size() - 1 == j["rows"].size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& jr = j["rows"][i - 1];
    CHECK(rows[i][0] == jr["feature"]);
    CHECK(rows[i][1] == jr["framing"]);
    CHECK(parse_number(rows[i][2]) == jr["a_value"].get<double>());
    if (jr.contains("p_value") && !jr["p_value"].is_null()) {
      CHECK(parse_number(rows[i][7]) == jr["p_value"].get<double>());
      CHECK(parse_number(rows[i][8]) == jr["p_adjusted"].get<double>());
    } else {
      CHECK(rows[i][7].empty());
    }
  }
}
