#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranatomy/corpus.hpp"
#include "ranatomy/stats.hpp"

namespace ranatomy {

inline constexpr int kSummarySchemaVersion = 1;

/// Nearest-rank percentile: the ceil(q/100 * n)-th smallest value.
/// Throws std::invalid_argument on an empty sequence or q outside (0, 100].
[[nodiscard]] double percentile(std::vector<double> values, double q);

inline constexpr std::array<double, 10> kSummaryPercentiles{1, 5, 10, 25, 50, 75, 90, 95, 99, 100};

struct CounterSummary {
  double sum = 0.0;
  double mean = 0.0;            // over Ok files
  std::uint64_t files_with = 0;  // Ok files with a non-zero value
  double presence_pct = 0.0;
};

struct CounterTable {
  std::uint64_t ok_files = 0;
  std::map<std::string, CounterSummary> counters;  // keyed like flatten_counters
};

struct RankedName {
  std::string name;
  std::uint64_t files = 0;
  double presence_pct = 0.0;
  std::uint64_t calls = 0;  // functions only
};

struct SummaryTables {
  std::string dataset_label;
  RunTotals funnel;
  std::map<std::string, std::uint64_t> funnel_by_category;  // Ok files per category
  CounterTable totals;
  std::map<std::string, CounterTable> per_category;
  // Operator set ("<-,=") -> number of Ok files using exactly that set.
  std::map<std::string, std::uint64_t> operator_combination_matrix;
  // Files using both operators (diagonal: files using the operator).
  std::map<std::string, std::map<std::string, std::uint64_t>> operator_pair_matrix;
  std::vector<RankedName> top_functions;
  std::vector<RankedName> top_packages;
  // metric -> percentile label ("p50") -> value
  std::map<std::string, std::map<std::string, double>> size_distribution;
};

/// Canonical operator order used in combination keys.
inline constexpr std::array<std::string_view, 6> kOperatorOrder{"<-", "=", "->", "<<-", "->>", ":="};

[[nodiscard]] std::string operator_set_key(const std::set<std::string>& ops);

struct SummaryOptions {
  std::size_t top_n = 100;
};

/// Folds records one at a time; only per-file sizes and name tallies are kept.
class SummaryBuilder {
 public:
  explicit SummaryBuilder(SummaryOptions options = {});
  void set_funnel(std::string dataset_label, RunTotals funnel);
  void add(const FileRecord& record);
  [[nodiscard]] SummaryTables finish() const;

 private:
  struct Accum {
    std::uint64_t ok_files = 0;
    std::map<std::string, std::pair<double, std::uint64_t>> counters;  // sum, files_with
  };
  void fold(Accum& into, const std::vector<FlatCounter>& flat);

  SummaryOptions options_;
  std::string label_;
  RunTotals funnel_;
  bool funnel_set_ = false;
  Accum all_;
  std::map<std::string, Accum> by_category_;
  std::map<std::string, std::uint64_t> combos_;
  std::map<std::string, std::map<std::string, std::uint64_t>> pairs_;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> functions_;  // files, calls
  std::map<std::string, std::uint64_t> packages_;
  std::map<std::string, std::vector<double>> sizes_;
};

[[nodiscard]] SummaryTables summarize(const std::vector<FileRecord>& records, const SummaryOptions& options = {});

/// Streams the records of an extract output directory.
[[nodiscard]] SummaryTables summarize_dir(const std::filesystem::path& out_dir, const SummaryOptions& options = {});

[[nodiscard]] nlohmann::json summary_to_json(const SummaryTables& s);

/// CSV files of a summary, by file name (totals.csv, top_functions.csv, ...).
[[nodiscard]] std::map<std::string, std::string> summary_to_csv(const SummaryTables& s);

enum class Framing : std::uint8_t { Presence, Count };

struct ComparisonRow {
  std::string feature;
  Framing framing = Framing::Presence;
  // Presence: percent of files with the feature. Count: mean per file.
  double a_value = 0.0;
  double b_value = 0.0;
  std::uint64_t a_files = 0;  // Ok files in each dataset
  std::uint64_t b_files = 0;
  std::optional<StatResult> result;  // absent for untestable rows
  std::string note;
};

struct ComparisonReport {
  std::string label_a;
  std::string label_b;
  std::uint64_t k = 0;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> notes;
};

struct CompareOptions {
  std::optional<std::uint64_t> k;  // defaults to the number of testable rows
};

/// Per-file samples of every flattened counter, Ok files only.
struct DatasetSamples {
  std::string label;
  std::uint64_t files = 0;
  std::map<std::string, std::vector<double>> values;  // all vectors have `files` entries
  std::map<std::string, FlatCounter::Type> types;
};

void add_sample(DatasetSamples& samples, const FileRecord& record);
[[nodiscard]] DatasetSamples load_samples(const std::filesystem::path& out_dir);

/// Count features get a presence row (Fisher + phi) and a count row
/// (Mann-Whitney + Cohen's d); booleans only presence; real-valued only
/// count. Rows whose feature is zero everywhere are untestable. Throws
/// std::invalid_argument when either dataset has no Ok files.
[[nodiscard]] ComparisonReport compare(const DatasetSamples& a, const DatasetSamples& b,
                                       const CompareOptions& options = {});

[[nodiscard]] nlohmann::json comparison_to_json(const ComparisonReport& r);
[[nodiscard]] std::string comparison_to_csv(const ComparisonReport& r);

}  // namespace ranatomy
