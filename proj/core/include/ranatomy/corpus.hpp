#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranatomy/features.hpp"
#include "ranatomy/parser.hpp"

namespace ranatomy {

inline constexpr int kRecordSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

enum class FileCategory : std::uint8_t { Default, Example, Test };
inline constexpr std::array<FileCategory, 3> kAllFileCategories{FileCategory::Default, FileCategory::Example,
                                                                FileCategory::Test};
[[nodiscard]] std::string_view file_category_name(FileCategory c);
[[nodiscard]] std::optional<FileCategory> file_category_from_name(std::string_view name);

/// `path` is relative to the scan root (inside an archive: the member path).
/// Example if any segment contains "example"; otherwise Test if a directory
/// segment or the file stem, with the package name cut out, starts with
/// "test". Both matches ignore case.
[[nodiscard]] FileCategory categorize_file(std::string_view path, const std::optional<std::string>& package_name);

[[nodiscard]] bool is_r_file_name(std::string_view name);

struct ManifestEntry {
  // Display path: the root as given joined with the relative path; archive
  // members are "<archive>!<member>".
  std::string path;
  FileCategory category = FileCategory::Default;
  std::uint64_t bytes = 0;
  std::optional<std::string> package_name;
  std::optional<std::string> read_error;
  // Archive members only.
  std::string archive;
  std::string member;
};

struct CorpusManifest {
  std::vector<std::string> roots;
  std::vector<ManifestEntry> files;  // sorted by path, unique
  std::string dataset_label;
};

struct ScanOptions {
  bool archives = false;  // enumerate .tar, .tar.gz, .tgz and .zip members
};

class ScanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ScanError when a root does not exist or cannot be listed.
[[nodiscard]] CorpusManifest scan(const std::vector<std::filesystem::path>& roots, std::string dataset_label,
                                  const ScanOptions& options = {});

enum class FileStatus : std::uint8_t { Ok, ParseFailed, DataflowFailed };
[[nodiscard]] std::string_view file_status_name(FileStatus s);

// Reasons recorded for DataflowFailed.
inline constexpr std::string_view kReasonResourceLimit = "ResourceLimit";
inline constexpr std::string_view kReasonTimeBudget = "TimeBudget";
inline constexpr std::string_view kReasonReadError = "ReadError";
inline constexpr std::string_view kReasonInternalError = "InternalError";

struct StageTimings {
  double parse_ms = 0, dataflow_ms = 0, extract_ms = 0;
};

struct FileRecord {
  std::string path;
  FileCategory category = FileCategory::Default;
  std::uint64_t bytes = 0;
  FileStatus status = FileStatus::Ok;
  std::optional<FailureRecord> parse_failure;  // ParseFailed
  std::string failure_reason;                  // DataflowFailed
  std::string failure_message;                 // DataflowFailed
  std::optional<FeatureReport> report;         // Ok
  StageTimings timings;
};

struct ProcessOptions {
  std::size_t node_cap = 2'000'000;
  std::chrono::milliseconds time_budget{60'000};
  ParseOptions parse;
  ExtractOptions extract;
};

/// Full pipeline over in-memory source. Never throws: every failure becomes
/// a status.
[[nodiscard]] FileRecord process_source(const std::string& path, FileCategory category, std::string_view source,
                                        const ProcessOptions& options = {});

/// Reads the entry (from disk or its archive) and runs process_source.
[[nodiscard]] FileRecord process_file(const ManifestEntry& entry, const ProcessOptions& options = {});

[[nodiscard]] nlohmann::json record_to_json(const FileRecord& record, bool with_timings = false);
[[nodiscard]] FileRecord record_from_json(const nlohmann::json& j);

/// Stable file name stem for a record: 16 hex digits of FNV-1a over the path.
[[nodiscard]] std::string record_key(std::string_view path);

struct RunTotals {
  std::uint64_t manifest_size = 0;
  std::uint64_t ok = 0;
  std::map<std::string, std::uint64_t> parse_failed;     // by FailureCategory name
  std::map<std::string, std::uint64_t> dataflow_failed;  // by reason

  [[nodiscard]] std::uint64_t parse_failed_total() const;
  [[nodiscard]] std::uint64_t dataflow_failed_total() const;
  [[nodiscard]] std::uint64_t processed() const;
};

struct RunOptions {
  std::filesystem::path out_dir;
  unsigned jobs = 1;
  bool resume = false;
  bool record_timings = false;  // timings make records run-dependent
  ProcessOptions process;
  const std::atomic<bool>* cancel = nullptr;
};

struct RunResult {
  RunTotals totals;
  bool complete = true;
  std::uint64_t recomputed = 0;
  std::uint64_t reused = 0;
};

/// Writes <out>/records/<key>.json, <out>/index.json and <out>/failures.csv.
/// Output does not depend on `jobs`. When `cancel` becomes true the run
/// stops early and the index is written with "complete": false.
/// Throws std::filesystem::filesystem_error on output I/O failure.
RunResult run_corpus(const CorpusManifest& manifest, const RunOptions& options);

/// One entry of index.json's file list.
struct IndexEntry {
  std::string path;
  FileCategory category = FileCategory::Default;
  FileStatus status = FileStatus::Ok;
  std::string detail;  // failure category or reason
  std::string record;  // record file name relative to <out>/records
};

struct RunIndex {
  int schema_version = kRecordSchemaVersion;
  std::string tool_version;
  std::string dataset_label;
  bool complete = true;
  RunTotals totals;
  std::vector<IndexEntry> files;
};

/// Throws std::runtime_error when the index is missing or malformed.
[[nodiscard]] RunIndex read_index(const std::filesystem::path& out_dir);

/// Loads the record of an index entry.
[[nodiscard]] FileRecord read_record(const std::filesystem::path& out_dir, const IndexEntry& entry);

}  // namespace ranatomy
