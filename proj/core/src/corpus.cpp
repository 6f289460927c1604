#include "ranatomy/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "archive.hpp"
#include "ranatomy/csv.hpp"
#include "ranatomy/dataflow.hpp"

namespace ranatomy {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view file_category_name(FileCategory c) {
  switch (c) {
    case FileCategory::Default: return "Default";
    case FileCategory::Example: return "Example";
    case FileCategory::Test: return "Test";
  }
  return "?";
}

std::optional<FileCategory> file_category_from_name(std::string_view name) {
  for (FileCategory c : kAllFileCategories) {
    if (file_category_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view file_status_name(FileStatus s) {
  switch (s) {
    case FileStatus::Ok: return "Ok";
    case FileStatus::ParseFailed: return "ParseFailed";
    case FileStatus::DataflowFailed: return "DataflowFailed";
  }
  return "?";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    std::size_t slash = path.find_first_of("/\\", pos);
    if (slash == std::string_view::npos) slash = path.size();
    if (slash > pos) out.emplace_back(path.substr(pos, slash - pos));
    pos = slash + 1;
  }
  return out;
}

std::string erase_all(std::string s, const std::string& needle) {
  if (needle.empty()) return s;
  for (std::size_t at = s.find(needle); at != std::string::npos; at = s.find(needle)) s.erase(at, needle.size());
  return s;
}

std::string basename_of(const std::string& member) {
  auto parts = split_path(member);
  return parts.empty() ? std::string() : parts.back();
}

std::string dirname_of(const std::string& member) {
  std::size_t slash = member.find_last_of('/');
  return slash == std::string::npos ? std::string() : member.substr(0, slash);
}

std::string archive_stem(const fs::path& archive) {
  std::string name = archive.filename().string();
  for (std::string_view ext : {".tar.gz", ".tgz", ".tar", ".zip"}) {
    if (lower(name).size() > ext.size() && lower(name).compare(name.size() - ext.size(), ext.size(), ext) == 0) {
      return name.substr(0, name.size() - ext.size());
    }
  }
  return name;
}

// Nearest enclosing directory of `rel_dir` (a '/'-separated path relative to
// some base) for which `has_description` holds; falls back to the top-level
// segment.
std::optional<std::string> infer_package(const std::string& rel_file,
                                         const std::function<bool(const std::string&)>& has_description,
                                         const std::optional<std::string>& fallback) {
  std::string dir = dirname_of(rel_file);
  for (;;) {
    if (has_description(dir)) {
      if (dir.empty()) return fallback;
      return basename_of(dir);
    }
    if (dir.empty()) break;
    dir = dirname_of(dir);
  }
  auto parts = split_path(rel_file);
  if (parts.size() > 1) return parts.front();
  return fallback;
}

bool is_description(const std::string& name) { return basename_of(name) == "DESCRIPTION"; }

void scan_archive(const fs::path& archive, const std::string& display, CorpusManifest& out) {
  std::vector<detail::ArchiveMember> members;
  try {
    members = detail::read_archive(archive, [](const std::string& n) {
      return is_r_file_name(basename_of(n)) || is_description(n);
    });
  } catch (const std::exception& e) {
    ManifestEntry bad;
    bad.path = display;
    bad.read_error = e.what();
    bad.archive = archive.string();
    out.files.push_back(std::move(bad));
    return;
  }
  std::set<std::string> description_dirs;
  for (const auto& m : members) {
    if (is_description(m.name)) description_dirs.insert(dirname_of(m.name));
  }
  const std::string stem = archive_stem(archive);
  for (auto& m : members) {
    if (!is_r_file_name(basename_of(m.name))) continue;
    ManifestEntry e;
    e.path = display + "!" + m.name;
    e.bytes = m.data.size();
    e.package_name = infer_package(
        m.name, [&](const std::string& d) { return description_dirs.count(d) > 0; }, stem);
    e.category = categorize_file(m.name, e.package_name);
    e.archive = archive.string();
    e.member = m.name;
    out.files.push_back(std::move(e));
  }
}

void add_plain_file(const fs::path& root, const fs::path& file, CorpusManifest& out) {
  ManifestEntry e;
  e.path = file.lexically_normal().generic_string();
  const std::string rel = file.lexically_relative(root).generic_string();
  std::optional<std::string> fallback;
  if (std::string top = root.filename().string(); !top.empty() && top != "." && top != "..") fallback = top;
  e.package_name = infer_package(
      rel, [&](const std::string& d) { return fs::is_regular_file(root / d / "DESCRIPTION"); }, fallback);
  e.category = categorize_file(rel, e.package_name);
  std::error_code ec;
  e.bytes = fs::file_size(file, ec);
  if (ec) {
    e.bytes = 0;
    e.read_error = ec.message();
  }
  out.files.push_back(std::move(e));
}

std::string read_whole_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.generic_string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("read error on " + path.generic_string());
  return data;
}

double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

FileRecord dataflow_failed(FileRecord rec, std::string_view reason, std::string message) {
  rec.status = FileStatus::DataflowFailed;
  rec.failure_reason = std::string(reason);
  rec.failure_message = std::move(message);
  rec.report.reset();
  return rec;
}

}  // namespace

bool is_r_file_name(std::string_view name) {
  return name.size() > 2 && (name.substr(name.size() - 2) == ".R" || name.substr(name.size() - 2) == ".r");
}

FileCategory categorize_file(std::string_view path, const std::optional<std::string>& package_name) {
  auto segments = split_path(path);
  for (const auto& s : segments) {
    if (lower(s).find("example") != std::string::npos) return FileCategory::Example;
  }
  const std::string pkg = package_name ? lower(*package_name) : std::string();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    std::string s = lower(segments[i]);
    if (i + 1 == segments.size()) {
      std::size_t dot = s.find_last_of('.');
      if (dot != std::string::npos && dot > 0) s.resize(dot);
    }
    if (erase_all(s, pkg).rfind("test", 0) == 0) return FileCategory::Test;
  }
  return FileCategory::Default;
}

CorpusManifest scan(const std::vector<fs::path>& roots, std::string dataset_label, const ScanOptions& options) {
  CorpusManifest out;
  out.dataset_label = std::move(dataset_label);
  for (const auto& root_in : roots) {
    fs::path root = root_in.lexically_normal();
    if (root.filename().empty() && root.has_parent_path()) root = root.parent_path();
    out.roots.push_back(root.generic_string());
    std::error_code ec;
    auto status = fs::status(root, ec);
    if (ec || !fs::exists(status)) throw ScanError("corpus root does not exist: " + root.generic_string());
    if (fs::is_regular_file(status)) {
      const std::string name = root.filename().string();
      if (is_r_file_name(name)) {
        add_plain_file(root.parent_path(), root, out);
      } else if (options.archives && detail::is_archive_name(name)) {
        scan_archive(root, root.generic_string(), out);
      }
      continue;
    }
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) throw ScanError("cannot list corpus root " + root.generic_string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (ec) throw ScanError("cannot list corpus root " + root.generic_string() + ": " + ec.message());
      std::error_code fec;
      if (!it->is_regular_file(fec)) continue;
      const fs::path& p = it->path();
      const std::string name = p.filename().string();
      if (is_r_file_name(name)) {
        add_plain_file(root, p, out);
      } else if (options.archives && detail::is_archive_name(name)) {
        scan_archive(p, p.lexically_normal().generic_string(), out);
      }
    }
  }
  std::sort(out.files.begin(), out.files.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  out.files.erase(std::unique(out.files.begin(), out.files.end(),
                              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path == b.path; }),
                  out.files.end());
  return out;
}

FileRecord process_source(const std::string& path, FileCategory category, std::string_view source,
                          const ProcessOptions& options) {
  FileRecord rec;
  rec.path = path;
  rec.category = category;
  rec.bytes = source.size();
  const auto start = std::chrono::steady_clock::now();
  try {
    ParseOutcome parsed = parse_and_classify(source, options.parse);
    rec.timings.parse_ms = ms_since(start);
    if (!parsed.ok()) {
      const FailureRecord& f = parsed.failure();
      if (f.resource_limit) return dataflow_failed(std::move(rec), kReasonResourceLimit, f.message);
      rec.status = FileStatus::ParseFailed;
      rec.parse_failure = f;
      return rec;
    }
    DataflowOptions dopt;
    dopt.node_cap = options.node_cap;
    dopt.deadline = start + options.time_budget;
    auto t = std::chrono::steady_clock::now();
    DataflowGraph graph = build_dataflow(parsed.ast(), dopt);
    rec.timings.dataflow_ms = ms_since(t);
    t = std::chrono::steady_clock::now();
    rec.report = extract_features(parsed.ast(), graph, source, options.extract);
    rec.timings.extract_ms = ms_since(t);
    rec.status = FileStatus::Ok;
    return rec;
  } catch (const ResourceLimitExceeded& e) {
    return dataflow_failed(std::move(rec), kReasonResourceLimit, e.what());
  } catch (const TimeBudgetExceeded& e) {
    return dataflow_failed(std::move(rec), kReasonTimeBudget, e.what());
  } catch (const std::exception& e) {
    return dataflow_failed(std::move(rec), kReasonInternalError, e.what());
  } catch (...) {
    return dataflow_failed(std::move(rec), kReasonInternalError, "unknown exception");
  }
}

FileRecord process_file(const ManifestEntry& entry, const ProcessOptions& options) {
  std::string source;
  try {
    if (entry.read_error) throw std::runtime_error(*entry.read_error);
    if (!entry.archive.empty()) {
      auto members = detail::read_archive(entry.archive, [&](const std::string& n) { return n == entry.member; });
      if (members.empty()) throw std::runtime_error("member vanished from archive");
      source = std::move(members.front().data);
    } else {
      source = read_whole_file(entry.path);
    }
  } catch (const std::exception& e) {
    FileRecord rec;
    rec.path = entry.path;
    rec.category = entry.category;
    rec.bytes = entry.bytes;
    return dataflow_failed(std::move(rec), kReasonReadError, e.what());
  }
  return process_source(entry.path, entry.category, source, options);
}

json record_to_json(const FileRecord& r, bool with_timings) {
  json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["path"] = r.path;
  j["category"] = file_category_name(r.category);
  j["bytes"] = r.bytes;
  j["status"] = file_status_name(r.status);
  if (r.parse_failure) {
    j["parse_failure"] = {{"category", failure_category_name(r.parse_failure->category)},
                          {"message", r.parse_failure->message},
                          {"span", {r.parse_failure->first_error_span.begin, r.parse_failure->first_error_span.end}}};
  }
  if (r.status == FileStatus::DataflowFailed) {
    j["dataflow_failure"] = {{"reason", r.failure_reason}, {"message", r.failure_message}};
  }
  if (r.report) j["report"] = report_to_json(*r.report);
  if (with_timings) {
    j["timings"] = {{"parse_ms", r.timings.parse_ms},
                    {"dataflow_ms", r.timings.dataflow_ms},
                    {"extract_ms", r.timings.extract_ms}};
  }
  return j;
}

FileRecord record_from_json(const json& j) {
  FileRecord r;
  r.path = j.at("path").get<std::string>();
  r.category = file_category_from_name(j.at("category").get<std::string>()).value_or(FileCategory::Default);
  r.bytes = j.at("bytes").get<std::uint64_t>();
  const auto status = j.at("status").get<std::string>();
  if (status == "Ok") {
    r.status = FileStatus::Ok;
    r.report = report_from_json(j.at("report"));
  } else if (status == "ParseFailed") {
    r.status = FileStatus::ParseFailed;
    const json& f = j.at("parse_failure");
    FailureRecord fr;
    fr.category = failure_category_from_name(f.at("category").get<std::string>())
                      .value_or(FailureCategory::RawSyntaxError);
    fr.message = f.at("message").get<std::string>();
    fr.first_error_span = Span{f.at("span").at(0).get<std::uint32_t>(), f.at("span").at(1).get<std::uint32_t>()};
    r.parse_failure = fr;
  } else if (status == "DataflowFailed") {
    r.status = FileStatus::DataflowFailed;
    r.failure_reason = j.at("dataflow_failure").at("reason").get<std::string>();
    r.failure_message = j.at("dataflow_failure").at("message").get<std::string>();
  } else {
    throw std::runtime_error("unknown record status " + status);
  }
  if (j.contains("timings")) {
    const json& t = j.at("timings");
    r.timings = {t.at("parse_ms").get<double>(), t.at("dataflow_ms").get<double>(), t.at("extract_ms").get<double>()};
  }
  return r;
}

std::string record_key(std::string_view path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : path) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::uint64_t RunTotals::parse_failed_total() const {
  std::uint64_t n = 0;
  for (const auto& [k, v] : parse_failed) n += v;
  return n;
}

std::uint64_t RunTotals::dataflow_failed_total() const {
  std::uint64_t n = 0;
  for (const auto& [k, v] : dataflow_failed) n += v;
  return n;
}

std::uint64_t RunTotals::processed() const { return ok + parse_failed_total() + dataflow_failed_total(); }

namespace {

std::string dump(const json& j) { return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n"; }

void write_atomically(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw fs::filesystem_error("cannot write", tmp, std::make_error_code(std::errc::io_error));
    out << content;
    out.flush();
    if (!out) throw fs::filesystem_error("cannot write", tmp, std::make_error_code(std::errc::io_error));
  }
  fs::rename(tmp, target);
}

IndexEntry index_entry(const FileRecord& r, std::string record_file) {
  IndexEntry e;
  e.path = r.path;
  e.category = r.category;
  e.status = r.status;
  if (r.status == FileStatus::ParseFailed && r.parse_failure) {
    e.detail = std::string(failure_category_name(r.parse_failure->category));
  } else if (r.status == FileStatus::DataflowFailed) {
    e.detail = r.failure_reason;
  }
  e.record = std::move(record_file);
  return e;
}

// Index entry plus the failures.csv message for one file.
struct Slot {
  std::optional<IndexEntry> entry;
  std::string message;
  bool reused = false;
};

json totals_json(const RunTotals& t) {
  return {{"manifest_size", t.manifest_size},
          {"ok", t.ok},
          {"parse_failed", t.parse_failed},
          {"parse_failed_total", t.parse_failed_total()},
          {"dataflow_failed", t.dataflow_failed},
          {"dataflow_failed_total", t.dataflow_failed_total()}};
}

}  // namespace

RunResult run_corpus(const CorpusManifest& manifest, const RunOptions& options) {
  const fs::path records_dir = options.out_dir / "records";
  fs::create_directories(records_dir);

  // Members of one archive are processed together so it is decompressed once.
  std::vector<std::vector<std::size_t>> units;
  std::map<std::string, std::size_t> archive_unit;
  for (std::size_t i = 0; i < manifest.files.size(); ++i) {
    const auto& f = manifest.files[i];
    if (f.archive.empty() || f.read_error) {
      units.push_back({i});
      continue;
    }
    auto [it, fresh] = archive_unit.emplace(f.archive, units.size());
    if (fresh) units.emplace_back();
    units[it->second].push_back(i);
  }

  std::vector<Slot> slots(manifest.files.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto cancelled = [&] { return options.cancel != nullptr && options.cancel->load(); };

  auto finish = [&](std::size_t i, const FileRecord& rec, bool reused) {
    std::string file = record_key(rec.path) + ".json";
    if (!reused) write_atomically(records_dir / file, dump(record_to_json(rec, options.record_timings)));
    Slot& s = slots[i];
    s.entry = index_entry(rec, file);
    s.reused = reused;
    if (rec.status == FileStatus::ParseFailed && rec.parse_failure) {
      s.message = rec.parse_failure->message;
    } else if (rec.status == FileStatus::DataflowFailed) {
      s.message = rec.failure_message;
    }
  };

  auto try_resume = [&](std::size_t i) -> bool {
    if (!options.resume) return false;
    const fs::path p = records_dir / (record_key(manifest.files[i].path) + ".json");
    std::ifstream in(p, std::ios::binary);
    if (!in) return false;
    try {
      json j = json::parse(in);
      if (j.value("schema_version", -1) != kRecordSchemaVersion) return false;
      FileRecord rec = record_from_json(j);
      if (rec.path != manifest.files[i].path) return false;
      finish(i, rec, true);
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };

  auto run_unit = [&](const std::vector<std::size_t>& unit) {
    std::vector<std::size_t> todo;
    for (std::size_t i : unit) {
      if (!try_resume(i)) todo.push_back(i);
    }
    if (todo.empty()) return;
    const ManifestEntry& first = manifest.files[todo.front()];
    if (first.archive.empty() || first.read_error) {
      for (std::size_t i : todo) finish(i, process_file(manifest.files[i], options.process), false);
      return;
    }
    std::map<std::string, std::string> contents;
    std::string archive_error;
    try {
      std::set<std::string> wanted;
      for (std::size_t i : todo) wanted.insert(manifest.files[i].member);
      for (auto& m : detail::read_archive(first.archive, [&](const std::string& n) { return wanted.count(n) > 0; })) {
        contents.emplace(m.name, std::move(m.data));
      }
    } catch (const std::exception& e) {
      archive_error = e.what();
    }
    for (std::size_t i : todo) {
      const ManifestEntry& e = manifest.files[i];
      auto it = contents.find(e.member);
      if (it == contents.end()) {
        FileRecord rec;
        rec.path = e.path;
        rec.category = e.category;
        rec.bytes = e.bytes;
        finish(i, dataflow_failed(std::move(rec), kReasonReadError,
                                  archive_error.empty() ? "member vanished from archive" : archive_error),
               false);
      } else {
        finish(i, process_source(e.path, e.category, it->second, options.process), false);
      }
    }
  };

  auto worker = [&] {
    while (!failed.load() && !cancelled()) {
      std::size_t u = next.fetch_add(1);
      if (u >= units.size()) return;
      try {
        run_unit(units[u]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };

  const unsigned jobs = std::max(1u, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  RunResult result;
  result.totals.manifest_size = manifest.files.size();
  for (FailureCategory c : kAllFailureCategories) result.totals.parse_failed[std::string(failure_category_name(c))] = 0;
  json files = json::array();
  std::string failures_csv = csv_row({"path", "category", "message"});
  for (const Slot& s : slots) {
    if (!s.entry) {
      result.complete = false;
      continue;
    }
    const IndexEntry& e = *s.entry;
    ++(s.reused ? result.reused : result.recomputed);
    switch (e.status) {
      case FileStatus::Ok: ++result.totals.ok; break;
      case FileStatus::ParseFailed: ++result.totals.parse_failed[e.detail]; break;
      case FileStatus::DataflowFailed: ++result.totals.dataflow_failed[e.detail]; break;
    }
    if (e.status != FileStatus::Ok) failures_csv += csv_row({e.path, e.detail, s.message});
    files.push_back({{"path", e.path},
                     {"category", file_category_name(e.category)},
                     {"status", file_status_name(e.status)},
                     {"detail", e.detail},
                     {"record", e.record}});
  }

  json index;
  index["schema_version"] = kRecordSchemaVersion;
  index["tool_version"] = kToolVersion;
  index["dataset_label"] = manifest.dataset_label;
  index["complete"] = result.complete;
  index["roots"] = manifest.roots;
  index["totals"] = totals_json(result.totals);
  index["files"] = std::move(files);
  write_atomically(options.out_dir / "index.json", dump(index));
  write_atomically(options.out_dir / "failures.csv", failures_csv);
  return result;
}

RunIndex read_index(const fs::path& out_dir) {
  std::ifstream in(out_dir / "index.json", std::ios::binary);
  if (!in) throw std::runtime_error("no index.json in " + out_dir.generic_string());
  json j;
  try {
    j = json::parse(in);
    RunIndex idx;
    idx.schema_version = j.at("schema_version").get<int>();
    idx.tool_version = j.at("tool_version").get<std::string>();
    idx.dataset_label = j.at("dataset_label").get<std::string>();
    idx.complete = j.at("complete").get<bool>();
    const json& t = j.at("totals");
    idx.totals.manifest_size = t.at("manifest_size").get<std::uint64_t>();
    idx.totals.ok = t.at("ok").get<std::uint64_t>();
    idx.totals.parse_failed = t.at("parse_failed").get<std::map<std::string, std::uint64_t>>();
    idx.totals.dataflow_failed = t.at("dataflow_failed").get<std::map<std::string, std::uint64_t>>();
    for (const auto& f : j.at("files")) {
      IndexEntry e;
      e.path = f.at("path").get<std::string>();
      e.category = file_category_from_name(f.at("category").get<std::string>()).value_or(FileCategory::Default);
      const auto status = f.at("status").get<std::string>();
      e.status = status == "Ok" ? FileStatus::Ok
                 : status == "ParseFailed" ? FileStatus::ParseFailed
                                           : FileStatus::DataflowFailed;
      e.detail = f.at("detail").get<std::string>();
      e.record = f.at("record").get<std::string>();
      idx.files.push_back(std::move(e));
    }
    return idx;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed index.json in " + out_dir.generic_string() + ": " + e.what());
  }
}

FileRecord read_record(const fs::path& out_dir, const IndexEntry& entry) {
  const fs::path p = out_dir / "records" / entry.record;
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing record " + p.generic_string());
  try {
    return record_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed record " + p.generic_string() + ": " + e.what());
  }
}

}  // namespace ranatomy
