#include "ranatomy/report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ranatomy/csv.hpp"

namespace ranatomy {

using nlohmann::json;

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sequence");
  if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("percentile rank must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::string operator_set_key(const std::set<std::string>& ops) {
  std::string key;
  for (auto op : kOperatorOrder) {
    if (ops.count(std::string(op)) == 0) continue;
    if (!key.empty()) key += ",";
    key += op;
  }
  // Anything outside the fixed order goes last, sorted.
  for (const auto& op : ops) {
    if (std::find(kOperatorOrder.begin(), kOperatorOrder.end(), op) != kOperatorOrder.end()) continue;
    if (!key.empty()) key += ",";
    key += op;
  }
  return key;
}

namespace {

std::string percentile_label(double q) {
  return "p" + std::to_string(static_cast<int>(q));
}

double pct(std::uint64_t part, std::uint64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

template <typename Less>
std::vector<RankedName> rank(std::vector<RankedName> items, std::size_t top_n, Less less) {
  std::sort(items.begin(), items.end(), less);
  if (items.size() > top_n) items.resize(top_n);
  return items;
}

}  // namespace

SummaryBuilder::SummaryBuilder(SummaryOptions options) : options_(options) {
  for (FileCategory c : kAllFileCategories) by_category_[std::string(file_category_name(c))];
  for (auto a : kOperatorOrder) {
    for (auto b : kOperatorOrder) pairs_[std::string(a)][std::string(b)] = 0;
  }
}

void SummaryBuilder::set_funnel(std::string dataset_label, RunTotals funnel) {
  label_ = std::move(dataset_label);
  funnel_ = std::move(funnel);
  funnel_set_ = true;
}

void SummaryBuilder::fold(Accum& into, const std::vector<FlatCounter>& flat) {
  ++into.ok_files;
  for (const auto& c : flat) {
    auto& [sum, with] = into.counters[c.key];
    sum += c.value;
    if (c.value != 0.0) ++with;
  }
}

void SummaryBuilder::add(const FileRecord& record) {
  if (!funnel_set_) {
    ++funnel_.manifest_size;
    switch (record.status) {
      case FileStatus::Ok: ++funnel_.ok; break;
      case FileStatus::ParseFailed:
        ++funnel_.parse_failed[std::string(failure_category_name(record.parse_failure->category))];
        break;
      case FileStatus::DataflowFailed: ++funnel_.dataflow_failed[record.failure_reason]; break;
    }
  }
  if (record.status != FileStatus::Ok || !record.report) return;
  const FeatureReport& r = *record.report;
  const auto flat = flatten_counters(r);
  fold(all_, flat);
  fold(by_category_[std::string(file_category_name(record.category))], flat);

  const auto& ops = r.assignments.operator_set;
  if (!ops.empty()) ++combos_[operator_set_key(ops)];
  for (const auto& a : ops) {
    for (const auto& b : ops) ++pairs_[a][b];
  }

  for (const auto& [name, calls] : r.fun_calls.by_name) {
    if (name == "<dynamic>" || calls == 0) continue;
    auto& [files, total] = functions_[name];
    ++files;
    total += static_cast<std::uint64_t>(calls);
  }
  std::set<std::string> packages = r.packages.loaded_names;
  packages.insert(r.packages.ns_packages.begin(), r.packages.ns_packages.end());
  for (const auto& p : packages) ++packages_[p];

  const auto& m = r.metadata;
  sizes_["bytes"].push_back(static_cast<double>(m.bytes));
  sizes_["lines"].push_back(static_cast<double>(m.lines));
  sizes_["max_line_length"].push_back(static_cast<double>(m.max_line_length));
  sizes_["mean_line_length"].push_back(m.mean_line_length);
}

SummaryTables SummaryBuilder::finish() const {
  SummaryTables s;
  s.dataset_label = label_;
  s.funnel = funnel_;
  for (FailureCategory c : kAllFailureCategories) s.funnel.parse_failed.emplace(std::string(failure_category_name(c)), 0);

  auto table = [](const Accum& a) {
    CounterTable t;
    t.ok_files = a.ok_files;
    for (const auto& [key, v] : a.counters) {
      CounterSummary c;
      c.sum = v.first;
      c.mean = a.ok_files == 0 ? 0.0 : v.first / static_cast<double>(a.ok_files);
      c.files_with = v.second;
      c.presence_pct = pct(v.second, a.ok_files);
      t.counters.emplace(key, c);
    }
    return t;
  };
  s.totals = table(all_);
  for (const auto& [cat, acc] : by_category_) {
    s.per_category.emplace(cat, table(acc));
    s.funnel_by_category[cat] = acc.ok_files;
  }
  s.operator_combination_matrix = combos_;
  s.operator_pair_matrix = pairs_;

  std::vector<RankedName> fns;
  for (const auto& [name, v] : functions_) fns.push_back({name, v.first, pct(v.first, all_.ok_files), v.second});
  s.top_functions = rank(std::move(fns), options_.top_n, [](const RankedName& a, const RankedName& b) {
    if (a.calls != b.calls) return a.calls > b.calls;
    return a.name < b.name;
  });
  std::vector<RankedName> pkgs;
  for (const auto& [name, files] : packages_) pkgs.push_back({name, files, pct(files, all_.ok_files), 0});
  s.top_packages = rank(std::move(pkgs), options_.top_n, [](const RankedName& a, const RankedName& b) {
    if (a.files != b.files) return a.files > b.files;
    return a.name < b.name;
  });

  for (const auto& [metric, values] : sizes_) {
    for (double q : kSummaryPercentiles) s.size_distribution[metric][percentile_label(q)] = percentile(values, q);
  }
  return s;
}

SummaryTables summarize(const std::vector<FileRecord>& records, const SummaryOptions& options) {
  SummaryBuilder b(options);
  for (const auto& r : records) b.add(r);
  return b.finish();
}

SummaryTables summarize_dir(const std::filesystem::path& out_dir, const SummaryOptions& options) {
  RunIndex idx = read_index(out_dir);
  SummaryBuilder b(options);
  b.set_funnel(idx.dataset_label, idx.totals);
  for (const auto& e : idx.files) {
    if (e.status != FileStatus::Ok) continue;
    b.add(read_record(out_dir, e));
  }
  return b.finish();
}

namespace {

json funnel_json(const RunTotals& t) {
  return {{"manifest_size", t.manifest_size},
          {"ok", t.ok},
          {"parse_failed", t.parse_failed},
          {"parse_failed_total", t.parse_failed_total()},
          {"dataflow_failed", t.dataflow_failed},
          {"dataflow_failed_total", t.dataflow_failed_total()}};
}

json table_json(const CounterTable& t) {
  json counters = json::object();
  for (const auto& [key, c] : t.counters) {
    counters[key] = {{"sum", c.sum}, {"mean", c.mean}, {"files_with", c.files_with}, {"presence_pct", c.presence_pct}};
  }
  return {{"ok_files", t.ok_files}, {"counters", counters}};
}

json ranked_json(const std::vector<RankedName>& items, bool with_calls) {
  json out = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    json row = {{"rank", i + 1}, {"name", items[i].name}, {"files", items[i].files},
                {"presence_pct", items[i].presence_pct}};
    if (with_calls) row["calls"] = items[i].calls;
    out.push_back(std::move(row));
  }
  return out;
}

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

}  // namespace

json summary_to_json(const SummaryTables& s) {
  json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["dataset_label"] = s.dataset_label;
  j["funnel"] = funnel_json(s.funnel);
  j["ok_files_by_category"] = s.funnel_by_category;
  j["totals"] = table_json(s.totals);
  json per = json::object();
  for (const auto& [cat, t] : s.per_category) per[cat] = table_json(t);
  j["per_category"] = per;
  j["operator_combination_matrix"] = s.operator_combination_matrix;
  j["operator_pair_matrix"] = s.operator_pair_matrix;
  j["top_functions"] = ranked_json(s.top_functions, true);
  j["top_packages"] = ranked_json(s.top_packages, false);
  j["size_distribution"] = s.size_distribution;
  return j;
}

std::map<std::string, std::string> summary_to_csv(const SummaryTables& s) {
  std::map<std::string, std::string> out;

  std::string funnel = csv_row({"stage", "category", "count"});
  funnel += csv_row({"manifest", "", num(s.funnel.manifest_size)});
  funnel += csv_row({"ok", "", num(s.funnel.ok)});
  for (const auto& [cat, n] : s.funnel.parse_failed) funnel += csv_row({"parse_failed", cat, num(n)});
  for (const auto& [reason, n] : s.funnel.dataflow_failed) funnel += csv_row({"dataflow_failed", reason, num(n)});
  out["funnel.csv"] = funnel;

  std::string totals = csv_row({"scope", "counter", "sum", "mean", "files_with", "presence_pct"});
  auto emit = [&](const std::string& scope, const CounterTable& t) {
    totals += csv_row({scope, "ok_files", num(t.ok_files), "", "", ""});
    for (const auto& [key, c] : t.counters) {
      totals += csv_row({scope, key, num(c.sum), num(c.mean), num(c.files_with), num(c.presence_pct)});
    }
  };
  emit("all", s.totals);
  for (const auto& [cat, t] : s.per_category) emit(cat, t);
  out["totals.csv"] = totals;

  std::string combos = csv_row({"operators", "files"});
  for (const auto& [key, n] : s.operator_combination_matrix) combos += csv_row({key, num(n)});
  out["operator_combinations.csv"] = combos;

  std::string pairs = csv_row({"operator_a", "operator_b", "files"});
  for (const auto& [a, row] : s.operator_pair_matrix) {
    for (const auto& [b, n] : row) pairs += csv_row({a, b, num(n)});
  }
  out["operator_pairs.csv"] = pairs;

  std::string fns = csv_row({"rank", "name", "files", "presence_pct", "calls"});
  for (std::size_t i = 0; i < s.top_functions.size(); ++i) {
    const auto& f = s.top_functions[i];
    fns += csv_row({std::to_string(i + 1), f.name, num(f.files), num(f.presence_pct), num(f.calls)});
  }
  out["top_functions.csv"] = fns;

  std::string pkgs = csv_row({"rank", "name", "files", "presence_pct"});
  for (std::size_t i = 0; i < s.top_packages.size(); ++i) {
    const auto& p = s.top_packages[i];
    pkgs += csv_row({std::to_string(i + 1), p.name, num(p.files), num(p.presence_pct)});
  }
  out["top_packages.csv"] = pkgs;

  std::string sizes = csv_row({"metric", "percentile", "value"});
  for (const auto& [metric, row] : s.size_distribution) {
    for (double q : kSummaryPercentiles) {
      const std::string label = percentile_label(q);
      sizes += csv_row({metric, label, num(row.at(label))});
    }
  }
  out["size_distribution.csv"] = sizes;
  return out;
}

void add_sample(DatasetSamples& samples, const FileRecord& record) {
  if (record.status != FileStatus::Ok || !record.report) return;
  const auto flat = flatten_counters(*record.report);
  std::set<std::string> seen;
  for (const auto& c : flat) {
    auto [it, fresh] = samples.values.try_emplace(c.key, std::vector<double>(samples.files, 0.0));
    it->second.push_back(c.value);
    samples.types.emplace(c.key, c.type);
    seen.insert(c.key);
  }
  for (auto& [key, vec] : samples.values) {
    if (seen.count(key) == 0) vec.push_back(0.0);
  }
  ++samples.files;
}

DatasetSamples load_samples(const std::filesystem::path& out_dir) {
  RunIndex idx = read_index(out_dir);
  DatasetSamples s;
  s.label = idx.dataset_label;
  for (const auto& e : idx.files) {
    if (e.status == FileStatus::Ok) add_sample(s, read_record(out_dir, e));
  }
  return s;
}

ComparisonReport compare(const DatasetSamples& a, const DatasetSamples& b, const CompareOptions& options) {
  if (a.files == 0 || b.files == 0) throw std::invalid_argument("compare needs Ok files in both datasets");
  ComparisonReport report;
  report.label_a = a.label;
  report.label_b = b.label;

  std::map<std::string, FlatCounter::Type> keys = a.types;
  keys.insert(b.types.begin(), b.types.end());
  const std::vector<double> zeros_a(a.files, 0.0);
  const std::vector<double> zeros_b(b.files, 0.0);

  struct Pending {
    ComparisonRow row;
    const std::vector<double>* xs;
    const std::vector<double>* ys;
    ContingencyTable2x2 table;
  };
  std::vector<Pending> pending;

  for (const auto& [key, type] : keys) {
    auto ita = a.values.find(key);
    auto itb = b.values.find(key);
    const auto& xs = ita == a.values.end() ? zeros_a : ita->second;
    const auto& ys = itb == b.values.end() ? zeros_b : itb->second;
    auto with = [](const std::vector<double>& v) {
      return static_cast<std::uint64_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
    };
    const std::uint64_t wa = with(xs);
    const std::uint64_t wb = with(ys);
    const bool all_zero = wa == 0 && wb == 0;

    if (type != FlatCounter::Type::Real) {
      Pending p{};
      p.row.feature = key;
      p.row.framing = Framing::Presence;
      p.row.a_value = pct(wa, a.files);
      p.row.b_value = pct(wb, b.files);
      p.row.a_files = a.files;
      p.row.b_files = b.files;
      p.table = {wa, a.files - wa, wb, b.files - wb};
      if (all_zero) p.row.note = "untestable: absent in both datasets";
      pending.push_back(std::move(p));
    }
    if (type != FlatCounter::Type::Boolean) {
      Pending p{};
      p.row.feature = key;
      p.row.framing = Framing::Count;
      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
      };
      p.row.a_value = mean(xs);
      p.row.b_value = mean(ys);
      p.row.a_files = a.files;
      p.row.b_files = b.files;
      p.xs = &xs;
      p.ys = &ys;
      if (all_zero) p.row.note = "untestable: zero in every file";
      pending.push_back(std::move(p));
    }
  }

  std::uint64_t testable = 0;
  for (const auto& p : pending) {
    if (p.row.note.empty()) ++testable;
  }
  report.k = options.k.value_or(std::max<std::uint64_t>(testable, 1));

  for (auto& p : pending) {
    if (p.row.note.empty()) {
      if (p.row.framing == Framing::Presence) {
        p.row.result = fisher_result(p.table, report.k);
        if (!phi_coefficient(p.table)) p.row.note = "phi undefined: a margin is zero";
      } else {
        p.row.result = mann_whitney_result(*p.xs, *p.ys, report.k);
        if (a.files < 2 || b.files < 2) p.row.note = "Cohen's d undefined: fewer than two files";
      }
    } else {
      report.notes.push_back(p.row.feature + (p.row.framing == Framing::Presence ? " (presence)" : " (count)") +
                             ": " + p.row.note);
    }
    report.rows.push_back(std::move(p.row));
  }
  return report;
}

namespace {

std::string_view framing_name(Framing f) { return f == Framing::Presence ? "presence" : "count"; }

// Infinite or NaN effect sizes have no JSON number form.
json maybe_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_number(v);
}

}  // namespace

json comparison_to_json(const ComparisonReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"feature", row.feature},
              {"framing", framing_name(row.framing)},
              {"a_value", row.a_value},
              {"b_value", row.b_value},
              {"a_files", row.a_files},
              {"b_files", row.b_files},
              {"testable", row.result.has_value()},
              {"note", row.note}};
    if (row.result) {
      const StatResult& s = *row.result;
      j["test"] = test_kind_name(s.test);
      j["p_value"] = s.p_value;
      j["p_adjusted"] = s.p_adjusted;
      j["k"] = s.k;
      if (const auto* phi = std::get_if<std::optional<double>>(&s.effect)) {
        j["effect"] = {{"phi", *phi ? json(**phi) : json(nullptr)}};
      } else {
        const auto& d = std::get<CohensD>(s.effect);
        j["effect"] = {{"d", maybe_number(d.d)}, {"ci_low", maybe_number(d.ci_low)}, {"ci_high", maybe_number(d.ci_high)}};
      }
      j["effect_word"] = s.effect_word;
    }
    rows.push_back(std::move(j));
  }
  return {{"schema_version", kSummarySchemaVersion},
          {"label_a", r.label_a},
          {"label_b", r.label_b},
          {"k", r.k},
          {"rows", rows},
          {"notes", r.notes}};
}

std::string comparison_to_csv(const ComparisonReport& r) {
  std::string out = csv_row({"feature", "framing", "a_value", "b_value", "a_files", "b_files", "test", "p_value",
                             "p_adjusted", "k", "phi", "d", "ci_low", "ci_high", "effect_word", "note"});
  for (const auto& row : r.rows) {
    std::vector<std::string> f{row.feature,       std::string(framing_name(row.framing)),
                               num(row.a_value),  num(row.b_value),
                               num(row.a_files),  num(row.b_files)};
    if (row.result) {
      const StatResult& s = *row.result;
      f.emplace_back(test_kind_name(s.test));
      f.push_back(num(s.p_value));
      f.push_back(num(s.p_adjusted));
      f.push_back(num(s.k));
      if (const auto* phi = std::get_if<std::optional<double>>(&s.effect)) {
        f.push_back(*phi ? num(**phi) : "");
        f.insert(f.end(), {"", "", ""});
      } else {
        const auto& d = std::get<CohensD>(s.effect);
        f.emplace_back("");
        f.push_back(csv_number(d.d));
        f.push_back(csv_number(d.ci_low));
        f.push_back(csv_number(d.ci_high));
      }
      f.push_back(s.effect_word);
    } else {
      f.insert(f.end(), {"", "", "", "", "", "", "", "", ""});
    }
    f.push_back(row.note);
    out += csv_row(f);
  }
  return out;
}

}  // namespace ranatomy
