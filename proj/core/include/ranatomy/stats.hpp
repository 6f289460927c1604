#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ranatomy {

/// Rows are datasets A and B, columns are files with and without a feature.
struct ContingencyTable2x2 {
  std::uint64_t a = 0, b = 0, c = 0, d = 0;
};

/// Two-sided Fisher exact test: the probability of all tables with the
/// observed margins that are at most as likely as the observed one (with
/// 1e-7 relative slack). A zero row or column margin gives 1.
[[nodiscard]] double fisher_exact_2x2(const ContingencyTable2x2& t);

/// nullopt when any margin is zero.
[[nodiscard]] std::optional<double> phi_coefficient(const ContingencyTable2x2& t);

struct MannWhitneyResult {
  double u = 0.0;  // for the first sample, midranks
  double p_value = 1.0;
  bool exact = false;
};

/// Exact two-sided p when the smaller sample has at most 8 values, there are
/// no ties and the null distribution fits in 64-bit counts; otherwise the
/// normal approximation with tie correction and continuity correction.
/// Throws std::invalid_argument on an empty sample.
[[nodiscard]] MannWhitneyResult mann_whitney(const std::vector<double>& xs, const std::vector<double>& ys);

/// Two-sided p from the normal approximation only; exposed for comparison
/// against the exact path.
[[nodiscard]] double mann_whitney_normal_p(const std::vector<double>& xs, const std::vector<double>& ys);

struct CohensD {
  double d = 0.0;  // +-infinity when the pooled variance is zero but means differ
  double ci_low = 0.0;
  double ci_high = 0.0;
  [[nodiscard]] bool infinite() const;
};

inline constexpr double kZ975 = 1.959964;

/// Pooled-SD Cohen's d with a normal-approximation 95% CI.
/// Throws std::invalid_argument unless both samples have two or more values.
[[nodiscard]] CohensD cohens_d(const std::vector<double>& xs, const std::vector<double>& ys);

[[nodiscard]] double bonferroni(double p, std::uint64_t k);

/// Verbal magnitude of |d|: negligible, very small, small, medium, large,
/// very large, huge. "undefined" for NaN.
[[nodiscard]] std::string_view effect_word(double d);

/// d-equivalent of a phi coefficient, 2 phi / sqrt(1 - phi^2), so both
/// effect sizes share one verbal scale.
[[nodiscard]] double phi_to_d(double phi);

enum class TestKind : std::uint8_t { FisherExact, MannWhitney };
[[nodiscard]] std::string_view test_kind_name(TestKind kind);

struct StatResult {
  TestKind test = TestKind::FisherExact;
  double p_value = 1.0;
  double p_adjusted = 1.0;
  std::uint64_t k = 1;
  // phi (absent when undefined) or Cohen's d.
  std::variant<std::optional<double>, CohensD> effect;
  std::string effect_word;
};

[[nodiscard]] StatResult fisher_result(const ContingencyTable2x2& t, std::uint64_t k);
[[nodiscard]] StatResult mann_whitney_result(const std::vector<double>& xs, const std::vector<double>& ys,
                                             std::uint64_t k);

/// log(n choose k) via lgamma.
[[nodiscard]] double log_choose(std::uint64_t n, std::uint64_t k);

}  // namespace ranatomy
