#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ranatomy/stats.hpp"

using namespace ranatomy;

namespace {

// Pascal's triangle in exact integers; every margin here is at most 24.
const std::vector<std::vector<double>>& pascal() {
  static const auto table = [] {
    std::vector<std::vector<double>> t(25);
    for (std::size_t n = 0; n < t.size(); ++n) {
      t[n].assign(n + 1, 1.0);
      for (std::size_t k = 1; k < n; ++k) t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
    }
    return t;
  }();
  return table;
}

double choose(unsigned n, unsigned k) { return k > n ? 0.0 : pascal()[n][k]; }

// Two-sided Fisher p by direct enumeration of the hypergeometric support:
// sum of the probabilities no larger than the observed one.
double fisher_oracle(unsigned a, unsigned b, unsigned c, unsigned d) {
  const unsigned r1 = a + b, r2 = c + d, c1 = a + c, n = r1 + r2;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c1 == n) return 1.0;
  const double total = choose(n, c1);
  std::vector<double> probs;
  for (unsigned x = 0; x <= std::min(r1, c1); ++x) {
    if (c1 - x > r2) continue;
    probs.push_back(choose(r1, x) * choose(r2, c1 - x) / total);
  }
  const double observed = choose(r1, a) * choose(r2, c) / total;
  double p = 0.0;
  for (double q : probs) {
    if (q <= observed * (1.0 + 1e-7)) p += q;
  }
  return std::min(p, 1.0);
}

// Exact two-sided Mann-Whitney p for untied data by enumerating every way
// of choosing which of the n1 + n2 ranks belong to the first sample.
double mann_whitney_oracle(unsigned n1, unsigned n2, double u_observed) {
  const unsigned n = n1 + n2;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + n1, true);
  double total = 0, lower = 0, upper = 0;
  do {
    double rank_sum = 0;
    for (unsigned i = 0; i < n; ++i) {
      if (pick[i]) rank_sum += i + 1;
    }
    const double u = rank_sum - n1 * (n1 + 1) / 2.0;
    total += 1;
    if (u <= u_observed) lower += 1;
    if (u >= u_observed) upper += 1;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

bool close_rel(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::max(std::abs(want), std::numeric_limits<double>::min());
}

}  // namespace

TEST_CASE("fisher exact equals hypergeometric enumeration on every table with margins up to 12") {
  std::size_t tables = 0;
  for (unsigned a = 0; a <= 12; ++a) {
    for (unsigned b = 0; a + b <= 12; ++b) {
      for (unsigned c = 0; a + c <= 12; ++c) {
        for (unsigned d = 0; c + d <= 12 && b + d <= 12; ++d) {
          const double want = fisher_oracle(a, b, c, d);
          const double got = fisher_exact_2x2({a, b, c, d});
          if (!close_rel(got, want, 1e-9)) {
            FAIL_CHECK("table " << a << " " << b << " " << c << " " << d << ": got " << got << " want " << want);
          }
          ++tables;
        }
      }
    }
  }
  CHECK(tables == 5551);
}

TEST_CASE("fisher exact known value and symmetries") {
  // Tea-tasting table: the two-sided p is (1 + 16 + 16 + 1) / 70.
  CHECK(fisher_exact_2x2({3, 1, 1, 3}) == doctest::Approx(34.0 / 70.0).epsilon(1e-12));
  const ContingencyTable2x2 t{7, 2, 3, 9};
  const double p = fisher_exact_2x2(t);
  CHECK(fisher_exact_2x2({t.b, t.a, t.d, t.c}) == doctest::Approx(p).epsilon(1e-12));
  CHECK(fisher_exact_2x2({t.c, t.d, t.a, t.b}) == doctest::Approx(p).epsilon(1e-12));
  CHECK(fisher_exact_2x2({t.a, t.c, t.b, t.d}) == doctest::Approx(p).epsilon(1e-12));
  CHECK(fisher_exact_2x2({0, 0, 0, 0}) == 1.0);
  CHECK(fisher_exact_2x2({5, 5, 0, 0}) == 1.0);
  // Large counts stay finite and inside [0, 1].
  const double big = fisher_exact_2x2({100000, 120000, 98000, 130000});
  CHECK(big >= 0.0);
  CHECK(big <= 1.0);
}

TEST_CASE("mann whitney exact path equals permutation enumeration for untied samples up to size 6") {
  std::size_t pairs = 0;
  for (unsigned n1 = 1; n1 <= 6; ++n1) {
    for (unsigned n2 = 1; n2 <= 6; ++n2) {
      // Every interleaving of the two samples over ranks 1..n1+n2.
      const unsigned n = n1 + n2;
      std::vector<bool> pick(n, false);
      std::fill(pick.begin(), pick.begin() + n1, true);
      do {
        std::vector<double> xs, ys;
        for (unsigned i = 0; i < n; ++i) (pick[i] ? xs : ys).push_back(10.0 * (i + 1) + 0.5);
        MannWhitneyResult r = mann_whitney(xs, ys);
        CHECK(r.exact);
        double rank_sum = 0;
        for (unsigned i = 0; i < n; ++i) {
          if (pick[i]) rank_sum += i + 1;
        }
        const double u = rank_sum - n1 * (n1 + 1) / 2.0;
        CHECK(r.u == u);
        const double want = mann_whitney_oracle(n1, n2, u);
        if (!close_rel(r.p_value, want, 1e-12)) {
          FAIL_CHECK("n1=" << n1 << " n2=" << n2 << " u=" << u << ": got " << r.p_value << " want " << want);
        }
        ++pairs;
      } while (std::prev_permutation(pick.begin(), pick.end()));
    }
  }
  CHECK(pairs > 1000);
}

TEST_CASE("mann whitney uses the exact path beyond six when feasible") {
  std::vector<double> xs{1, 3, 5, 7, 9, 11, 13, 15}, ys;
  for (int i = 0; i < 40; ++i) ys.push_back(2.0 * i + 0.5);
  MannWhitneyResult r = mann_whitney(xs, ys);
  CHECK(r.exact);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);
}

TEST_CASE("mann whitney normal approximation with ties") {
  // Reference: tie-corrected variance, continuity correction, computed
  // independently to 17 digits.
  std::vector<double> xs{1, 2, 2, 3, 3, 3, 4};
  std::vector<double> ys{2, 3, 4, 4, 5, 5, 6, 7};
  MannWhitneyResult r = mann_whitney(xs, ys);
  CHECK_FALSE(r.exact);
  CHECK(r.u == 8.5);
  CHECK(r.p_value == doctest::Approx(0.02527973688589393).epsilon(1e-12));
  CHECK(mann_whitney_normal_p(xs, ys) == r.p_value);
  // Identical constant samples: zero variance, no evidence of a difference.
  CHECK(mann_whitney({1, 1, 1}, {1, 1}).p_value == 1.0);
  CHECK_THROWS_AS((void)mann_whitney({}, {1.0}), std::invalid_argument);
}

TEST_CASE("mann whitney swaps symmetrically") {
  std::vector<double> xs{0.3, 1.7, 2.2, 5.1}, ys{0.1, 0.2, 0.9, 1.1, 3.3};
  CHECK(mann_whitney(xs, ys).p_value == doctest::Approx(mann_whitney(ys, xs).p_value).epsilon(1e-15));
}

TEST_CASE("phi matches independent recomputation") {
  struct Case {
    ContingencyTable2x2 t;
    double phi;
  };
  const Case cases[] = {
      {{10, 2, 3, 15}, 0.65908204365730767},
      {{0, 5, 5, 0}, -1.0},
      {{7, 7, 7, 7}, 0.0},
      {{1, 11, 9, 3}, -0.67612340378281326},
      {{120, 30, 45, 80}, 0.44721359549995794},
  };
  for (const auto& c : cases) {
    auto phi = phi_coefficient(c.t);
    REQUIRE(phi);
    CHECK(std::abs(*phi - c.phi) <= 1e-12);
  }
  CHECK_FALSE(phi_coefficient({0, 0, 3, 4}));
}

TEST_CASE("cohens d matches independent recomputation") {
  struct Case {
    std::vector<double> xs, ys;
    double d, lo, hi;
  };
  const Case cases[] = {
      {{1, 2, 3, 4, 5}, {3, 4, 5, 6, 7, 8}, -1.4301938838683885, -2.7589885844599485, -0.10139918327682840},
      {{2.5, 3.1, 4.7}, {1.0, 1.2, 0.9, 1.4}, 3.1215552994548418, 0.90468004609193126, 5.3384305528177524},
      {{10, 10, 11}, {9, 12, 13, 8}, -0.088665862766488581, -1.5863334385486381, 1.4090017130156609},
  };
  for (const auto& c : cases) {
    CohensD d = cohens_d(c.xs, c.ys);
    CHECK(std::abs(d.d - c.d) <= 1e-12);
    CHECK(std::abs(d.ci_low - c.lo) <= 1e-12);
    CHECK(std::abs(d.ci_high - c.hi) <= 1e-12);
  }
  CohensD flat = cohens_d({2, 2}, {1, 1});
  CHECK(flat.infinite());
  CHECK(flat.d > 0);
  CHECK(cohens_d({1, 1}, {1, 1}).d == 0.0);
  CHECK_THROWS_AS((void)cohens_d({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("effect words") {
  CHECK(effect_word(0.25) == "small");
  CHECK(effect_word(-0.25) == "small");
  CHECK(effect_word(0.005) == "negligible");
  CHECK(effect_word(0.1) == "very small");
  CHECK(effect_word(0.5) == "medium");
  CHECK(effect_word(0.8) == "large");
  CHECK(effect_word(1.5) == "very large");
  CHECK(effect_word(2.0) == "huge");
  CHECK(effect_word(std::numeric_limits<double>::infinity()) == "huge");
  CHECK(effect_word(std::nan("")) == "undefined");
}

TEST_CASE("bonferroni") {
  CHECK(bonferroni(0.01, 3) == doctest::Approx(0.03));
  CHECK(bonferroni(0.4, 5) == 1.0);
  CHECK(bonferroni(0.2, 1) == 0.2);
}

TEST_CASE("phi converts to a d-equivalent for its word") {
  CHECK(phi_to_d(0.0) == 0.0);
  CHECK(phi_to_d(0.6) == doctest::Approx(1.5));
  CHECK(std::isinf(phi_to_d(1.0)));
  StatResult r = fisher_result({10, 2, 3, 15}, 4);
  CHECK(r.test == TestKind::FisherExact);
  CHECK(r.p_adjusted == doctest::Approx(std::min(1.0, 4 * r.p_value)));
  CHECK(r.effect_word == std::string(effect_word(phi_to_d(0.65908204365730767))));
}

TEST_CASE("mann whitney result carries cohens d") {
  StatResult r = mann_whitney_result({1, 2, 3, 4, 5}, {3, 4, 5, 6, 7, 8}, 2);
  CHECK(r.test == TestKind::MannWhitney);
  REQUIRE(std::holds_alternative<CohensD>(r.effect));
  CHECK(std::get<CohensD>(r.effect).d == doctest::Approx(-1.4301938838683885).epsilon(1e-12));
  CHECK(r.effect_word == "very large");
  StatResult tiny = mann_whitney_result({1}, {2}, 1);
  CHECK(tiny.effect_word == "undefined");
}

TEST_CASE("worked examples") {
  // Exact fractions from an independent enumeration.
  CHECK(fisher_exact_2x2({5, 0, 0, 5}) == doctest::Approx(2.0 / 252.0).epsilon(1e-12));
  CHECK(fisher_exact_2x2({3, 3, 3, 3}) == 1.0);
  CHECK(fisher_exact_2x2({1, 9, 11, 3}) == doctest::Approx(41.0 / 14858.0).epsilon(1e-12));

  CHECK(*phi_coefficient({10, 0, 0, 10}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*phi_coefficient({10, 10, 10, 10}) == 0.0);
  CHECK(*phi_coefficient({5, 0, 0, 5}) == doctest::Approx(1.0).epsilon(1e-15));

  MannWhitneyResult small = mann_whitney({1, 2}, {3, 4});
  CHECK(small.u == 0);
  CHECK(small.exact);
  CHECK(small.p_value == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(mann_whitney({1, 2, 3}, {1, 2, 3}).p_value == 1.0);
  MannWhitneyResult apart = mann_whitney({1, 2, 3, 4, 5}, {6, 7, 8, 9, 10});
  CHECK(apart.u == 0);
  CHECK(apart.p_value == doctest::Approx(2.0 / 252.0).epsilon(1e-12));

  CohensD same = cohens_d({1, 2, 3, 4}, {1, 2, 3, 4});
  CHECK(same.d == 0.0);
  CHECK(same.ci_low == doctest::Approx(-same.ci_high).epsilon(1e-15));
  CHECK(same.ci_low < 0.0);
  CHECK(cohens_d({2, 2, 2, 2}, {1, 1, 1, 1}).infinite());
  CohensD unit = cohens_d({1, 2, 3}, {2, 3, 4});
  CHECK(unit.d == doctest::Approx(-1.0).epsilon(1e-15));
  // se = sqrt((n1+n2)/(n1 n2) + d^2 / (2 (n1+n2))) = sqrt(2/3 + 1/12) = sqrt(3)/2.
  CHECK(unit.ci_low == doctest::Approx(-1.0 - 1.959964 * std::sqrt(3.0) / 2.0).epsilon(1e-12));
  CHECK(unit.ci_high == doctest::Approx(-1.0 + 1.959964 * std::sqrt(3.0) / 2.0).epsilon(1e-12));

  CHECK(bonferroni(0.001, 33) == doctest::Approx(0.033).epsilon(1e-12));
  CHECK(bonferroni(0.5, 10) == 1.0);
  CHECK(bonferroni(0.0, 7) == 0.0);
  CHECK(effect_word(0.0) == "negligible");
  CHECK(effect_word(1.5) == "very large");
}

TEST_CASE("fisher exact on large tables against an independent implementation") {
  // scipy.stats.fisher_exact reference values.
  CHECK(close_rel(fisher_exact_2x2({100000, 120000, 98000, 130000}), 2.780259335090766e-62, 1e-8));
  CHECK(close_rel(fisher_exact_2x2({5000, 5100, 4900, 5200}), 0.1634983300240206, 1e-8));
  CHECK(close_rel(fisher_exact_2x2({300, 10, 280, 40}), 1.2606266059489321e-05, 1e-8));
}
