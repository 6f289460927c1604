#include "ranatomy/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ranatomy {

double log_choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  auto dn = static_cast<double>(n);
  auto dk = static_cast<double>(k);
  return std::lgamma(dn + 1) - std::lgamma(dk + 1) - std::lgamma(dn - dk + 1);
}

double fisher_exact_2x2(const ContingencyTable2x2& t) {
  const std::uint64_t r1 = t.a + t.b;
  const std::uint64_t r2 = t.c + t.d;
  const std::uint64_t c1 = t.a + t.c;
  const std::uint64_t c2 = t.b + t.d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) return 1.0;
  // Unnormalized log weights, scaled by the modal table so nothing
  // underflows; p is the qualifying mass over the total mass. When every
  // table qualifies both sums are the same sequence and p is exactly 1.
  auto log_w = [&](std::uint64_t x) { return log_choose(r1, x) + log_choose(r2, c1 - x); };
  const std::uint64_t lo = c1 > r2 ? c1 - r2 : 0;
  const std::uint64_t hi = std::min(r1, c1);
  std::vector<double> lw;
  lw.reserve(hi - lo + 1);
  for (std::uint64_t x = lo; x <= hi; ++x) lw.push_back(log_w(x));
  const double top = *std::max_element(lw.begin(), lw.end());
  const double threshold = lw[t.a - lo] + std::log1p(1e-7);
  double total = 0.0, p = 0.0;
  for (double w : lw) {
    const double mass = std::exp(w - top);
    total += mass;
    if (w <= threshold) p += mass;
  }
  return std::clamp(p / total, 0.0, 1.0);
}

std::optional<double> phi_coefficient(const ContingencyTable2x2& t) {
  auto a = static_cast<double>(t.a), b = static_cast<double>(t.b);
  auto c = static_cast<double>(t.c), d = static_cast<double>(t.d);
  double denom = (a + b) * (c + d) * (a + c) * (b + d);
  if (denom == 0.0) return std::nullopt;
  return std::clamp((a * d - b * c) / std::sqrt(denom), -1.0, 1.0);
}

namespace {

struct Ranking {
  double rank_sum_x = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  bool ties = false;
};

Ranking rank(const std::vector<double>& xs, const std::vector<double>& ys) {
  struct Item {
    double value;
    bool from_x;
  };
  std::vector<Item> all;
  all.reserve(xs.size() + ys.size());
  for (double v : xs) all.push_back({v, true});
  for (double v : ys) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Item& l, const Item& r) { return l.value < r.value; });

  Ranking out;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j + 1 < all.size() && all[j + 1].value == all[i].value) ++j;
    const double group = static_cast<double>(j - i + 1);
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    if (group > 1) {
      out.ties = true;
      out.tie_term += group * group * group - group;
    }
    for (std::size_t k = i; k <= j; ++k) {
      if (all[k].from_x) out.rank_sum_x += midrank;
    }
    i = j + 1;
  }
  return out;
}

// Number of label assignments giving each value of U, i.e. the coefficients
// of the Gaussian binomial [n1+n2 choose n1]_q. Arithmetic is modulo 2^64;
// intermediate products may wrap but the final coefficients are exact when
// the binomial coefficient fits.
std::vector<std::uint64_t> u_distribution(std::size_t n1, std::size_t n2) {
  const std::size_t m = std::min(n1, n2);
  const std::size_t rest = n1 + n2 - m;
  std::vector<std::uint64_t> c(m * rest + 1, 0);
  c[0] = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    const std::size_t up = rest + i;  // multiply by (1 - q^up)
    for (std::size_t j = c.size(); j-- > up;) c[j] -= c[j - up];
    for (std::size_t j = i; j < c.size(); ++j) c[j] += c[j - i];  // divide by (1 - q^i)
  }
  return c;
}

constexpr std::size_t kExactMaxSmallSample = 8;
constexpr std::size_t kExactMaxDegree = 4'000'000;

bool exact_feasible(std::size_t n1, std::size_t n2) {
  const std::size_t m = std::min(n1, n2);
  if (m > kExactMaxSmallSample) return false;
  const std::size_t rest = n1 + n2 - m;
  if (m * rest > kExactMaxDegree) return false;
  return log_choose(n1 + n2, m) < 63.0 * std::log(2.0);
}

double normal_p(double u, double n1, double n2, double tie_term) {
  const double n = n1 + n2;
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

void require_nonempty(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("mann_whitney needs two non-empty samples");
}

}  // namespace

MannWhitneyResult mann_whitney(const std::vector<double>& xs, const std::vector<double>& ys) {
  require_nonempty(xs, ys);
  const auto n1 = static_cast<double>(xs.size());
  const auto n2 = static_cast<double>(ys.size());
  Ranking r = rank(xs, ys);
  MannWhitneyResult out;
  out.u = r.rank_sum_x - n1 * (n1 + 1.0) / 2.0;

  if (!r.ties && exact_feasible(xs.size(), ys.size())) {
    std::vector<std::uint64_t> dist = u_distribution(xs.size(), ys.size());
    const auto u = static_cast<std::size_t>(std::llround(out.u));
    long double total = 0, lower = 0, upper = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      auto v = static_cast<long double>(dist[i]);
      total += v;
      if (i <= u) lower += v;
      if (i >= u) upper += v;
    }
    out.exact = true;
    out.p_value = static_cast<double>(std::min<long double>(1.0L, 2.0L * std::min(lower, upper) / total));
    return out;
  }
  out.p_value = normal_p(out.u, n1, n2, r.tie_term);
  return out;
}

double mann_whitney_normal_p(const std::vector<double>& xs, const std::vector<double>& ys) {
  require_nonempty(xs, ys);
  const auto n1 = static_cast<double>(xs.size());
  const auto n2 = static_cast<double>(ys.size());
  Ranking r = rank(xs, ys);
  return normal_p(r.rank_sum_x - n1 * (n1 + 1.0) / 2.0, n1, n2, r.tie_term);
}

bool CohensD::infinite() const { return std::isinf(d); }

CohensD cohens_d(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 2 || ys.size() < 2) throw std::invalid_argument("cohens_d needs two values per sample");
  auto moments = [](const std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss / static_cast<double>(v.size() - 1)};
  };
  auto [m1, v1] = moments(xs);
  auto [m2, v2] = moments(ys);
  const auto n1 = static_cast<double>(xs.size());
  const auto n2 = static_cast<double>(ys.size());
  const double pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0);
  const double diff = m1 - m2;

  CohensD out;
  if (pooled == 0.0) {
    if (diff == 0.0) {
      out.d = 0.0;
    } else {
      const double inf = std::numeric_limits<double>::infinity();
      out.d = diff > 0 ? inf : -inf;
      out.ci_low = out.ci_high = out.d;
      return out;
    }
  } else {
    out.d = diff / std::sqrt(pooled);
  }
  const double se = std::sqrt((n1 + n2) / (n1 * n2) + out.d * out.d / (2.0 * (n1 + n2)));
  out.ci_low = out.d - kZ975 * se;
  out.ci_high = out.d + kZ975 * se;
  return out;
}

double bonferroni(double p, std::uint64_t k) { return std::min(1.0, static_cast<double>(k) * p); }

std::string_view effect_word(double d) {
  if (std::isnan(d)) return "undefined";
  const double m = std::abs(d);
  if (m < 0.01) return "negligible";
  if (m < 0.2) return "very small";
  if (m < 0.5) return "small";
  if (m < 0.8) return "medium";
  if (m < 1.2) return "large";
  if (m < 2.0) return "very large";
  return "huge";
}

double phi_to_d(double phi) {
  const double rest = 1.0 - phi * phi;
  if (rest <= 0.0) return phi > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  return 2.0 * phi / std::sqrt(rest);
}

std::string_view test_kind_name(TestKind kind) {
  return kind == TestKind::FisherExact ? "FisherExact" : "MannWhitney";
}

StatResult fisher_result(const ContingencyTable2x2& t, std::uint64_t k) {
  StatResult r;
  r.test = TestKind::FisherExact;
  r.k = k;
  r.p_value = fisher_exact_2x2(t);
  r.p_adjusted = bonferroni(r.p_value, k);
  auto phi = phi_coefficient(t);
  r.effect = phi;
  r.effect_word = std::string(effect_word(phi ? phi_to_d(*phi) : std::nan("")));
  return r;
}

StatResult mann_whitney_result(const std::vector<double>& xs, const std::vector<double>& ys, std::uint64_t k) {
  StatResult r;
  r.test = TestKind::MannWhitney;
  r.k = k;
  r.p_value = mann_whitney(xs, ys).p_value;
  r.p_adjusted = bonferroni(r.p_value, k);
  if (xs.size() >= 2 && ys.size() >= 2) {
    CohensD d = cohens_d(xs, ys);
    r.effect = d;
    r.effect_word = std::string(effect_word(d.d));
  } else {
    double nan = std::nan("");
    r.effect = CohensD{nan, nan, nan};
    r.effect_word = "undefined";
  }
  return r;
}

}  // namespace ranatomy
