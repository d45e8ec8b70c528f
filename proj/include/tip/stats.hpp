#pragma once

// Descriptive statistics over a corpus: publication-to-citation delay
// distributions and the unequal-variance (Welch) two-sample t-test used to
// compare citation counts between cited and non-cited groups.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "tip/corpus.hpp"
#include "tip/errors.hpp"

namespace tip {

namespace detail {

// Continued-fraction evaluation for the regularized incomplete beta, modified
// Lentz scheme.
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
  return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// Survival function P(T > t) of Student's t with `df` degrees of freedom.
inline double student_t_sf(double t, double df) {
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? half_tail : 1.0 - half_tail;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
};

/// Two-sample unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom and a two-sided p-value.
inline WelchResult citation_gap_welch_t(const std::vector<double>& group_a,
                                        const std::vector<double>& group_b) {
  const std::size_t na = group_a.size();
  const std::size_t nb = group_b.size();
  if (na < 2 || nb < 2) throw DegenerateInput("welch t-test needs >= 2 elements per group");
  auto mean_var = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    s2 /= static_cast<double>(v.size() - 1);
    return std::pair<double, double>(m, s2);
  };
  const auto [ma, va] = mean_var(group_a);
  const auto [mb, vb] = mean_var(group_b);
  if (!std::isfinite(va) || !std::isfinite(vb))
    throw DegenerateInput("welch t-test needs finite variances");
  const double se2a = va / static_cast<double>(na);
  const double se2b = vb / static_cast<double>(nb);
  if (se2a + se2b == 0.0) throw DegenerateInput("welch t-test: both variances are zero");

  WelchResult out;
  out.t = (ma - mb) / std::sqrt(se2a + se2b);
  out.df = (se2a + se2b) * (se2a + se2b) /
           (se2a * se2a / static_cast<double>(na - 1) + se2b * se2b / static_cast<double>(nb - 1));
  out.p_two_sided = 2.0 * student_t_sf(std::fabs(out.t), out.df);
  if (out.p_two_sided > 1.0) out.p_two_sided = 1.0;
  return out;
}

struct DelayStats {
  double mean_years = 0.0;
  double std_years = 0.0;  // population standard deviation
  std::vector<std::pair<int, std::size_t>> histogram;  // (delay in years, count), ascending
};

/// Publication-to-first-citation delay for the given outcome. Only records
/// with a first-citation year contribute.
inline DelayStats delay_stats(const std::vector<PublicationRecord>& records, LabelKind kind) {
  std::map<int, std::size_t> hist;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    const auto first = first_citation_year_for(r, kind);
    if (!first) continue;
    const int delay = *first - r.year;
    ++hist[delay];
    sum += delay;
    ++n;
  }
  if (n == 0) throw EmptyInput("no records with a first citation year");
  DelayStats out;
  out.mean_years = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& [delay, count] : hist)
    ss += static_cast<double>(count) * (delay - out.mean_years) * (delay - out.mean_years);
  out.std_years = std::sqrt(ss / static_cast<double>(n));
  out.histogram.assign(hist.begin(), hist.end());
  return out;
}

/// times_cited values split by outcome label, for the citation-gap test.
/// Records without the metric are skipped.
inline std::pair<std::vector<double>, std::vector<double>> times_cited_by_label(
    const std::vector<PublicationRecord>& records, LabelKind kind) {
  std::pair<std::vector<double>, std::vector<double>> out;  // {cited, not cited}
  for (const auto& r : records) {
    if (!r.leakage.times_cited) continue;
    if (citation_count_for(r, kind) >= 1)
      out.first.push_back(*r.leakage.times_cited);
    else
      out.second.push_back(*r.leakage.times_cited);
  }
  return out;
}

}  // namespace tip
