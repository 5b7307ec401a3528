#include "calibench/stats.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "calibench/errors.hpp"

namespace calibench::stats {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sd_pop(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

double sd_sample(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

namespace {

// Continued-fraction evaluation for the incomplete beta function
// (Lentz's method, as in standard numerical references).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3.0e-14;
  constexpr double kFpMin = 1.0e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
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
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log1p(-x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (df <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  double x = df / (df + t * t);
  double p = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - p : p;
}

double student_t_two_sided_p(double t, double df) {
  double x = df / (df + t * t);
  return incomplete_beta(df / 2.0, 0.5, x);
}

double f_upper_p(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  double x = df2 / (df2 + df1 * f);
  return incomplete_beta(df2 / 2.0, df1 / 2.0, x);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return 0.0;
  double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Anova one_way_anova(const std::vector<double>& values, const std::vector<int>& groups) {
  if (values.size() != groups.size()) {
    throw UsageError("one_way_anova: values and groups must align");
  }
  std::map<int, std::pair<double, size_t>> sums;  // group -> (sum, count)
  for (size_t i = 0; i < values.size(); ++i) {
    auto& s = sums[groups[i]];
    s.first += values[i];
    s.second += 1;
  }
  size_t g = sums.size();
  size_t n = values.size();
  if (g < 2 || n <= g) {
    throw UsageError("one_way_anova: need at least two groups and more rows than groups");
  }
  double grand = mean(values);
  double ss_between = 0.0;
  for (const auto& [id, s] : sums) {
    double gm = s.first / static_cast<double>(s.second);
    ss_between += static_cast<double>(s.second) * (gm - grand) * (gm - grand);
  }
  double ss_within = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const auto& s = sums[groups[i]];
    double gm = s.first / static_cast<double>(s.second);
    ss_within += (values[i] - gm) * (values[i] - gm);
  }
  Anova a;
  a.df_between = static_cast<double>(g - 1);
  a.df_within = static_cast<double>(n - g);
  if (ss_within <= 0.0) {
    a.f_stat = ss_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    a.p_value = ss_between > 0.0 ? 0.0 : 1.0;
    return a;
  }
  a.f_stat = (ss_between / a.df_between) / (ss_within / a.df_within);
  a.p_value = f_upper_p(a.f_stat, a.df_between, a.df_within);
  return a;
}

uint64_t Rng::below(uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
  for (;;) {
    uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

}  // namespace calibench::stats
