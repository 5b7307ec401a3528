#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace calibench::stats {

double mean(const std::vector<double>& xs);
/// Population standard deviation (divides by n).
double sd_pop(const std::vector<double>& xs);
/// Sample standard deviation (divides by n-1); 0 when n < 2.
double sd_sample(const std::vector<double>& xs);

double normal_cdf(double z);
/// Two-sided p-value for a standard-normal statistic.
double normal_two_sided_p(double z);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);
double student_t_two_sided_p(double t, double df);

/// Upper-tail p-value of an F statistic with (df1, df2) degrees of freedom.
double f_upper_p(double f, double df1, double df2);

/// Pearson correlation; returns 0 when either side is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct Anova {
  double f_stat = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
  double p_value = 1.0;
};

/// One-way ANOVA of `values` grouped by integer labels. Needs at least two
/// groups and more observations than groups; throws UsageError otherwise.
Anova one_way_anova(const std::vector<double>& values, const std::vector<int>& groups);

/// Deterministic RNG wrapper. Draws avoid std::distribution types so that
/// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Unbiased integer in [0, bound) via rejection sampling.
  uint64_t below(uint64_t bound);

  /// Double in [0, 1) with 53 random bits.
  double uniform01();

  bool bernoulli(double p) { return uniform01() < p; }

  /// In-place Fisher-Yates shuffle with stable cross-platform sequence.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(below(v.size()))];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace calibench::stats
