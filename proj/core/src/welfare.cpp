#include "calibench/welfare.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "calibench/errors.hpp"

namespace calibench {

CostSpec CostSpec::exponential(double gamma) {
  if (!(gamma > 0.0)) throw UsageError("exponential cost requires gamma > 0");
  CostSpec c;
  c.kind = Kind::Exponential;
  c.gamma = gamma;
  return c;
}

CostSpec CostSpec::custom(std::function<double(double)> c, std::function<double(double)> c_prime,
                          std::function<double(double)> c_double_prime) {
  if (!c || !c_prime || !c_double_prime) {
    throw UsageError("custom cost requires c, c', and c''");
  }
  CostSpec spec;
  spec.kind = Kind::Custom;
  spec.c = std::move(c);
  spec.c_prime = std::move(c_prime);
  spec.c_double_prime = std::move(c_double_prime);
  return spec;
}

WelfareScenario::WelfareScenario(double p_, double b_, double pi_, CostSpec cost_)
    : p(p_), b(b_), pi(pi_), cost(std::move(cost_)) {
  if (p < 0.0 || p > 1.0) throw UsageError("welfare: p must lie in [0,1]");
  if (!(pi > 0.0)) throw UsageError("welfare: payoff scale must be positive");
  double belief = p + b;
  if (!(belief > 0.0) || belief > 1.0) {
    throw UsageError("welfare: belief p+b must lie in (0,1]");
  }
  if (cost.kind == CostSpec::Kind::Exponential && !(cost.gamma > 0.0)) {
    throw UsageError("welfare: exponential cost requires gamma > 0");
  }
  if (cost.kind == CostSpec::Kind::Custom && (!cost.c || !cost.c_prime || !cost.c_double_prime)) {
    throw UsageError("welfare: custom cost requires c, c', and c''");
  }
}

namespace {

double cost_value(const CostSpec& cost, double e) {
  if (cost.kind == CostSpec::Kind::Exponential) {
    return std::exp(e * cost.gamma) / cost.gamma;
  }
  return cost.c(e);
}

}  // namespace

EffortResult optimal_effort(const WelfareScenario& s) {
  double target = (s.p + s.b) * s.pi;  // perceived marginal benefit
  EffortResult res;
  if (s.cost.kind == CostSpec::Kind::Exponential) {
    res.effort = std::log(target) / s.cost.gamma;
    res.negative_effort = res.effort < 0.0;
    return res;
  }

  // Custom cost: c' is increasing, so bisect once the root is bracketed.
  const double tol = 1e-10 * target;
  double lo = 0.0;
  double f_lo = s.cost.c_prime(lo) - target;
  if (f_lo > tol) {
    throw DataError("optimal_effort: marginal cost at zero effort already exceeds the "
                    "perceived benefit; no non-negative solution");
  }
  if (std::abs(f_lo) <= tol) return res;  // e = 0 is the solution

  double hi = 1.0;
  int doublings = 0;
  while (s.cost.c_prime(hi) - target < 0.0) {
    hi *= 2.0;
    if (++doublings > 200) {
      throw DataError("optimal_effort: could not bracket the first-order condition");
    }
  }
  for (int iter = 0; iter < 500; ++iter) {
    double mid = 0.5 * (lo + hi);
    double f_mid = s.cost.c_prime(mid) - target;
    if (std::abs(f_mid) <= tol) {
      res.effort = mid;
      return res;
    }
    if (f_mid < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.effort = 0.5 * (lo + hi);
  if (std::abs(s.cost.c_prime(res.effort) - target) > tol * 1e3) {
    throw DataError("optimal_effort: bisection failed to converge");
  }
  return res;
}

double welfare(const WelfareScenario& s) {
  double e = optimal_effort(s).effort;
  return s.p * s.pi * e - cost_value(s.cost, e);
}

double perceived_utility(const WelfareScenario& s, double effort) {
  return (s.p + s.b) * s.pi * effort - cost_value(s.cost, effort);
}

WelfareDerivatives welfare_derivatives(const WelfareScenario& s) {
  WelfareDerivatives d;
  if (s.cost.kind == CostSpec::Kind::Exponential) {
    d.e_prime = 1.0 / (s.cost.gamma * (s.p + s.b));
  } else {
    double e = optimal_effort(s).effort;
    double curvature = s.cost.c_double_prime(e);
    if (curvature <= 0.0) {
      d.e_prime = std::numeric_limits<double>::infinity();
      d.e_prime_infinite = true;
    } else {
      d.e_prime = s.pi / curvature;
    }
  }
  double e = optimal_effort(s).effort;
  d.dW_db = -s.b * s.pi * d.e_prime;
  d.dW_dp = s.pi * e - s.b * s.pi * d.e_prime;
  return d;
}

TaylorTerms taylor_delta(const WelfareScenario& s, double dp, double db) {
  double e = optimal_effort(s).effort;
  double ep = welfare_derivatives(s).e_prime;
  TaylorTerms t;
  t.dp = dp;
  t.db = db;
  t.first_order_p = s.pi * (e - s.b * ep) * dp;
  t.second_order_p = s.pi * (ep / 2.0) * dp * dp;
  t.first_order_b = -s.pi * s.b * ep * db;
  t.second_order_b = -s.pi * (ep / 2.0) * db * db;
  t.total = t.first_order_p + t.second_order_p + t.first_order_b + t.second_order_b;
  return t;
}

ResultChecks check_results(const WelfareScenario& s, double dp, double alpha) {
  if (!(dp > 0.0)) throw UsageError("check_results: dp must be positive");
  if (!(alpha >= 1.0)) throw UsageError("check_results: alpha must be at least 1");

  double e = optimal_effort(s).effort;
  WelfareDerivatives d = welfare_derivatives(s);

  ResultChecks r;
  r.effort_inelastic = d.e_prime == 0.0;

  r.accuracy_condition.lhs = s.pi * e;
  r.accuracy_condition.rhs = s.b * s.pi * d.e_prime;
  r.accuracy_condition.welfare_decreasing_in_p =
      !r.effort_inelastic && r.accuracy_condition.lhs < r.accuracy_condition.rhs;

  r.combined_condition.alpha = alpha;
  r.combined_condition.lhs = s.pi * e;
  r.combined_condition.rhs = (1.0 + alpha) * s.b * s.pi * d.e_prime;
  r.combined_condition.combined_reduces_welfare =
      r.combined_condition.lhs < r.combined_condition.rhs;

  if (s.cost.kind == CostSpec::Kind::Exponential) {
    double belief = s.p + s.b;
    r.accuracy_condition.exp_lhs = std::log(s.pi * belief);
    r.accuracy_condition.exp_rhs = s.b / belief;
    r.combined_condition.exp_lhs = std::log(s.pi * belief);
    r.combined_condition.exp_rhs = (1.0 + alpha) * s.b / belief;
  }

  r.debias_gain = s.pi * s.b * s.b * d.e_prime / 2.0;
  return r;
}

std::vector<WelfareGridPoint> welfare_grid(double pi, const CostSpec& cost,
                                           const std::vector<double>& p_values,
                                           const std::vector<double>& b_values) {
  std::vector<WelfareGridPoint> out;
  for (double p : p_values) {
    for (double b : b_values) {
      double belief = p + b;
      if (p < 0.0 || p > 1.0 || !(belief > 0.0) || belief > 1.0) continue;
      WelfareScenario s(p, b, pi, cost);
      WelfareGridPoint g;
      g.p = p;
      g.b = b;
      EffortResult e = optimal_effort(s);
      g.effort = e.effort;
      g.negative_effort = e.negative_effort;
      g.welfare = welfare(s);
      WelfareDerivatives d = welfare_derivatives(s);
      g.dW_dp = d.dW_dp;
      g.dW_db = d.dW_db;
      out.push_back(g);
    }
  }
  return out;
}

void save_welfare_grid_csv(const std::vector<WelfareGridPoint>& grid, const std::string& path,
                           const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write welfare grid: " + path);
  if (!manifest_hash.empty()) out << "# manifest: " << manifest_hash << "\n";
  out << "p,b,effort,welfare,dW_dp,dW_db,negative_effort\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const auto& g : grid) {
    out << num(g.p) << "," << num(g.b) << "," << num(g.effort) << "," << num(g.welfare) << ","
        << num(g.dW_dp) << "," << num(g.dW_db) << "," << (g.negative_effort ? "true" : "false")
        << "\n";
  }
}

}  // namespace calibench
