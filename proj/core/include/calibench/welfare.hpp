#pragma once

/// Welfare model of acting on miscalibrated beliefs. An agent believes a
/// project succeeds with probability p+b (true probability p, bias b), picks
/// effort e so that marginal cost c'(e) equals the perceived marginal payoff
/// (p+b)·π, and realized welfare is evaluated at the true p:
///   W(p, b) = p·π·e(p+b) − c(e(p+b)).
/// The module computes optimal effort, welfare, its analytic derivatives,
/// a second-order Taylor approximation for simultaneous changes in p and b,
/// and the four sign conditions that classify when extra accuracy or extra
/// bias helps or hurts.

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace calibench {

struct CostSpec {
  enum class Kind { Exponential, Custom };
  Kind kind = Kind::Exponential;

  /// Exponential cost c(e) = exp(e·γ)/γ with γ > 0.
  double gamma = 1.0;

  /// Custom cost: c, c', c'' must be evaluable on [0, ∞) with c' increasing.
  std::function<double(double)> c;
  std::function<double(double)> c_prime;
  std::function<double(double)> c_double_prime;

  static CostSpec exponential(double gamma);
  static CostSpec custom(std::function<double(double)> c, std::function<double(double)> c_prime,
                         std::function<double(double)> c_double_prime);
};

/// Scenario with the belief cap p + b ∈ (0, 1] enforced at construction
/// (UsageError otherwise). p ∈ [0, 1], π > 0.
struct WelfareScenario {
  WelfareScenario(double p, double b, double pi, CostSpec cost);

  double p;
  double b;
  double pi;
  CostSpec cost;
};

struct EffortResult {
  double effort = 0.0;
  /// Exponential cost with π(p+b) ≤ 1 yields e ≤ 0; returned unclamped with
  /// this flag set so callers can decide how to treat the corner.
  bool negative_effort = false;
};

/// Solves c'(e) = (p+b)·π. Exponential costs use the closed form
/// e = ln(π(p+b))/γ. Custom costs bisect on [0, hi] with hi doubled until
/// the root is bracketed, to |c'(e) − (p+b)π| ≤ 1e−10·(p+b)π; an
/// unbracketable root raises DataError.
EffortResult optimal_effort(const WelfareScenario& s);

/// True welfare W = p·π·e − c(e) at the perceived-optimal effort.
double welfare(const WelfareScenario& s);

/// Perceived objective V(e) = (p+b)·π·e − c(e), for envelope checks.
double perceived_utility(const WelfareScenario& s, double effort);

struct WelfareDerivatives {
  double e_prime = 0.0;  ///< de/d(p+b): 1/(γ(p+b)) exponential, π/c''(e) custom
  double dW_db = 0.0;    ///< −b·π·e′  (never positive)
  double dW_dp = 0.0;    ///< π·e − b·π·e′
  bool e_prime_infinite = false;  ///< custom cost with c''(e) = 0
};

WelfareDerivatives welfare_derivatives(const WelfareScenario& s);

struct TaylorTerms {
  double dp = 0.0;
  double db = 0.0;
  double first_order_p = 0.0;   ///< π(e − b·e′)·Δp
  double second_order_p = 0.0;  ///< π(e′/2)·Δp²
  double first_order_b = 0.0;   ///< −π·b·e′·Δb
  double second_order_b = 0.0;  ///< −π(e′/2)·Δb²
  double total = 0.0;
};

/// Second-order approximation of W(p+Δp, b+Δb) − W(p, b), treating effort
/// curvature e'' as negligible. When Δp = Δb the two second-order terms
/// cancel exactly.
TaylorTerms taylor_delta(const WelfareScenario& s, double dp, double db);

struct ResultChecks {
  /// Inelastic effort (e′ = 0): welfare unambiguously increases in p.
  bool effort_inelastic = false;

  /// Condition for welfare to *decrease* as true accuracy rises:
  /// π·e < b·π·e′ (exponential form: ln(π(p+b)) < b/(p+b)).
  struct {
    double lhs = 0.0;  ///< π·e
    double rhs = 0.0;  ///< b·π·e′
    bool welfare_decreasing_in_p = false;
    std::optional<double> exp_lhs;  ///< ln(π(p+b)) when cost is exponential
    std::optional<double> exp_rhs;  ///< b/(p+b)
  } accuracy_condition;

  /// Condition for a combined change Δb = α·Δp (α ≥ 1) to reduce welfare:
  /// π·e < (1+α)·b·π·e′.
  struct {
    double alpha = 1.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool combined_reduces_welfare = false;
    std::optional<double> exp_lhs;
    std::optional<double> exp_rhs;  ///< (1+α)·b/(p+b)
  } combined_condition;

  /// Second-order welfare gain from removing the bias entirely:
  /// ΔW* = π·b²·e′/2.
  double debias_gain = 0.0;
};

/// Evaluates the four sign conditions. Requires dp > 0 and alpha ≥ 1.
ResultChecks check_results(const WelfareScenario& s, double dp, double alpha);

struct WelfareGridPoint {
  double p = 0.0;
  double b = 0.0;
  double effort = 0.0;
  double welfare = 0.0;
  double dW_dp = 0.0;
  double dW_db = 0.0;
  bool negative_effort = false;
};

/// Sweep over (p, b) pairs for heatmaps; combinations violating the belief
/// cap are skipped.
std::vector<WelfareGridPoint> welfare_grid(double pi, const CostSpec& cost,
                                           const std::vector<double>& p_values,
                                           const std::vector<double>& b_values);

void save_welfare_grid_csv(const std::vector<WelfareGridPoint>& grid, const std::string& path,
                           const std::string& manifest_hash = "");

}  // namespace calibench
