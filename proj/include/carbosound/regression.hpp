#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carbosound {

// Parameter layout per family:
//   Linear      [slope, intercept]        slope*x + intercept
//   ExpDecay    [A, b]                    A*exp(-b*x)
//   ExpOffset   [A, B, c]                 A - B*exp(-c*x)
//   TwoTerm     [A, b, C, d]              A*exp(b*x) + C*exp(d*x)   (signed rates)
//   Saturation  [mu]                      1 - exp(-mu*x)
enum class ModelFamily { Linear, ExpDecay, ExpOffset, TwoTerm, Saturation };

std::string_view to_string(ModelFamily f);
ModelFamily parse_family(std::string_view name);  // throws InvalidArgument
std::size_t param_count(ModelFamily f);
double evaluate(ModelFamily f, std::span<const double> params, double x);

struct FitResult {
  ModelFamily family{ModelFamily::Linear};
  std::vector<double> params;
  double r_squared{0.0};
  double pearson_r{0.0};
  std::size_t n_iter{0};
  bool converged{false};
  // Set when the data carry no information about the model's shape
  // (constant y, vanishing amplitude).
  bool degenerate{false};
  // Sum of squared residuals after each accepted iteration, starting with
  // the initial guess.
  std::vector<double> ss_trace;

  double predict(double x) const { return evaluate(family, params, x); }
};

struct FitOptions {
  std::size_t max_iter{500};
  double step_tol{1e-10};
  double ss_tol{1e-12};
  // Seeded multistart on top of the deterministic initialisation. Zero
  // disables it.
  std::size_t multistart{0};
  unsigned long long multistart_seed{0};
};

FitResult linear_fit(std::span<const double> x, std::span<const double> y);

FitResult fit(ModelFamily family, std::span<const double> x, std::span<const double> y,
              std::optional<std::vector<double>> init = std::nullopt, const FitOptions& opts = {});

double r_squared(std::span<const double> y, std::span<const double> y_hat);

// Pearson correlation; returns 0 when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// Two-sided p-value of H0: rho = 0 from a sample correlation r over n pairs
// (t = r*sqrt((n-2)/(1-r^2)), Student t with n-2 degrees of freedom).
double correlation_p_value(double r, std::size_t n);

// Externally studentised (deleted) residuals of a fitted model, using the hat
// matrix of the Jacobian at the solution. Empty when the residual variance
// vanishes or fewer than two degrees of freedom remain.
std::vector<double> studentized_residuals(const FitResult& fit, std::span<const double> x,
                                          std::span<const double> y);

// For TwoTerm fits: index (0 or 1) of the term with the larger |amplitude *
// rate| at x = 0, and its signed rate.
std::size_t dominant_term(const FitResult& two_term);
double dominant_rate(const FitResult& two_term);

}  // namespace carbosound
