#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "core/eval.hpp"

namespace supaudit {

enum class RegressionTarget : uint8_t { false_positive, score };

// Design built from true negatives only: intercept, the nine identity
// indicators, genai, has_slur, and word count standardized to mean 0 and unit
// population variance over the included rows.
struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> terms;  // column names; terms[0] == "(intercept)"
};

inline constexpr int kDesignFeatureCount = 12;  // excluding the intercept

// Mean 0, unit population variance. Errors on zero variance.
std::vector<double> standardize(const std::vector<double>& values);

DesignMatrix build_design(std::span<const EvalRecord> records, RegressionTarget target);

// Removes non-intercept columns that are constant over the rows (e.g. the
// genai indicator on a single-family corpus); their names are appended to
// `dropped`. The fit operations themselves stay strict about rank.
DesignMatrix drop_constant_columns(const DesignMatrix& design,
                                   std::vector<std::string>* dropped = nullptr);

struct Coefficient {
  std::string name;
  double estimate = 0;
  double std_error = 0;
  double statistic = 0;  // Wald z (logistic) or t (linear)
  double p_value = 1;
  std::string stars;
};

struct RegressionFit {
  std::vector<Coefficient> coefficients;
  bool converged = false;
  int iterations = 0;
  // One entry per IRLS iteration; non-decreasing by construction.
  std::vector<double> log_likelihood_path;
};

// Maximum-likelihood logistic fit via IRLS with step halving. Converges when
// the largest absolute coefficient change drops below 1e-8 (100 iteration
// cap). Standard errors come from the inverse observed information; p-values
// are two-sided Wald z.
RegressionFit fit_logistic(const DesignMatrix& design);

// Ordinary least squares with sigma^2 (X'X)^-1 standard errors and two-sided
// t p-values. Rank-deficient designs are an error naming the collinear
// columns.
RegressionFit fit_linear(const DesignMatrix& design);

// "***" below 0.005, "**" below 0.05, empty otherwise.
std::string significance_stars(double p);

void write_fit_csv(const std::string& path, const RegressionFit& fit);
RegressionFit read_fit_csv(const std::string& path);

}  // namespace supaudit
