#include "core/analysis.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

namespace {

constexpr double kIrlsTolerance = 1e-8;
constexpr int kIrlsMaxIterations = 100;
constexpr double kSeparationProbability = 1e-10;
constexpr double kSeparationCoefficient = 20.0;

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t distribution(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(distribution, std::abs(t)));
}

std::vector<std::string> design_terms() {
  std::vector<std::string> terms;
  terms.push_back("(intercept)");
  for (GeneralIdentity identity : kAllIdentities) terms.push_back(to_string(identity));
  terms.push_back("genai");
  terms.push_back("has_slur");
  terms.push_back("word_length");
  return terms;
}

}  // namespace

std::vector<double> standardize(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::compute, "standardize: empty input");
  double mean = 0;
  for (double value : values) mean += value;
  mean /= static_cast<double>(values.size());
  double variance = 0;
  for (double value : values) {
    double d = value - mean;
    variance += d * d;
  }
  variance /= static_cast<double>(values.size());  // population variance
  if (variance == 0.0) {
    throw Error(ErrorKind::compute, "standardize: zero variance");
  }
  double sd = std::sqrt(variance);
  std::vector<double> out;
  out.reserve(values.size());
  for (double value : values) out.push_back((value - mean) / sd);
  return out;
}

DesignMatrix build_design(std::span<const EvalRecord> records, RegressionTarget target) {
  std::vector<const EvalRecord*> rows;
  for (const EvalRecord& record : records) {
    if (record.should_flag) continue;  // true negatives only
    if (target == RegressionTarget::false_positive && !record.predicted_flag) continue;
    if (target == RegressionTarget::score && !record.worst_score) continue;
    rows.push_back(&record);
  }
  const long n = static_cast<long>(rows.size());
  if (n < kDesignFeatureCount + 2) {
    throw Error(ErrorKind::compute,
                "design needs at least " + std::to_string(kDesignFeatureCount + 2) +
                    " true-negative rows, have " + std::to_string(n));
  }

  std::vector<double> word_counts;
  word_counts.reserve(static_cast<std::size_t>(n));
  for (const EvalRecord* row : rows) word_counts.push_back(row->word_count);
  std::vector<double> word_length_z;
  try {
    word_length_z = standardize(word_counts);
  } catch (const Error&) {
    throw Error(ErrorKind::compute, "word counts have zero variance; cannot standardize");
  }

  DesignMatrix design;
  design.terms = design_terms();
  const long p = static_cast<long>(design.terms.size());
  design.X.resize(n, p);
  design.y.resize(n);
  for (long r = 0; r < n; ++r) {
    const EvalRecord& record = *rows[static_cast<std::size_t>(r)];
    long c = 0;
    design.X(r, c++) = 1.0;
    for (GeneralIdentity identity : kAllIdentities) {
      design.X(r, c++) = record.identities.contains(identity) ? 1.0 : 0.0;
    }
    design.X(r, c++) = record.family == Family::genai ? 1.0 : 0.0;
    design.X(r, c++) = record.has_slur ? 1.0 : 0.0;
    design.X(r, c++) = word_length_z[static_cast<std::size_t>(r)];
    design.y(r) = target == RegressionTarget::false_positive
                      ? (*record.predicted_flag ? 1.0 : 0.0)
                      : *record.worst_score;
  }
  return design;
}

DesignMatrix drop_constant_columns(const DesignMatrix& design,
                                   std::vector<std::string>* dropped) {
  std::vector<long> keep;
  for (long j = 0; j < design.X.cols(); ++j) {
    bool constant = j != 0 && design.X.col(j).maxCoeff() == design.X.col(j).minCoeff();
    if (constant) {
      if (dropped) dropped->push_back(design.terms[static_cast<std::size_t>(j)]);
    } else {
      keep.push_back(j);
    }
  }
  if (keep.size() == static_cast<std::size_t>(design.X.cols())) return design;
  DesignMatrix reduced;
  reduced.X.resize(design.X.rows(), static_cast<long>(keep.size()));
  reduced.y = design.y;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    reduced.X.col(static_cast<long>(c)) = design.X.col(keep[c]);
    reduced.terms.push_back(design.terms[static_cast<std::size_t>(keep[c])]);
  }
  return reduced;
}

namespace {

double logistic_log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0;
  for (long i = 0; i < eta.size(); ++i) {
    // log sigma(eta) and log(1 - sigma(eta)) without overflow
    double e = eta(i);
    double log1pexp = e > 30 ? e : std::log1p(std::exp(e));
    ll += y(i) * e - log1pexp;
  }
  return ll;
}

}  // namespace

RegressionFit fit_logistic(const DesignMatrix& design) {
  const long n = design.X.rows();
  const long p = design.X.cols();
  if (design.y.size() != n) throw Error(ErrorKind::validation, "design shape mismatch");
  bool has_zero = false, has_one = false;
  for (long i = 0; i < n; ++i) {
    if (design.y(i) == 0.0) has_zero = true;
    else if (design.y(i) == 1.0) has_one = true;
    else throw Error(ErrorKind::validation, "logistic response must be 0/1");
  }
  if (!has_zero || !has_one) {
    throw Error(ErrorKind::compute, "logistic response needs both classes present");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  RegressionFit fit;
  double ll = logistic_log_likelihood(eta, design.y);
  fit.log_likelihood_path.push_back(ll);

  Eigen::MatrixXd information(p, p);
  for (int iteration = 1; iteration <= kIrlsMaxIterations; ++iteration) {
    fit.iterations = iteration;
    Eigen::VectorXd mu(n), w(n);
    bool boundary = false;
    for (long i = 0; i < n; ++i) {
      double m = 1.0 / (1.0 + std::exp(-eta(i)));
      mu(i) = m;
      w(i) = m * (1.0 - m);
      if (m < kSeparationProbability || m > 1.0 - kSeparationProbability) boundary = true;
    }
    if (boundary && beta.cwiseAbs().maxCoeff() > kSeparationCoefficient) {
      long worst = 0;
      beta.cwiseAbs().maxCoeff(&worst);
      throw Error(ErrorKind::compute,
                  "quasi-separation detected: coefficient for '" + design.terms[worst] +
                      "' diverges with fitted probabilities at the boundary");
    }

    Eigen::MatrixXd weighted = design.X.transpose() * w.asDiagonal();
    information = weighted * design.X;
    Eigen::VectorXd gradient = design.X.transpose() * (design.y - mu);
    Eigen::LDLT<Eigen::MatrixXd> solver(information);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorKind::compute, "singular information matrix in IRLS");
    }
    Eigen::VectorXd step = solver.solve(gradient);

    // Step halving keeps the log-likelihood non-decreasing.
    double step_scale = 1.0;
    Eigen::VectorXd candidate;
    Eigen::VectorXd candidate_eta;
    double candidate_ll = 0;
    for (int halving = 0; halving < 32; ++halving) {
      candidate = beta + step_scale * step;
      candidate_eta = design.X * candidate;
      candidate_ll = logistic_log_likelihood(candidate_eta, design.y);
      if (candidate_ll >= ll) break;
      step_scale /= 2;
    }
    if (candidate_ll < ll) {
      candidate = beta;
      candidate_eta = eta;
      candidate_ll = ll;
    }

    double max_change = (candidate - beta).cwiseAbs().maxCoeff();
    beta = candidate;
    eta = candidate_eta;
    ll = candidate_ll;
    fit.log_likelihood_path.push_back(ll);
    if (max_change < kIrlsTolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    // Diverging fits without a boundary probability still end here.
    bool boundary = false;
    for (long i = 0; i < n; ++i) {
      double m = 1.0 / (1.0 + std::exp(-eta(i)));
      if (m < kSeparationProbability || m > 1.0 - kSeparationProbability) boundary = true;
    }
    if (boundary) {
      long worst = 0;
      beta.cwiseAbs().maxCoeff(&worst);
      throw Error(ErrorKind::compute,
                  "quasi-separation detected: coefficient for '" + design.terms[worst] +
                      "' diverges with fitted probabilities at the boundary");
    }
    throw Error(ErrorKind::compute, "IRLS did not converge in " +
                                        std::to_string(kIrlsMaxIterations) + " iterations");
  }

  Eigen::MatrixXd covariance = information.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  for (long j = 0; j < p; ++j) {
    Coefficient coefficient;
    coefficient.name = design.terms[static_cast<std::size_t>(j)];
    coefficient.estimate = beta(j);
    coefficient.std_error = std::sqrt(covariance(j, j));
    coefficient.statistic =
        coefficient.std_error > 0
            ? coefficient.estimate / coefficient.std_error
            : (coefficient.estimate == 0 ? 0 : std::numeric_limits<double>::infinity());
    coefficient.p_value = coefficient.std_error > 0
                              ? normal_two_sided_p(coefficient.statistic)
                              : (coefficient.estimate == 0 ? 1.0 : 0.0);
    coefficient.stars = significance_stars(coefficient.p_value);
    fit.coefficients.push_back(std::move(coefficient));
  }
  return fit;
}

RegressionFit fit_linear(const DesignMatrix& design) {
  const long n = design.X.rows();
  const long p = design.X.cols();
  if (design.y.size() != n) throw Error(ErrorKind::validation, "design shape mismatch");
  if (n <= p) throw Error(ErrorKind::compute, "not enough rows for OLS");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    // Pivot order puts the dependent columns last.
    std::string names;
    const auto& permutation = qr.colsPermutation().indices();
    for (long j = qr.rank(); j < p; ++j) {
      if (!names.empty()) names += ", ";
      names += design.terms[static_cast<std::size_t>(permutation(j))];
    }
    throw Error(ErrorKind::compute, "design is rank deficient; collinear columns: " + names);
  }

  Eigen::VectorXd beta = qr.solve(design.y);
  Eigen::VectorXd residuals = design.y - design.X * beta;
  double rss = residuals.squaredNorm();
  double sigma2 = rss / static_cast<double>(n - p);
  Eigen::MatrixXd xtx_inverse =
      (design.X.transpose() * design.X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));

  RegressionFit fit;
  fit.converged = true;
  fit.iterations = 1;
  double dof = static_cast<double>(n - p);
  for (long j = 0; j < p; ++j) {
    Coefficient coefficient;
    coefficient.name = design.terms[static_cast<std::size_t>(j)];
    coefficient.estimate = beta(j);
    double variance = sigma2 * xtx_inverse(j, j);
    coefficient.std_error = variance > 0 ? std::sqrt(variance) : 0.0;
    if (coefficient.std_error > 0) {
      coefficient.statistic = coefficient.estimate / coefficient.std_error;
      coefficient.p_value = student_t_two_sided_p(coefficient.statistic, dof);
    } else {
      coefficient.statistic = coefficient.estimate == 0
                                  ? 0
                                  : std::numeric_limits<double>::infinity() *
                                        (coefficient.estimate > 0 ? 1 : -1);
      coefficient.p_value = coefficient.estimate == 0 ? 1.0 : 0.0;
    }
    coefficient.stars = significance_stars(coefficient.p_value);
    fit.coefficients.push_back(std::move(coefficient));
  }
  return fit;
}

std::string significance_stars(double p) {
  if (p < 0.0 || p > 1.0) throw Error(ErrorKind::validation, "p-value outside [0,1]");
  if (p < 0.005) return "***";
  if (p < 0.05) return "**";
  return "";
}

void write_fit_csv(const std::string& path, const RegressionFit& fit) {
  std::ostringstream out;
  out << "term,estimate,std_error,statistic,p_value,stars\n";
  for (const Coefficient& coefficient : fit.coefficients) {
    out << csv_escape(coefficient.name) << ',' << format_double(coefficient.estimate) << ','
        << format_double(coefficient.std_error) << ',' << format_double(coefficient.statistic)
        << ',' << format_double(coefficient.p_value) << ',' << coefficient.stars << '\n';
  }
  write_file(path, out.str());
}

RegressionFit read_fit_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  RegressionFit fit;
  fit.converged = true;
  for (std::size_t row = 0; row < table.row_count(); ++row) {
    Coefficient coefficient;
    coefficient.name = table.cell(row, "term");
    coefficient.estimate = std::stod(table.cell(row, "estimate"));
    coefficient.std_error = std::stod(table.cell(row, "std_error"));
    coefficient.statistic = std::stod(table.cell(row, "statistic"));
    coefficient.p_value = std::stod(table.cell(row, "p_value"));
    coefficient.stars = table.cell(row, "stars");
    fit.coefficients.push_back(std::move(coefficient));
  }
  return fit;
}

}  // namespace supaudit
