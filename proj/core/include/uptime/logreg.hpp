#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uptime/features.hpp"

namespace uptime {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bayesian logistic regression inputs. The first column of `x` is the
/// intercept (all ones).
struct LogisticData {
  RowMatrix x;
  Eigen::VectorXd y;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
};

/// Intercept column followed by the selected feature columns of `dm`
/// (all five when `columns` is empty).
LogisticData to_logistic_data(const DesignMatrix& dm,
                              std::span<const std::size_t> columns = {});

/// N(mean, covariance) prior over the coefficients (intercept first).
struct GaussianPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  /// m0 = 0, S0 = alpha * I.
  static GaussianPrior isotropic(Eigen::Index dim, double alpha = 1e4);
  /// Throws DataError unless the covariance is symmetric positive definite.
  void validate() const;
  Eigen::MatrixXd precision() const;
};

/// Laplace approximation N(mean, covariance) of the coefficient posterior.
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  bool converged = false;
  int iterations = 0;
  double final_grad_norm = 0.0;

  GaussianPrior as_prior() const { return {mean, covariance}; }
};

/// Numerically stable log(sigmoid(a)); finite for any finite a.
double log_sigmoid(double a);
double sigmoid(double a);

/// Sum of Bernoulli log-likelihoods plus -1/2 (b-m0)' S0^-1 (b-m0). The
/// Gaussian normalising constant is omitted.
double log_posterior(const Eigen::VectorXd& beta, const LogisticData& data,
                     const GaussianPrior& prior);
/// X'(y - l+) - S0^-1 (b - m0).
Eigen::VectorXd gradient(const Eigen::VectorXd& beta, const LogisticData& data,
                         const GaussianPrior& prior);
/// Hessian of the log posterior: -(X' L X + S0^-1), L_ii = l+ l-.
Eigen::MatrixXd hessian(const Eigen::VectorXd& beta, const LogisticData& data,
                        const GaussianPrior& prior);
/// Diagonal of L at beta.
Eigen::VectorXd lambda_weights(const Eigen::VectorXd& beta, const LogisticData& data);

struct FitOptions {
  double grad_tol = 1e-6;  // on the infinity norm of the gradient
  int max_iter = 100;
  int max_halvings = 20;
};

/// Newton-Raphson to the posterior mode, starting from the prior mean.
/// A step that lowers the log posterior is halved (up to max_halvings
/// times). When max_iter is reached the result is returned with
/// converged == false.
GaussianPosterior fit_laplace(const LogisticData& data, const GaussianPrior& prior,
                              const FitOptions& options = {});

/// Sequential fits where each posterior becomes the next prior. Empty
/// batches are skipped.
GaussianPosterior fit_batched(std::span<const LogisticData> batches,
                              const GaussianPrior& prior,
                              const FitOptions& options = {});

/// sigma(m_a / sqrt(1 + pi s_a^2 / 8)).
double predictive_probability(double m_a, double s2_a);
/// Predictive probability for a covariate vector that includes the
/// intercept entry.
double predict(const GaussianPosterior& posterior, const Eigen::VectorXd& x);

/// A fitted posterior together with the feature pipeline it expects.
struct TrainedModel {
  GaussianPosterior posterior;
  Standardization standardization;
  std::vector<std::size_t> columns{0, 1, 2, 3, 4};

  /// Predictive probability for raw (unstandardized) features.
  double predict_raw(const FeatureVector& raw) const;
};

// Model file: lines m=..., S=... (row-major), standardize=0/1, means=...,
// sds=..., columns=..., converged=..., iterations=...; 17 significant digits.
std::string format_model(const TrainedModel& model);
TrainedModel parse_model(std::string_view content);
void write_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel read_model(const std::filesystem::path& path);

}  // namespace uptime
