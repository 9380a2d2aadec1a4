#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "populations.hpp"
#include "uptime/error.hpp"
#include "uptime/logreg.hpp"
#include "uptime/parallel.hpp"

using namespace uptime;

namespace {

LogisticData intercept_only(std::size_t n, std::size_t positives) {
  LogisticData d;
  d.x = RowMatrix::Ones(static_cast<Eigen::Index>(n), 1);
  d.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < positives; ++i) d.y(static_cast<Eigen::Index>(i)) = 1;
  return d;
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Sigmoid, StableForLargeArguments) {
  EXPECT_TRUE(std::isfinite(log_sigmoid(-800)));
  EXPECT_NEAR(log_sigmoid(-800), -800, 1e-9);
  EXPECT_EQ(log_sigmoid(800), 0.0);
  EXPECT_EQ(sigmoid(0), 0.5);
  EXPECT_NEAR(sigmoid(-800), 0.0, 1e-300);
}

TEST(LogPosterior, InterceptOnlyAtZero) {
  const auto d = intercept_only(10, 4);
  const auto prior = GaussianPrior::isotropic(1);
  EXPECT_NEAR(log_posterior(Eigen::VectorXd::Zero(1), d, prior), 10 * std::log(0.5), 1e-12);
}

TEST(LogPosterior, SaturatedCorrectPredictionsApproachZero) {
  LogisticData d;
  d.x = RowMatrix(2, 1);
  d.x << 1, -1;
  d.y = Eigen::Vector2d(1, 0);
  GaussianPrior flat{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1) * 1e300};
  const double v = log_posterior(Eigen::VectorXd::Constant(1, 500), d, flat);
  EXPECT_LE(v, 0.0);
  EXPECT_GT(v, -1e-200);
}

TEST(LogPosterior, MatchesDirectEvaluation) {
  const auto d = testpop::random_logistic(50, 3, 4);
  const auto prior = GaussianPrior::isotropic(4, 2.0);
  const Eigen::Vector4d beta(0.3, -0.2, 1.1, 0.5);
  EXPECT_NEAR(log_posterior(beta, d, prior),
              static_cast<double>(oracle::log_posterior(beta, d, prior)), 1e-10);
  const Eigen::Vector4d huge = beta * 400;
  EXPECT_TRUE(std::isfinite(log_posterior(huge, d, prior)));
}

TEST(Gradient, FiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = testpop::random_logistic(200, 5, 100 + seed);
    const auto prior = GaussianPrior::isotropic(6);
    Rng rng(seed);
    Eigen::VectorXd beta(6);
    for (auto& b : beta) b = 2 * uniform01(rng) - 1;
    const auto g = gradient(beta, d, prior);
    EXPECT_LT(max_rel(g, oracle::fd_gradient(beta, d, prior)), 1e-5) << seed;
    EXPECT_LT(max_rel(hessian(beta, d, prior), oracle::fd_hessian(beta, d, prior)), 1e-5)
        << seed;
  }
}

TEST(Gradient, BalancedSymmetricDataHasZeroInterceptComponent) {
  const auto d = intercept_only(8, 4);
  EXPECT_EQ(gradient(Eigen::VectorXd::Zero(1), d, GaussianPrior::isotropic(1))(0), 0.0);
}

TEST(Gradient, LambdaIsLPlusLMinus) {
  const auto d = testpop::random_logistic(30, 2, 9);
  const Eigen::Vector3d beta(0.1, -0.7, 0.4);
  const auto w = lambda_weights(beta, d);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double l = 1 / (1 + std::exp(-d.x.row(i).dot(beta)));
    EXPECT_NEAR(w(i), l * (1 - l), 1e-15);
  }
}

TEST(FitLaplace, InterceptOnlyBalanced) {
  const auto post = fit_laplace(intercept_only(1000, 500), GaussianPrior::isotropic(1));
  EXPECT_TRUE(post.converged);
  EXPECT_LT(std::abs(post.mean(0)), 1e-3);
}

TEST(FitLaplace, MatchesCoordinateSearchMap) {
  const auto d = testpop::random_logistic(200, 2, 2024);
  const auto prior = GaussianPrior::isotropic(3);
  const auto post = fit_laplace(d, prior);
  ASSERT_TRUE(post.converged);
  EXPECT_LT(post.final_grad_norm, 1e-6);
  const auto map = oracle::coordinate_search_map(d, prior);
  EXPECT_LT((post.mean - map).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(FitLaplace, InformativePriorDominates) {
  const auto d = testpop::random_logistic(200, 2, 5);
  GaussianPrior prior{Eigen::Vector3d(0.5, -0.25, 0.1), Eigen::Matrix3d::Identity() * 1e-8};
  const auto post = fit_laplace(d, prior);
  EXPECT_LT((post.mean - prior.mean).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(FitLaplace, CovarianceIsInverseNegativeHessian) {
  const auto d = testpop::random_logistic(300, 5, 6);
  const auto prior = GaussianPrior::isotropic(6);
  const auto post = fit_laplace(d, prior);
  const Eigen::MatrixXd prod = post.covariance * (-hessian(post.mean, d, prior));
  EXPECT_LT((prod - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((post.covariance - post.covariance.transpose()).cwiseAbs().maxCoeff(),
            1e-10 * post.covariance.cwiseAbs().maxCoeff());
}

TEST(FitLaplace, RowPermutationInvariant) {
  const auto d = testpop::random_logistic(400, 4, 7);
  LogisticData r = d;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    r.x.row(i) = d.x.row(d.rows() - 1 - i);
    r.y(i) = d.y(d.rows() - 1 - i);
  }
  const auto prior = GaussianPrior::isotropic(5);
  EXPECT_LT((fit_laplace(d, prior).mean - fit_laplace(r, prior).mean).cwiseAbs().maxCoeff(),
            1e-6);
}

TEST(FitLaplace, IterationCapReportsNotConverged) {
  const auto d = testpop::random_logistic(300, 3, 8);
  FitOptions opt;
  opt.max_iter = 1;
  const auto post = fit_laplace(d, GaussianPrior::isotropic(4), opt);
  EXPECT_FALSE(post.converged);
  EXPECT_EQ(post.iterations, 1);
}

TEST(FitLaplace, IndependentOfThreadCount) {
  const auto d = testpop::random_logistic(40000, 5, 10);
  const auto prior = GaussianPrior::isotropic(6);
  set_thread_count(1);
  const auto a = fit_laplace(d, prior);
  set_thread_count(4);
  const auto b = fit_laplace(d, prior);
  set_thread_count(0);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.covariance, b.covariance);
}

TEST(FitLaplace, DimensionMismatchAndBadPrior) {
  const auto d = testpop::random_logistic(20, 2, 1);
  EXPECT_THROW(fit_laplace(d, GaussianPrior::isotropic(2)), DataError);
  GaussianPrior bad{Eigen::VectorXd::Zero(3), -Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_THROW(fit_laplace(d, bad), DataError);
}

TEST(FitBatched, SingleBatchAndEmptyBatch) {
  const auto d = testpop::random_logistic(500, 3, 11);
  const auto prior = GaussianPrior::isotropic(4);
  const auto single = fit_laplace(d, prior);
  const LogisticData one[] = {d};
  EXPECT_EQ(fit_batched(one, prior).mean, single.mean);
  LogisticData empty;
  empty.x.resize(0, 4);
  empty.y.resize(0);
  const LogisticData two[] = {d, empty};
  EXPECT_EQ(fit_batched(two, prior).mean, single.mean);
}

TEST(FitBatched, HalvesApproximateSinglePass) {
  const auto d = testpop::random_logistic(2000, 3, 12);
  const auto prior = GaussianPrior::isotropic(4);
  LogisticData h1, h2;
  h1.x = d.x.topRows(1000);
  h1.y = d.y.head(1000);
  h2.x = d.x.bottomRows(1000);
  h2.y = d.y.tail(1000);
  const LogisticData halves[] = {h1, h2};
  const auto batched = fit_batched(halves, prior);
  const auto single = fit_laplace(d, prior);
  for (double a = -2; a <= 2; a += 0.5)
    for (double b = -2; b <= 2; b += 0.5) {
      const Eigen::Vector4d x(1, a, b, a * b / 2);
      EXPECT_NEAR(predict(batched, x), predict(single, x), 0.02);
    }
}

TEST(Predict, ClosedForms) {
  EXPECT_EQ(predictive_probability(0, 3.7), 0.5);
  EXPECT_NEAR(predictive_probability(2, 0), 0.880797, 1e-6);
  EXPECT_NEAR(predictive_probability(2, 8 / std::numbers::pi), sigmoid(std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(predictive_probability(2, 8 / std::numbers::pi), 0.804430, 1e-6);
}

TEST(Predict, MonotoneInMeanAndVariance) {
  for (double s2 = 0; s2 < 10; s2 += 0.5)
    for (double m = -5; m < 5; m += 0.25)
      ASSERT_LT(predictive_probability(m, s2), predictive_probability(m + 0.25, s2));
  for (double s2 = 0; s2 < 10; s2 += 0.5)
    ASSERT_GT(predictive_probability(1.5, s2), predictive_probability(1.5, s2 + 0.5));
}

TEST(Predict, StandardizationBarelyChangesDecisions) {
  const auto m = testpop::random_matrix(20, 2016, 0.4, 3);
  auto dm_raw = [&](bool standardize) {
    std::vector<std::size_t> users(20);
    for (std::size_t i = 0; i < 20; ++i) users[i] = i;
    return build_design_matrix(m, {0, 1008}, {1008, 2016}, users, standardize);
  };
  const auto raw = dm_raw(false), std_dm = dm_raw(true);
  TrainedModel a, b;
  a.posterior = fit_laplace(to_logistic_data(raw), GaussianPrior::isotropic(6));
  a.standardization = raw.standardization;
  b.posterior = fit_laplace(to_logistic_data(std_dm), GaussianPrior::isotropic(6));
  b.standardization = std_dm.standardization;
  for (std::size_t r = 0; r < raw.size(); r += 97)
    EXPECT_NEAR(a.predict_raw(raw.features[r]), b.predict_raw(raw.features[r]), 1e-3);
}

TEST(ModelFile, RoundTrip) {
  const auto d = testpop::random_logistic(100, 5, 13);
  TrainedModel m;
  m.posterior = fit_laplace(d, GaussianPrior::isotropic(6));
  m.standardization.enabled = true;
  m.standardization.means = {0.1, 0.2, 0.3, 0.4, 0.5};
  m.standardization.sds = {1, 2, 3, 4, 5};
  m.standardization.constant[2] = true;
  const auto text = format_model(m);
  EXPECT_EQ(text.rfind("m=", 0), 0u);
  const auto back = parse_model(text);
  EXPECT_EQ(back.posterior.mean, m.posterior.mean);
  EXPECT_EQ(back.posterior.covariance, m.posterior.covariance);
  EXPECT_EQ(back.standardization.sds, m.standardization.sds);
  EXPECT_EQ(back.standardization.constant, m.standardization.constant);
  EXPECT_EQ(format_model(back), text);
  const FeatureVector f{0.3, 0.6, 0.2, 0.9, 0.4};
  EXPECT_EQ(back.predict_raw(f), m.predict_raw(f));
}
