#include "uptime/logreg.hpp"

#include <cmath>
#include <numbers>

#include "uptime/error.hpp"
#include "uptime/parallel.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

namespace {

// Reductions are accumulated per fixed-size block and combined in block
// order, so the result does not depend on the number of threads.
constexpr Eigen::Index kBlockRows = 8192;

Eigen::Index block_count(Eigen::Index rows) {
  return (rows + kBlockRows - 1) / kBlockRows;
}

void check_dims(const Eigen::VectorXd& beta, const LogisticData& data,
                const GaussianPrior& prior) {
  const auto d = data.dim();
  if (beta.size() != d || prior.mean.size() != d || prior.covariance.rows() != d ||
      prior.covariance.cols() != d || data.y.size() != data.rows())
    throw DataError("dimension mismatch: beta " + std::to_string(beta.size()) +
                    ", data " + std::to_string(d) + ", prior " +
                    std::to_string(prior.mean.size()));
}

struct Accumulated {
  double log_lik = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;  // X' L X
};

enum Need { kValue = 1, kGradient = 2, kInformation = 4 };

Accumulated accumulate(const Eigen::VectorXd& beta, const LogisticData& data,
                       int need) {
  const auto d = data.dim();
  const auto blocks = block_count(data.rows());
  std::vector<Accumulated> partial(static_cast<std::size_t>(blocks));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlockRows;
    const Eigen::Index n = std::min(kBlockRows, data.rows() - begin);
    const auto xb = data.x.middleRows(begin, n);
    const auto yb = data.y.segment(begin, n);
    const Eigen::VectorXd a = xb * beta;
    Accumulated& acc = partial[b];
    if (need & kValue) {
      double s = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        s += yb[i] > 0.5 ? log_sigmoid(a[i]) : log_sigmoid(-a[i]);
      acc.log_lik = s;
    }
    if (need & (kGradient | kInformation)) {
      Eigen::VectorXd resid(n), w(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double lp = sigmoid(a[i]);
        resid[i] = yb[i] - lp;
        w[i] = lp * sigmoid(-a[i]);
      }
      if (need & kGradient) acc.grad = xb.transpose() * resid;
      if (need & kInformation) {
        RowMatrix wx = xb;
        for (Eigen::Index i = 0; i < n; ++i) wx.row(i) *= w[i];
        acc.info = xb.transpose() * wx;
      }
    }
  });
  Accumulated total;
  total.grad = Eigen::VectorXd::Zero(d);
  total.info = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : partial) {
    total.log_lik += p.log_lik;
    if (need & kGradient) total.grad += p.grad;
    if (need & kInformation) total.info += p.info;
  }
  return total;
}

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    throw DataError(std::string(what) + " is not positive definite (min eigenvalue " +
                    text::format_exact(eig.eigenvalues().minCoeff()) + ")");
  }
  return llt;
}

}  // namespace

LogisticData to_logistic_data(const DesignMatrix& dm,
                              std::span<const std::size_t> columns) {
  std::vector<std::size_t> cols(columns.begin(), columns.end());
  if (cols.empty()) cols = {0, 1, 2, 3, 4};
  for (auto c : cols)
    if (c >= kFeatureCount) throw DataError("feature column out of range");
  LogisticData data;
  const auto n = static_cast<Eigen::Index>(dm.size());
  data.x.resize(n, static_cast<Eigen::Index>(cols.size() + 1));
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = dm.features[static_cast<std::size_t>(i)];
    data.x(i, 0) = 1.0;
    for (std::size_t j = 0; j < cols.size(); ++j)
      data.x(i, static_cast<Eigen::Index>(j + 1)) = f[cols[j]];
    data.y[i] = dm.labels[static_cast<std::size_t>(i)];
  }
  return data;
}

GaussianPrior GaussianPrior::isotropic(Eigen::Index dim, double alpha) {
  return {Eigen::VectorXd::Zero(dim), alpha * Eigen::MatrixXd::Identity(dim, dim)};
}

void GaussianPrior::validate() const {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw DataError("prior covariance shape does not match mean");
  if (!covariance.isApprox(covariance.transpose(), 1e-10))
    throw DataError("prior covariance is not symmetric");
  spd_factor(covariance, "prior covariance");
}

Eigen::MatrixXd GaussianPrior::precision() const {
  const auto llt = spd_factor(covariance, "prior covariance");
  return llt.solve(Eigen::MatrixXd::Identity(mean.size(), mean.size()));
}

double log_sigmoid(double a) {
  return a >= 0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a));
}

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double log_posterior(const Eigen::VectorXd& beta, const LogisticData& data,
                     const GaussianPrior& prior) {
  check_dims(beta, data, prior);
  const auto acc = accumulate(beta, data, kValue);
  const Eigen::VectorXd diff = beta - prior.mean;
  const auto llt = spd_factor(prior.covariance, "prior covariance");
  return acc.log_lik - 0.5 * diff.dot(llt.solve(diff));
}

Eigen::VectorXd gradient(const Eigen::VectorXd& beta, const LogisticData& data,
                         const GaussianPrior& prior) {
  check_dims(beta, data, prior);
  const auto acc = accumulate(beta, data, kGradient);
  const auto llt = spd_factor(prior.covariance, "prior covariance");
  return acc.grad - llt.solve(beta - prior.mean);
}

Eigen::MatrixXd hessian(const Eigen::VectorXd& beta, const LogisticData& data,
                        const GaussianPrior& prior) {
  check_dims(beta, data, prior);
  const auto acc = accumulate(beta, data, kInformation);
  return -(acc.info + prior.precision());
}

Eigen::VectorXd lambda_weights(const Eigen::VectorXd& beta, const LogisticData& data) {
  const Eigen::VectorXd a = data.x * beta;
  Eigen::VectorXd w(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) w[i] = sigmoid(a[i]) * sigmoid(-a[i]);
  return w;
}

GaussianPosterior fit_laplace(const LogisticData& data, const GaussianPrior& prior,
                              const FitOptions& options) {
  if (data.rows() == 0) throw DataError("fit_laplace: empty data");
  prior.validate();
  const Eigen::MatrixXd prior_precision = prior.precision();
  Eigen::VectorXd beta = prior.mean;
  check_dims(beta, data, prior);

  GaussianPosterior post;
  auto acc = accumulate(beta, data, kValue | kGradient | kInformation);
  auto objective = [&](const Accumulated& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd diff = b - prior.mean;
    return a.log_lik - 0.5 * diff.dot(prior_precision * diff);
  };
  double value = objective(acc, beta);
  Eigen::VectorXd grad = acc.grad - prior_precision * (beta - prior.mean);

  while (true) {
    post.final_grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (post.final_grad_norm < options.grad_tol) {
      post.converged = true;
      break;
    }
    if (post.iterations >= options.max_iter) break;
    const Eigen::MatrixXd system = acc.info + prior_precision;
    const auto llt = spd_factor(system, "X'LX + S0^-1");
    const Eigen::VectorXd step = llt.solve(grad);

    // Roundoff-level decreases near the mode are not treated as failures.
    const double slack = 1e-12 * (1.0 + std::abs(value));
    double scale = 1.0;
    Eigen::VectorXd next = beta + step;
    auto next_acc = accumulate(next, data, kValue);
    double next_value = objective(next_acc, next);
    for (int h = 0; h < options.max_halvings && next_value < value - slack; ++h) {
      scale *= 0.5;
      next = beta + scale * step;
      next_acc = accumulate(next, data, kValue);
      next_value = objective(next_acc, next);
    }
    beta = next;
    ++post.iterations;
    acc = accumulate(beta, data, kValue | kGradient | kInformation);
    value = objective(acc, beta);
    grad = acc.grad - prior_precision * (beta - prior.mean);
  }

  const Eigen::MatrixXd system = acc.info + prior_precision;
  const auto llt = spd_factor(system, "X'LX + S0^-1");
  post.mean = beta;
  post.covariance = llt.solve(Eigen::MatrixXd::Identity(beta.size(), beta.size()));
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
  return post;
}

GaussianPosterior fit_batched(std::span<const LogisticData> batches,
                              const GaussianPrior& prior, const FitOptions& options) {
  GaussianPosterior post;
  post.mean = prior.mean;
  post.covariance = prior.covariance;
  post.converged = true;
  GaussianPrior current = prior;
  for (const auto& batch : batches) {
    if (batch.dim() != prior.mean.size())
      throw DataError("fit_batched: batch dimension " + std::to_string(batch.dim()) +
                      " does not match prior " + std::to_string(prior.mean.size()));
    if (batch.rows() == 0) continue;
    post = fit_laplace(batch, current, options);
    current = post.as_prior();
  }
  return post;
}

double predictive_probability(double m_a, double s2_a) {
  return sigmoid(m_a / std::sqrt(1.0 + std::numbers::pi * s2_a / 8.0));
}

double predict(const GaussianPosterior& posterior, const Eigen::VectorXd& x) {
  if (x.size() != posterior.mean.size())
    throw DataError("predict: covariate dimension " + std::to_string(x.size()) +
                    " != " + std::to_string(posterior.mean.size()));
  return predictive_probability(x.dot(posterior.mean), x.dot(posterior.covariance * x));
}

double TrainedModel::predict_raw(const FeatureVector& raw) const {
  const FeatureVector f = standardization.apply(raw);
  Eigen::VectorXd x(static_cast<Eigen::Index>(columns.size() + 1));
  x[0] = 1.0;
  for (std::size_t j = 0; j < columns.size(); ++j)
    x[static_cast<Eigen::Index>(j + 1)] = f[columns[j]];
  return predict(posterior, x);
}

std::string format_model(const TrainedModel& model) {
  const auto& p = model.posterior;
  std::string out;
  out += "m=" + text::join_exact(p.mean.data(), static_cast<std::size_t>(p.mean.size())) + "\n";
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> s =
      p.covariance;
  out += "S=" + text::join_exact(s.data(), static_cast<std::size_t>(s.size())) + "\n";
  out += std::string("standardize=") + (model.standardization.enabled ? "1" : "0") + "\n";
  out += "means=" + text::join_exact(model.standardization.means.data(), kFeatureCount) + "\n";
  out += "sds=" + text::join_exact(model.standardization.sds.data(), kFeatureCount) + "\n";
  out += "constant=";
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    out += std::string(j ? "," : "") + (model.standardization.constant[j] ? "1" : "0");
  out += "\ncolumns=";
  for (std::size_t j = 0; j < model.columns.size(); ++j)
    out += (j ? "," : "") + std::to_string(model.columns[j]);
  out += "\nconverged=" + std::string(p.converged ? "1" : "0");
  out += "\niterations=" + std::to_string(p.iterations);
  out += "\nfinal_grad_norm=" + text::format_exact(p.final_grad_norm) + "\n";
  return out;
}

TrainedModel parse_model(std::string_view content) {
  TrainedModel model;
  std::vector<double> m, s;
  bool have_m = false, have_s = false;
  for (auto line : text::lines(content)) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("model: expected key=value");
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    auto fill5 = [&](FeatureVector& dst) {
      const auto v = text::parse_real_list(value, key);
      if (v.size() != kFeatureCount) throw DataError("model: " + std::string(key) + " needs 5 values");
      std::copy(v.begin(), v.end(), dst.begin());
    };
    if (key == "m") {
      m = text::parse_real_list(value, key);
      have_m = true;
    } else if (key == "S") {
      s = text::parse_real_list(value, key);
      have_s = true;
    } else if (key == "standardize") {
      model.standardization.enabled = text::parse_int(value, key) != 0;
    } else if (key == "means") {
      fill5(model.standardization.means);
    } else if (key == "sds") {
      fill5(model.standardization.sds);
    } else if (key == "constant") {
      FeatureVector c;
      fill5(c);
      for (std::size_t j = 0; j < kFeatureCount; ++j) model.standardization.constant[j] = c[j] != 0;
    } else if (key == "columns") {
      model.columns.clear();
      for (auto part : text::split(value, ','))
        model.columns.push_back(static_cast<std::size_t>(text::parse_int(part, key)));
    } else if (key == "converged") {
      model.posterior.converged = text::parse_int(value, key) != 0;
    } else if (key == "iterations") {
      model.posterior.iterations = static_cast<int>(text::parse_int(value, key));
    } else if (key == "final_grad_norm") {
      model.posterior.final_grad_norm = text::parse_real(value, key);
    } else {
      throw DataError("model: unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_m || !have_s) throw DataError("model: m and S are required");
  const auto d = static_cast<Eigen::Index>(m.size());
  if (static_cast<Eigen::Index>(s.size()) != d * d)
    throw DataError("model: S must have " + std::to_string(d * d) + " entries");
  if (model.columns.size() + 1 != m.size())
    throw DataError("model: columns do not match the length of m");
  model.posterior.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), d);
  model.posterior.covariance =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          s.data(), d, d);
  return model;
}

void write_model(const std::filesystem::path& path, const TrainedModel& model) {
  text::write_file(path, format_model(model));
}

TrainedModel read_model(const std::filesystem::path& path) {
  return parse_model(text::read_file(path));
}

}  // namespace uptime
