#include "modelavg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace modelavg {

void Objective::sample_step(ModelVector& w, double alpha, Rng& rng) const {
  const ModelVector g = sample_gradient(w, rng);
  w.axpy(-alpha, g);
}

// ---------------------------------------------------------------------------
// FiniteSumObjective

void FiniteSumObjective::check_index(std::size_t j) const {
  if (j >= num_components()) {
    throw std::out_of_range("component index " + std::to_string(j) + " outside [0, " +
                            std::to_string(num_components()) + ")");
  }
}

void FiniteSumObjective::component_step(std::size_t j, ModelVector& w, double alpha) const {
  const ModelVector g = component_gradient(j, w);
  w.axpy(-alpha, g);
}

ModelVector FiniteSumObjective::full_gradient(const ModelVector& w) const {
  check_dimension(w);
  ModelVector sum(dimension());
  const std::size_t m = num_components();
  for (std::size_t j = 0; j < m; ++j) sum += component_gradient(j, w);
  sum *= 1.0 / static_cast<double>(m);
  return sum;
}

ModelVector FiniteSumObjective::sample_gradient(const ModelVector& w, Rng& rng) const {
  return component_gradient(rng.index(num_components()), w);
}

void FiniteSumObjective::sample_step(ModelVector& w, double alpha, Rng& rng) const {
  component_step(rng.index(num_components()), w, alpha);
}

VarianceEstimate FiniteSumObjective::gradient_variance(const ModelVector& w) const {
  const ModelVector mean = full_gradient(w);
  const std::size_t m = num_components();
  if (m <= kExactVarianceLimit) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += squared_distance(component_gradient(j, w), mean);
    return {total / static_cast<double>(m), 0.0, m, true};
  }
  Rng rng(0, kMeasurementStream, 0);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < kVarianceSubsample; ++k) {
    const double d = squared_distance(component_gradient(rng.index(m), w), mean);
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(kVarianceSubsample);
  const double est = sum / n;
  const double var = std::max(0.0, (sum_sq / n - est * est) * n / (n - 1.0));
  return {est, std::sqrt(var / n), kVarianceSubsample, false};
}

// ---------------------------------------------------------------------------
// HomogeneousQuadratic

HomogeneousQuadratic::HomogeneousQuadratic(Eigen::MatrixXd hessian,
                                           std::vector<Eigen::VectorXd> linear,
                                           std::vector<double> constants)
    : p_(std::move(hessian)), q_(std::move(linear)), r_(std::move(constants)) {
  if (p_.rows() == 0 || p_.rows() != p_.cols()) {
    throw std::invalid_argument("HomogeneousQuadratic: Hessian must be square and non-empty");
  }
  if (!p_.isApprox(p_.transpose(), 1e-12)) {
    throw std::invalid_argument("HomogeneousQuadratic: Hessian must be symmetric");
  }
  if (q_.empty()) throw std::invalid_argument("HomogeneousQuadratic: need at least one component");
  for (const auto& q : q_) {
    if (q.size() != p_.rows()) throw DimensionMismatch("HomogeneousQuadratic: linear term dimension");
  }
  if (r_.empty()) r_.assign(q_.size(), 0.0);
  if (r_.size() != q_.size()) {
    throw std::invalid_argument("HomogeneousQuadratic: constants must match component count");
  }
}

Eigen::VectorXd HomogeneousQuadratic::mean_linear_term() const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p_.rows());
  for (const auto& q : q_) sum += q;
  return sum / static_cast<double>(q_.size());
}

double HomogeneousQuadratic::value(const ModelVector& w) const {
  check_dimension(w);
  const auto& x = w.values();
  const double r_mean = std::accumulate(r_.begin(), r_.end(), 0.0) / static_cast<double>(r_.size());
  return 0.5 * x.dot(p_ * x) + x.dot(mean_linear_term()) + r_mean;
}

ModelVector HomogeneousQuadratic::component_gradient(std::size_t j, const ModelVector& w) const {
  check_index(j);
  check_dimension(w);
  return ModelVector(Eigen::VectorXd(p_ * w.values() + q_[j]));
}

void HomogeneousQuadratic::component_step(std::size_t j, ModelVector& w, double alpha) const {
  check_index(j);
  check_dimension(w);
  Eigen::VectorXd g = p_ * w.values() + q_[j];
  w.values() -= alpha * g;
}

ModelVector HomogeneousQuadratic::full_gradient(const ModelVector& w) const {
  check_dimension(w);
  return ModelVector(Eigen::VectorXd(p_ * w.values() + mean_linear_term()));
}

std::optional<ModelVector> HomogeneousQuadratic::known_optimum() const {
  const Eigen::VectorXd rhs = -mean_linear_term();
  Eigen::VectorXd w = p_.completeOrthogonalDecomposition().solve(rhs);
  if ((p_ * w - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) return std::nullopt;
  return ModelVector(std::move(w));
}

HomogeneousQuadratic HomogeneousQuadratic::random(std::size_t n, std::size_t m, double shift,
                                                  double spread, std::uint64_t seed) {
  Rng rng(seed, kInitStream, 0);
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd b(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i)
    for (Eigen::Index k = 0; k < ni; ++k) b(i, k) = rng.normal();
  Eigen::MatrixXd p = b.transpose() * b / static_cast<double>(n);
  p += shift * Eigen::MatrixXd::Identity(ni, ni);
  p = 0.5 * (p + p.transpose());
  std::vector<Eigen::VectorXd> q(m, Eigen::VectorXd(ni));
  for (auto& v : q)
    for (Eigen::Index i = 0; i < ni; ++i) v[i] = spread * rng.normal();
  return HomogeneousQuadratic(std::move(p), std::move(q));
}

// ---------------------------------------------------------------------------
// Linear models

CsrRows::CsrRows(const SparseDataset& ds) : n_features(ds.n_features) {
  offsets.reserve(ds.n_rows() + 1);
  offsets.push_back(0);
  labels.reserve(ds.n_rows());
  for (const auto& row : ds.rows) {
    for (const auto& f : row.features) {
      if (f.index < 1 || f.index > n_features) {
        throw std::invalid_argument("feature index " + std::to_string(f.index) +
                                    " outside [1, n_features]");
      }
      columns.push_back(f.index - 1);
      values.push_back(f.value);
    }
    offsets.push_back(columns.size());
    labels.push_back(row.label);
  }
}

double CsrRows::dot(std::size_t j, const ModelVector& w) const {
  double s = 0.0;
  for (std::size_t k = offsets[j]; k < offsets[j + 1]; ++k) s += values[k] * w[columns[k]];
  return s;
}

void CsrRows::add_row(std::size_t j, double s, ModelVector& out) const {
  for (std::size_t k = offsets[j]; k < offsets[j + 1]; ++k) out[columns[k]] += s * values[k];
}

double LinearModelObjective::value(const ModelVector& w) const {
  check_dimension(w);
  double total = 0.0;
  const std::size_t m = num_components();
  for (std::size_t j = 0; j < m; ++j) total += loss(j, rows_.dot(j, w));
  return total / static_cast<double>(m);
}

ModelVector LinearModelObjective::component_gradient(std::size_t j, const ModelVector& w) const {
  check_index(j);
  check_dimension(w);
  ModelVector g(dimension());
  rows_.add_row(j, loss_derivative(j, rows_.dot(j, w)), g);
  return g;
}

void LinearModelObjective::component_step(std::size_t j, ModelVector& w, double alpha) const {
  check_index(j);
  check_dimension(w);
  const double s = loss_derivative(j, rows_.dot(j, w));
  rows_.add_row(j, -alpha * s, w);
}

ModelVector LinearModelObjective::full_gradient(const ModelVector& w) const {
  check_dimension(w);
  ModelVector g(dimension());
  const std::size_t m = num_components();
  for (std::size_t j = 0; j < m; ++j) rows_.add_row(j, loss_derivative(j, rows_.dot(j, w)), g);
  g *= 1.0 / static_cast<double>(m);
  return g;
}

VarianceEstimate LinearModelObjective::gradient_variance(const ModelVector& w) const {
  // |s a_j - g|^2 = s^2 |a_j|^2 - 2 s a_j'g + |g|^2
  if (num_components() == 1) {
    check_dimension(w);
    return {0.0, 0.0, 1, true};
  }
  const ModelVector mean = full_gradient(w);
  const double mean_sq = mean.squared_norm();
  const std::size_t m = num_components();
  auto term = [&](std::size_t j) {
    const double s = loss_derivative(j, rows_.dot(j, w));
    double row_sq = 0.0;
    for (std::size_t k = rows_.offsets[j]; k < rows_.offsets[j + 1]; ++k) {
      row_sq += rows_.values[k] * rows_.values[k];
    }
    return std::max(0.0, s * s * row_sq - 2.0 * s * rows_.dot(j, mean) + mean_sq);
  };
  if (m <= kExactVarianceLimit) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += term(j);
    return {total / static_cast<double>(m), 0.0, m, true};
  }
  Rng rng(0, kMeasurementStream, 0);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < kVarianceSubsample; ++k) {
    const double d = term(rng.index(m));
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(kVarianceSubsample);
  const double est = sum / n;
  const double var = std::max(0.0, (sum_sq / n - est * est) * n / (n - 1.0));
  return {est, std::sqrt(var / n), kVarianceSubsample, false};
}

double LeastSquares::loss(std::size_t j, double margin) const {
  const double r = rows_.labels[j] - margin;
  return r * r;
}

double LeastSquares::loss_derivative(std::size_t j, double margin) const {
  return 2.0 * (margin - rows_.labels[j]);
}

std::optional<ModelVector> LeastSquares::known_optimum() const {
  // Dense normal equations; only sensible for small dimension.
  constexpr std::size_t kMaxDenseDimension = 4000;
  const std::size_t n = dimension();
  if (n > kMaxDenseDimension) return std::nullopt;
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(ni, ni);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
  for (std::size_t j = 0; j < rows_.n_rows(); ++j) {
    for (std::size_t a = rows_.offsets[j]; a < rows_.offsets[j + 1]; ++a) {
      rhs[rows_.columns[a]] += rows_.values[a] * rows_.labels[j];
      for (std::size_t b = rows_.offsets[j]; b < rows_.offsets[j + 1]; ++b) {
        gram(rows_.columns[a], rows_.columns[b]) += rows_.values[a] * rows_.values[b];
      }
    }
  }
  Eigen::VectorXd w = gram.completeOrthogonalDecomposition().solve(rhs);
  return ModelVector(std::move(w));
}

LogisticRegression::LogisticRegression(const SparseDataset& ds) : LinearModelObjective(ds) {
  for (double& y : rows_.labels) y = y > 0.0 ? 1.0 : -1.0;
}

double LogisticRegression::loss(std::size_t j, double margin) const {
  const double z = -rows_.labels[j] * margin;
  // log(1 + e^z) without overflow
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double LogisticRegression::loss_derivative(std::size_t j, double margin) const {
  const double y = rows_.labels[j];
  const double z = -y * margin;
  // sigmoid(z)
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return -y * s;
}

// ---------------------------------------------------------------------------
// ScalarNoisyQuadratic

ScalarNoisyQuadratic::ScalarNoisyQuadratic(double c, double beta2, double sigma2,
                                           NoiseDistribution noise)
    : c_(c), beta2_(beta2), sigma2_(sigma2), beta_(std::sqrt(beta2)), sigma_(std::sqrt(sigma2)),
      noise_(noise) {
  if (!(c > 0.0)) throw std::invalid_argument("ScalarNoisyQuadratic: curvature must be positive");
  if (!(beta2 >= 0.0) || !(sigma2 >= 0.0)) {
    throw std::invalid_argument("ScalarNoisyQuadratic: variances must be non-negative");
  }
}

double ScalarNoisyQuadratic::draw(Rng& rng, double sd) const {
  return noise_ == NoiseDistribution::kGaussian ? sd * rng.normal() : sd * rng.sign();
}

double ScalarNoisyQuadratic::value(const ModelVector& w) const {
  check_dimension(w);
  return 0.5 * c_ * w[0] * w[0];
}

ModelVector ScalarNoisyQuadratic::full_gradient(const ModelVector& w) const {
  check_dimension(w);
  return ModelVector{c_ * w[0]};
}

ModelVector ScalarNoisyQuadratic::sample_gradient(const ModelVector& w, Rng& rng) const {
  check_dimension(w);
  const double b = draw(rng, beta_);
  const double h = draw(rng, sigma_);
  return ModelVector{c_ * w[0] - b * w[0] - h};
}

void ScalarNoisyQuadratic::sample_step(ModelVector& w, double alpha, Rng& rng) const {
  check_dimension(w);
  const double b = draw(rng, beta_);
  const double h = draw(rng, sigma_);
  w[0] -= alpha * (c_ * w[0] - b * w[0] - h);
}

VarianceEstimate ScalarNoisyQuadratic::gradient_variance(const ModelVector& w) const {
  check_dimension(w);
  return {beta2_ * w[0] * w[0] + sigma2_, 0.0, 0, true};
}

// ---------------------------------------------------------------------------
// QuarticDoubleWell

QuarticDoubleWell::QuarticDoubleWell(double noise_sd) : noise_sd_(noise_sd) {
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("QuarticDoubleWell: noise_sd must be >= 0");
}

double QuarticDoubleWell::value(const ModelVector& w) const {
  check_dimension(w);
  const double a = w[0] * w[0] - 1.0;
  return a * a;
}

ModelVector QuarticDoubleWell::full_gradient(const ModelVector& w) const {
  check_dimension(w);
  return ModelVector{4.0 * (w[0] * w[0] * w[0] - w[0])};
}

ModelVector QuarticDoubleWell::sample_gradient(const ModelVector& w, Rng& rng) const {
  check_dimension(w);
  const double u = noise_sd_ * rng.normal();
  return ModelVector{4.0 * (w[0] * w[0] * w[0] - w[0] + u)};
}

void QuarticDoubleWell::sample_step(ModelVector& w, double alpha, Rng& rng) const {
  check_dimension(w);
  const double x = w[0];
  const double u = noise_sd_ * rng.normal();
  w[0] = x - alpha * 4.0 * (x * x * x - x + u);
}

VarianceEstimate QuarticDoubleWell::gradient_variance(const ModelVector& w) const {
  check_dimension(w);
  return {16.0 * noise_sd_ * noise_sd_, 0.0, 0, true};
}

// ---------------------------------------------------------------------------
// OjaPcaStream

OjaPcaStream::OjaPcaStream(std::vector<double> spectrum, std::uint64_t rotation_seed)
    : spectrum_(std::move(spectrum)) {
  if (spectrum_.empty()) throw std::invalid_argument("OjaPcaStream: empty spectrum");
  for (std::size_t i = 0; i < spectrum_.size(); ++i) {
    if (!(spectrum_[i] > 0.0)) throw std::invalid_argument("OjaPcaStream: eigenvalues must be positive");
    if (i > 0 && spectrum_[i] > spectrum_[i - 1]) {
      throw std::invalid_argument("OjaPcaStream: spectrum must be sorted descending");
    }
  }
  const auto n = static_cast<Eigen::Index>(spectrum_.size());
  Rng rng(rotation_seed, kInitStream, 1);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) g(i, k) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  // Sign fix on R's diagonal makes the rotation Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (r(k, k) < 0.0) basis_.col(k) *= -1.0;
  }
  Eigen::VectorXd lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam[i] = spectrum_[static_cast<std::size_t>(i)];
  factor_ = basis_ * lam.cwiseSqrt().asDiagonal();
  cov_ = basis_ * lam.asDiagonal() * basis_.transpose();
  v1_ = ModelVector(Eigen::VectorXd(basis_.col(0)));
}

OjaPcaStream OjaPcaStream::standard(std::size_t dim, std::uint64_t rotation_seed) {
  std::vector<double> spectrum(dim, 0.7);
  spectrum.at(0) = 1.0;
  return OjaPcaStream(std::move(spectrum), rotation_seed);
}

Eigen::VectorXd OjaPcaStream::sample(Rng& rng) const {
  Eigen::VectorXd z(factor_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return factor_ * z;
}

double OjaPcaStream::value(const ModelVector& w) const {
  check_dimension(w);
  return -0.5 * w.values().dot(cov_ * w.values());
}

ModelVector OjaPcaStream::full_gradient(const ModelVector& w) const {
  check_dimension(w);
  return ModelVector(Eigen::VectorXd(-(cov_ * w.values())));
}

ModelVector OjaPcaStream::sample_gradient(const ModelVector& w, Rng& rng) const {
  check_dimension(w);
  const Eigen::VectorXd x = sample(rng);
  return ModelVector(Eigen::VectorXd(-x.dot(w.values()) * x));
}

void OjaPcaStream::sample_step(ModelVector& w, double alpha, Rng& rng) const {
  check_dimension(w);
  thread_local Eigen::VectorXd z, x;
  z.resize(factor_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  x.noalias() = factor_ * z;
  w.values() += (alpha * x.dot(w.values())) * x;
}

VarianceEstimate OjaPcaStream::gradient_variance(const ModelVector& w) const {
  check_dimension(w);
  const Eigen::VectorXd sw = cov_ * w.values();
  return {w.values().dot(sw) * cov_.trace() + sw.squaredNorm(), 0.0, 0, true};
}

ModelVector oja_step(const ModelVector& w, const ModelVector& x, double alpha) {
  ModelVector out = w;
  out.axpy(alpha * x.dot(w), x);
  return out;
}

double pca_error(const ModelVector& w, const ModelVector& v) {
  const double nw = w.norm();
  const double nv = v.norm();
  if (nw == 0.0 || nv == 0.0) throw std::invalid_argument("pca_error: zero-norm input");
  const double cosine = std::abs(w.dot(v)) / (nw * nv);
  return std::clamp(1.0 - cosine, 0.0, 1.0);
}

ModelVector random_unit_vector(std::size_t n, Rng& rng) {
  ModelVector u(n);
  double norm = 0.0;
  while (norm == 0.0) {
    for (std::size_t i = 0; i < n; ++i) u[i] = rng.normal();
    norm = u.norm();
  }
  u *= 1.0 / norm;
  return u;
}

}  // namespace modelavg
