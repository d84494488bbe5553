#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modelavg/dataset.hpp"
#include "modelavg/model_vector.hpp"
#include "modelavg/random.hpp"

namespace modelavg {

/// Gradient variance at a point. `exact` is set when the value is computed in
/// closed form or by a full pass over every component; otherwise it is a
/// sample estimate over `samples` draws with the given standard error.
struct VarianceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  bool exact = true;
};

/// Anything SGD can run on: a full objective plus a way to draw one
/// stochastic gradient. Implementations are immutable after construction and
/// all randomness comes from the caller's Rng, so one instance can be shared by
/// every worker thread.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual double value(const ModelVector& w) const = 0;
  virtual ModelVector full_gradient(const ModelVector& w) const = 0;

  virtual ModelVector sample_gradient(const ModelVector& w, Rng& rng) const = 0;
  /// w <- w - alpha * g with g one stochastic gradient sampled at w.
  virtual void sample_step(ModelVector& w, double alpha, Rng& rng) const;

  /// Delta(w): mean squared deviation of sampled gradients from the full gradient.
  virtual VarianceEstimate gradient_variance(const ModelVector& w) const = 0;

  virtual std::optional<ModelVector> known_optimum() const { return std::nullopt; }
  virtual bool is_convex() const { return true; }

 protected:
  void check_dimension(const ModelVector& w) const { require_dimension(w, dimension(), "objective"); }
};

/// f(w) = (1/m) sum_j f_j(w). Component indices are 0-based.
class FiniteSumObjective : public Objective {
 public:
  /// Above this many components gradient_variance subsamples.
  static constexpr std::size_t kExactVarianceLimit = 100000;
  static constexpr std::size_t kVarianceSubsample = 10000;

  virtual std::size_t num_components() const = 0;
  virtual ModelVector component_gradient(std::size_t j, const ModelVector& w) const = 0;
  /// w <- w - alpha * grad f_j(w).
  virtual void component_step(std::size_t j, ModelVector& w, double alpha) const;

  ModelVector full_gradient(const ModelVector& w) const override;
  ModelVector sample_gradient(const ModelVector& w, Rng& rng) const override;
  void sample_step(ModelVector& w, double alpha, Rng& rng) const override;
  VarianceEstimate gradient_variance(const ModelVector& w) const override;

 protected:
  void check_index(std::size_t j) const;
};

/// f_j(w) = 1/2 w'Pw + w'q_j + r_j with one shared Hessian P.
class HomogeneousQuadratic final : public FiniteSumObjective {
 public:
  HomogeneousQuadratic(Eigen::MatrixXd hessian, std::vector<Eigen::VectorXd> linear,
                       std::vector<double> constants = {});

  std::string name() const override { return "homogeneous-quadratic"; }
  std::size_t dimension() const override { return static_cast<std::size_t>(p_.rows()); }
  std::size_t num_components() const override { return q_.size(); }
  double value(const ModelVector& w) const override;
  ModelVector component_gradient(std::size_t j, const ModelVector& w) const override;
  void component_step(std::size_t j, ModelVector& w, double alpha) const override;
  ModelVector full_gradient(const ModelVector& w) const override;
  std::optional<ModelVector> known_optimum() const override;

  const Eigen::MatrixXd& hessian() const { return p_; }
  Eigen::VectorXd mean_linear_term() const;

  /// Random instance: P = B'B/n + shift*I, q_j ~ N(0, spread^2 I).
  static HomogeneousQuadratic random(std::size_t n, std::size_t m, double shift, double spread,
                                     std::uint64_t seed);

 private:
  Eigen::MatrixXd p_;
  std::vector<Eigen::VectorXd> q_;
  std::vector<double> r_;
};

/// CSR copy of a SparseDataset with 0-based columns, shared by the linear models.
struct CsrRows {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> columns;
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t n_features = 0;

  explicit CsrRows(const SparseDataset& ds);
  std::size_t n_rows() const { return labels.size(); }
  double dot(std::size_t j, const ModelVector& w) const;
  /// out += s * a_j
  void add_row(std::size_t j, double s, ModelVector& out) const;
};

/// Objectives of the form f_j(w) = loss_j(a_j'w). Component gradients are
/// loss_j'(a_j'w) a_j, so steps and variance passes cost O(nnz).
class LinearModelObjective : public FiniteSumObjective {
 public:
  explicit LinearModelObjective(const SparseDataset& ds) : rows_(ds) {}

  std::size_t dimension() const override { return rows_.n_features; }
  std::size_t num_components() const override { return rows_.n_rows(); }
  double value(const ModelVector& w) const override;
  ModelVector component_gradient(std::size_t j, const ModelVector& w) const override;
  void component_step(std::size_t j, ModelVector& w, double alpha) const override;
  ModelVector full_gradient(const ModelVector& w) const override;
  VarianceEstimate gradient_variance(const ModelVector& w) const override;

  const CsrRows& rows() const { return rows_; }

 protected:
  virtual double loss(std::size_t j, double margin) const = 0;
  virtual double loss_derivative(std::size_t j, double margin) const = 0;

  CsrRows rows_;
};

/// f_j(w) = (b_j - a_j'w)^2.
class LeastSquares final : public LinearModelObjective {
 public:
  explicit LeastSquares(const SparseDataset& ds) : LinearModelObjective(ds) {}

  std::string name() const override { return "ls"; }
  /// Exact minimizer from the normal equations (minimum-norm when singular).
  std::optional<ModelVector> known_optimum() const override;

 protected:
  double loss(std::size_t j, double margin) const override;
  double loss_derivative(std::size_t j, double margin) const override;
};

/// f_j(w) = log(1 + exp(-y_j a_j'w)); labels > 0 map to +1, others to -1.
class LogisticRegression final : public LinearModelObjective {
 public:
  explicit LogisticRegression(const SparseDataset& ds);

  std::string name() const override { return "lr"; }

 protected:
  double loss(std::size_t j, double margin) const override;
  double loss_derivative(std::size_t j, double margin) const override;
};

enum class NoiseDistribution { kGaussian, kRademacher };

/// f(w) = c w^2 / 2 with gradient samples c w - b w - h, where b and h are
/// independent zero-mean noises with variances beta2 and sigma2.
class ScalarNoisyQuadratic final : public Objective {
 public:
  ScalarNoisyQuadratic(double c, double beta2, double sigma2,
                       NoiseDistribution noise = NoiseDistribution::kGaussian);

  std::string name() const override { return "scalar-noisy-quadratic"; }
  std::size_t dimension() const override { return 1; }
  double value(const ModelVector& w) const override;
  ModelVector full_gradient(const ModelVector& w) const override;
  ModelVector sample_gradient(const ModelVector& w, Rng& rng) const override;
  void sample_step(ModelVector& w, double alpha, Rng& rng) const override;
  /// beta2 w^2 + sigma2, exact.
  VarianceEstimate gradient_variance(const ModelVector& w) const override;
  std::optional<ModelVector> known_optimum() const override { return ModelVector{0.0}; }

  double curvature() const { return c_; }
  double beta2() const { return beta2_; }
  double sigma2() const { return sigma2_; }

 private:
  double draw(Rng& rng, double sd) const;
  double c_, beta2_, sigma2_;
  double beta_, sigma_;
  NoiseDistribution noise_;
};

/// f(w) = (w^2 - 1)^2 with gradient samples 4(w^3 - w + u), u ~ N(0, noise_sd^2).
class QuarticDoubleWell final : public Objective {
 public:
  explicit QuarticDoubleWell(double noise_sd = 1.0);

  std::string name() const override { return "quartic"; }
  std::size_t dimension() const override { return 1; }
  double value(const ModelVector& w) const override;
  ModelVector full_gradient(const ModelVector& w) const override;
  ModelVector sample_gradient(const ModelVector& w, Rng& rng) const override;
  void sample_step(ModelVector& w, double alpha, Rng& rng) const override;
  /// 16 noise_sd^2 everywhere.
  VarianceEstimate gradient_variance(const ModelVector& w) const override;
  bool is_convex() const override { return false; }

 private:
  double noise_sd_;
};

/// Zero-mean Gaussian sample stream for Oja's rule. Running SGD on
/// f(w) = -w'Sw/2 with samples -(x'w)x is exactly the Oja update.
class OjaPcaStream final : public Objective {
 public:
  /// spectrum is sorted descending; v1 is the first basis vector rotated by a
  /// random orthogonal matrix drawn from rotation_seed.
  OjaPcaStream(std::vector<double> spectrum, std::uint64_t rotation_seed);
  /// The [1.0, 0.7, ..., 0.7] spectrum.
  static OjaPcaStream standard(std::size_t dim, std::uint64_t rotation_seed);

  std::string name() const override { return "pca"; }
  std::size_t dimension() const override { return spectrum_.size(); }
  double value(const ModelVector& w) const override;
  ModelVector full_gradient(const ModelVector& w) const override;
  ModelVector sample_gradient(const ModelVector& w, Rng& rng) const override;
  void sample_step(ModelVector& w, double alpha, Rng& rng) const override;
  /// (w'Sw) tr(S) + |Sw|^2, exact for Gaussian samples.
  VarianceEstimate gradient_variance(const ModelVector& w) const override;
  bool is_convex() const override { return false; }

  Eigen::VectorXd sample(Rng& rng) const;
  const ModelVector& principal_component() const { return v1_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const std::vector<double>& spectrum() const { return spectrum_; }

 private:
  std::vector<double> spectrum_;
  Eigen::MatrixXd basis_;   // columns are eigenvectors
  Eigen::MatrixXd factor_;  // basis * diag(sqrt(spectrum))
  Eigen::MatrixXd cov_;
  ModelVector v1_;
};

/// w + alpha (x'w) x
ModelVector oja_step(const ModelVector& w, const ModelVector& x, double alpha);

/// 1 - |w'v| / (|w| |v|); zero iff w is parallel or antiparallel to v.
double pca_error(const ModelVector& w, const ModelVector& v);

/// Uniform point on the unit sphere (normalized Gaussian).
ModelVector random_unit_vector(std::size_t n, Rng& rng);

}  // namespace modelavg
