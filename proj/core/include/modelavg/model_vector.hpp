#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace modelavg {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense decision variable. The dimension is fixed at construction and every
/// binary operation checks that both operands agree.
class ModelVector {
 public:
  ModelVector() = default;
  explicit ModelVector(std::size_t n) : v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}
  explicit ModelVector(Eigen::VectorXd v) : v_(std::move(v)) {}
  ModelVector(std::initializer_list<double> xs) : v_(static_cast<Eigen::Index>(xs.size())) {
    Eigen::Index i = 0;
    for (double x : xs) v_[i++] = x;
  }

  static ModelVector filled(std::size_t n, double x) {
    return ModelVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), x));
  }

  std::size_t size() const { return static_cast<std::size_t>(v_.size()); }
  double operator[](std::size_t i) const { return v_[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return v_[static_cast<Eigen::Index>(i)]; }

  const Eigen::VectorXd& values() const { return v_; }
  Eigen::VectorXd& values() { return v_; }
  std::span<const double> span() const { return {v_.data(), size()}; }
  std::span<double> span() { return {v_.data(), size()}; }

  ModelVector& operator+=(const ModelVector& o) {
    check(o, "+=");
    v_ += o.v_;
    return *this;
  }
  ModelVector& operator-=(const ModelVector& o) {
    check(o, "-=");
    v_ -= o.v_;
    return *this;
  }
  ModelVector& operator*=(double s) {
    v_ *= s;
    return *this;
  }
  /// this += a * x
  void axpy(double a, const ModelVector& x) {
    check(x, "axpy");
    v_ += a * x.v_;
  }

  double dot(const ModelVector& o) const {
    check(o, "dot");
    return v_.dot(o.v_);
  }
  double squared_norm() const { return v_.squaredNorm(); }
  double norm() const { return v_.norm(); }

  bool operator==(const ModelVector& o) const {
    return size() == o.size() && (v_.array() == o.v_.array()).all();
  }

  void check(const ModelVector& o, const char* op) const {
    if (o.size() != size()) {
      throw DimensionMismatch(std::string("ModelVector ") + op + ": dimension " +
                              std::to_string(size()) + " vs " + std::to_string(o.size()));
    }
  }

 private:
  Eigen::VectorXd v_;
};

inline ModelVector operator+(ModelVector a, const ModelVector& b) { return a += b; }
inline ModelVector operator-(ModelVector a, const ModelVector& b) { return a -= b; }
inline ModelVector operator*(double s, ModelVector a) { return a *= s; }

inline double squared_distance(const ModelVector& a, const ModelVector& b) {
  a.check(b, "distance");
  return (a.values() - b.values()).squaredNorm();
}

inline void require_dimension(const ModelVector& w, std::size_t n, const char* who) {
  if (w.size() != n) {
    throw DimensionMismatch(std::string(who) + ": expected dimension " + std::to_string(n) +
                            ", got " + std::to_string(w.size()));
  }
}

}  // namespace modelavg
