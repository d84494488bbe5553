#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace modelavg {

struct Feature {
  std::uint32_t index;  // 1-based, libsvm convention
  double value;

  bool operator==(const Feature&) const = default;
};

struct SparseRow {
  double label = 0.0;
  std::vector<Feature> features;  // strictly increasing index

  bool operator==(const SparseRow&) const = default;
};

/// Rows of (label, sparse features). Model dimension is n_features and feature
/// index k maps to model coordinate k - 1.
struct SparseDataset {
  std::vector<SparseRow> rows;
  std::size_t n_features = 0;

  std::size_t n_rows() const { return rows.size(); }
  bool operator==(const SparseDataset&) const = default;

  /// Keeps only the non-zero entries of each row.
  static SparseDataset from_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& labels);
  Eigen::MatrixXd densify() const;
  Eigen::VectorXd labels() const;
};

}  // namespace modelavg
