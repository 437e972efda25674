#pragma once

// Interpolation vs extrapolation: PCA of the training features and convex
// hull membership of query points, decided by a phase-1 simplex.

#include "chfkit/matrix.hpp"

#include <span>
#include <string>
#include <vector>

namespace chfkit {

struct PcaModel {
  std::vector<double> mean;
  Matrix components; // k x d, orthonormal rows
  std::vector<double> explained_variance; // nonincreasing

  std::vector<double> project(std::span<const double> x) const;
  std::vector<double> reconstruct(std::span<const double> scores) const;
};

/// Eigendecomposition of the population covariance by cyclic Jacobi
/// rotations. Each component's largest-magnitude entry is positive (first
/// such entry on ties). k = 0 keeps all d components.
PcaModel fit_pca(const Matrix& x, std::size_t k = 0);

struct HullVerdict {
  bool inside = false;
  double slack = 0.0; // phase-1 optimum: L1 infeasibility in standardized units
  std::vector<double> weights; // inside: one per training row, sum 1
  // outside: w . z + w0 <= 0 on every standardized training row and > 0 at
  // the standardized query.
  std::vector<double> separator;
  double separator_offset = 0.0;
  int pivots = 0;
};

inline constexpr double kHullTolerance = 1e-9;

/// Training set prepared for repeated membership queries. Features are
/// standardized by the training mean and population std, which leaves
/// verdicts unchanged but makes the tolerance scale-free.
class HullIndex {
public:
  explicit HullIndex(const Matrix& train, double tolerance = kHullTolerance);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }
  HullVerdict contains(std::span<const double> query) const;

private:
  std::size_t n_, d_;
  double tol_;
  std::vector<double> mean_, scale_;
  std::vector<double> cols_; // (d + 1) x n: standardized features then ones
};

HullVerdict hull_contains(const Matrix& train, std::span<const double> query);

struct HullSummary {
  std::vector<HullVerdict> verdicts;
  std::size_t inside = 0;
  std::size_t outside = 0;
};

/// Parallel over queries; output order matches the query rows.
HullSummary classify_batch(const Matrix& train, const Matrix& queries);
/// Single-threaded reference for classify_batch.
HullSummary classify_batch_serial(const Matrix& train, const Matrix& queries);

/// CSV "row,inside,slack".
std::string format_verdicts(const HullSummary& s);
/// CSV "pc1,pc2,label" for training rows (label train) and queries (label
/// inside/outside), projected on the first two training components.
std::string format_projection(const PcaModel& pca, const Matrix& train, const Matrix& queries,
                              const HullSummary& s);

} // namespace chfkit
