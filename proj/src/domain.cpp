#include "chfkit/domain.hpp"

#include "chfkit/csv.hpp"
#include "chfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace chfkit {

std::vector<double> PcaModel::project(std::span<const double> x) const {
  std::vector<double> s(components.rows(), 0.0);
  for (std::size_t k = 0; k < components.rows(); ++k) {
    for (std::size_t j = 0; j < mean.size(); ++j) s[k] += components(k, j) * (x[j] - mean[j]);
  }
  return s;
}

std::vector<double> PcaModel::reconstruct(std::span<const double> scores) const {
  std::vector<double> x = mean;
  for (std::size_t k = 0; k < components.rows(); ++k) {
    for (std::size_t j = 0; j < mean.size(); ++j) x[j] += components(k, j) * scores[k];
  }
  return x;
}

namespace {

// Cyclic Jacobi on a symmetric matrix; returns eigenvalues and fills the
// eigenvectors as columns of v.
std::vector<double> jacobi_eigen(Matrix a, Matrix& v) {
  const std::size_t d = a.rows();
  v = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      diag += a(p, p) * a(p, p);
      for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> ev(d);
  for (std::size_t i = 0; i < d; ++i) ev[i] = a(i, i);
  return ev;
}

} // namespace

PcaModel fit_pca(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2 || d < 1) throw ValidationError("PCA needs at least 2 rows and 1 column");
  if (k == 0 || k > d) k = d;
  PcaModel m;
  m.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += x(r, j);
  }
  for (auto& v : m.mean) v /= static_cast<double>(n);
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double di = x(r, i) - m.mean[i];
      for (std::size_t j = i; j < d; ++j) cov(i, j) += di * (x(r, j) - m.mean[j]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) /= static_cast<double>(n);
      cov(j, i) = cov(i, j);
    }
  }
  Matrix vecs;
  const auto ev = jacobi_eigen(cov, vecs);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ev[a] > ev[b]; });

  m.components = Matrix(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t col = order[c];
    std::size_t big = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(vecs(j, col)) > std::abs(vecs(big, col))) big = j;
    }
    const double sign = vecs(big, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) m.components(c, j) = sign * vecs(j, col);
    m.explained_variance.push_back(std::max(ev[col], 0.0));
  }
  return m;
}

HullIndex::HullIndex(const Matrix& train, double tolerance)
    : n_(train.rows()), d_(train.cols()), tol_(tolerance) {
  if (n_ == 0) throw ValidationError("hull test needs at least one training row");
  mean_.assign(d_, 0.0);
  scale_.assign(d_, 0.0);
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t j = 0; j < d_; ++j) mean_[j] += train(r, j);
  }
  for (auto& v : mean_) v /= static_cast<double>(n_);
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t j = 0; j < d_; ++j) scale_[j] += (train(r, j) - mean_[j]) * (train(r, j) - mean_[j]);
  }
  for (auto& s : scale_) {
    s = std::sqrt(s / static_cast<double>(n_));
    if (!(s > 0.0)) s = 1.0;
  }
  cols_.assign((d_ + 1) * n_, 1.0);
  for (std::size_t j = 0; j < d_; ++j) {
    for (std::size_t r = 0; r < n_; ++r) cols_[j * n_ + r] = (train(r, j) - mean_[j]) / scale_[j];
  }
}

// Phase 1 of the simplex method on
//   min sum(a)  s.t.  [Z^T; 1^T] lambda + a = [z_q; 1],  lambda, a >= 0
// with rows negated where needed so the right-hand side is nonnegative.
// Entering columns follow Dantzig's rule and fall back to Bland's rule
// after a run of degenerate pivots, which rules out cycling.
HullVerdict HullIndex::contains(std::span<const double> query) const {
  if (query.size() != d_) throw ValidationError("query dimension does not match the training set");
  const std::size_t m = d_ + 1;
  const std::size_t width = n_ + m + 1; // lambda, artificials, rhs
  const std::size_t rhs = width - 1;
  std::vector<double> t(m * width, 0.0);
  std::vector<double> sign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double b = i < d_ ? (query[i] - mean_[i]) / scale_[i] : 1.0;
    sign[i] = b < 0.0 ? -1.0 : 1.0;
    double* row = &t[i * width];
    const double* src = &cols_[i * n_];
    for (std::size_t j = 0; j < n_; ++j) row[j] = sign[i] * src[j];
    row[n_ + i] = 1.0;
    row[rhs] = sign[i] * b;
  }
  std::vector<double> cost(width, 0.0); // reduced costs; cost[rhs] = -objective
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n_; ++j) cost[j] -= t[i * width + j];
    cost[rhs] -= t[i * width + rhs];
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n_ + i;

  constexpr double eps = 1e-12;
  HullVerdict v;
  int degenerate = 0;
  const int max_pivots = 50 * static_cast<int>(width);
  while (v.pivots < max_pivots) {
    const bool bland = degenerate > 20;
    std::size_t enter = width;
    double best = -eps;
    for (std::size_t j = 0; j < rhs; ++j) {
      if (cost[j] < best) {
        enter = j;
        if (bland) break;
        best = cost[j];
      }
    }
    if (enter == width) break;
    std::size_t leave = m;
    double ratio = INFINITY;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = t[i * width + enter];
      if (a <= eps) continue;
      const double r = t[i * width + rhs] / a;
      if (r < ratio || (r == ratio && basis[i] < basis[leave])) {
        ratio = r;
        leave = i;
      }
    }
    if (leave == m) break; // unbounded cannot happen in phase 1
    degenerate = ratio <= eps ? degenerate + 1 : 0;

    double* prow = &t[leave * width];
    const double piv = prow[enter];
    for (std::size_t j = 0; j < width; ++j) prow[j] /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave) continue;
      double* row = &t[i * width];
      const double f = row[enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j) row[j] -= f * prow[j];
    }
    const double f = cost[enter];
    for (std::size_t j = 0; j < width; ++j) cost[j] -= f * prow[j];
    basis[leave] = enter;
    ++v.pivots;
  }

  v.slack = std::max(-cost[rhs], 0.0);
  v.inside = v.slack <= tol_;
  if (v.inside) {
    v.weights.assign(n_, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < n_) v.weights[basis[i]] = std::max(t[i * width + rhs], 0.0);
    }
  } else {
    // Duals of the original rows from the artificial reduced costs:
    // reduced cost of artificial i is 1 - y_i.
    v.separator.resize(d_);
    for (std::size_t i = 0; i < m; ++i) {
      const double y = sign[i] * (1.0 - cost[n_ + i]);
      if (i < d_) v.separator[i] = y;
      else v.separator_offset = y;
    }
  }
  return v;
}

HullVerdict hull_contains(const Matrix& train, std::span<const double> query) {
  return HullIndex(train).contains(query);
}

namespace {

HullSummary summarize(std::vector<HullVerdict> verdicts) {
  HullSummary s;
  s.verdicts = std::move(verdicts);
  for (const auto& v : s.verdicts) (v.inside ? s.inside : s.outside)++;
  return s;
}

} // namespace

HullSummary classify_batch(const Matrix& train, const Matrix& queries) {
  const HullIndex index(train);
  std::vector<HullVerdict> out(queries.rows());
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    out[static_cast<std::size_t>(q)] = index.contains(queries.row(static_cast<std::size_t>(q)));
  }
  return summarize(std::move(out));
}

HullSummary classify_batch_serial(const Matrix& train, const Matrix& queries) {
  const HullIndex index(train);
  std::vector<HullVerdict> out;
  for (std::size_t q = 0; q < queries.rows(); ++q) out.push_back(index.contains(queries.row(q)));
  return summarize(std::move(out));
}

std::string format_verdicts(const HullSummary& s) {
  std::string out = "row,inside,slack\n";
  for (std::size_t k = 0; k < s.verdicts.size(); ++k) {
    out += std::to_string(k) + ',' + (s.verdicts[k].inside ? "1" : "0") + ',' +
           csv::format(s.verdicts[k].slack + 0.0) + '\n';
  }
  return out;
}

std::string format_projection(const PcaModel& pca, const Matrix& train, const Matrix& queries,
                              const HullSummary& s) {
  if (pca.components.rows() < 2) throw ValidationError("projection needs two components");
  std::string out = "pc1,pc2,label\n";
  auto emit = [&](std::span<const double> x, std::string_view label) {
    const auto p = pca.project(x);
    out += csv::format(p[0]) + ',' + csv::format(p[1]) + ',' + std::string(label) + '\n';
  };
  for (std::size_t r = 0; r < train.rows(); ++r) emit(train.row(r), "train");
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    emit(queries.row(r), r < s.verdicts.size() && s.verdicts[r].inside ? "inside" : "outside");
  }
  return out;
}

} // namespace chfkit
