#include "chfkit/domain.hpp"

#include "chfkit/errors.hpp"
#include "chfkit/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace chfkit;

namespace {

struct HullInstance {
  Matrix train;
  std::vector<double> query;
  bool inside;
};

std::vector<HullInstance> load_fixture() {
  std::ifstream f(CHFKIT_TEST_DATA "/hull_7d.txt");
  REQUIRE(f);
  std::vector<HullInstance> out;
  std::string tag;
  while (f >> tag) {
    std::size_t idx, n, d;
    int inside;
    f >> idx >> n >> d >> inside;
    HullInstance h{Matrix(n, d), std::vector<double>(d), inside == 1};
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) f >> h.train(r, c);
    }
    for (auto& v : h.query) f >> v;
    out.push_back(std::move(h));
  }
  return out;
}

Matrix unit_square() {
  Matrix x;
  for (double a : {0.0, 1.0}) {
    for (double b : {0.0, 1.0}) x.append_row(std::vector<double>{a, b});
  }
  return x;
}

// Certificate check in the original coordinates.
void check_certificate(const Matrix& train, std::span<const double> q, const HullVerdict& v) {
  REQUIRE(v.weights.size() == train.rows());
  double sum = 0.0;
  std::vector<double> rec(train.cols(), 0.0);
  for (std::size_t r = 0; r < train.rows(); ++r) {
    CHECK(v.weights[r] >= 0.0);
    sum += v.weights[r];
    for (std::size_t c = 0; c < train.cols(); ++c) rec[c] += v.weights[r] * train(r, c);
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
  for (std::size_t c = 0; c < train.cols(); ++c) {
    CHECK(std::abs(rec[c] - q[c]) <= 1e-7 * std::max(1.0, std::abs(q[c])));
  }
}

} // namespace

TEST_CASE("unit square") {
  const auto sq = unit_square();
  const double mid[] = {0.5, 0.5};
  auto v = hull_contains(sq, mid);
  CHECK(v.inside);
  check_certificate(sq, mid, v);

  const double far[] = {2.0, 2.0};
  v = hull_contains(sq, far);
  CHECK_FALSE(v.inside);
  CHECK(v.slack > 0.0);
  REQUIRE(v.separator.size() == 2);

  const double edge[] = {1.0, 0.25};
  CHECK(hull_contains(sq, edge).inside);
  const double corner[] = {0.0, 0.0};
  CHECK(hull_contains(sq, corner).inside);
  const double just_out[] = {1.0 + 1e-6, 0.5};
  CHECK_FALSE(hull_contains(sq, just_out).inside);
}

TEST_CASE("separator splits training rows from the query") {
  Rng rng(4);
  Matrix x(30, 3);
  for (std::size_t r = 0; r < 30; ++r) {
    for (std::size_t c = 0; c < 3; ++c) x(r, c) = rng.uniform(-1, 1);
  }
  const double q[] = {3.0, -0.2, 0.1};
  const HullIndex idx(x);
  const auto v = idx.contains(q);
  REQUIRE_FALSE(v.inside);
  // Standardize with the index's convention to evaluate the plane.
  std::vector<double> mean(3, 0.0), sd(3, 0.0);
  for (std::size_t r = 0; r < 30; ++r) {
    for (int c = 0; c < 3; ++c) mean[c] += x(r, c) / 30.0;
  }
  for (std::size_t r = 0; r < 30; ++r) {
    for (int c = 0; c < 3; ++c) sd[c] += (x(r, c) - mean[c]) * (x(r, c) - mean[c]) / 30.0;
  }
  auto plane = [&](auto row) {
    double s = v.separator_offset;
    for (int c = 0; c < 3; ++c) s += v.separator[c] * (row[c] - mean[c]) / std::sqrt(sd[c]);
    return s;
  };
  for (std::size_t r = 0; r < 30; ++r) CHECK(plane(x.row(r)) <= 1e-9);
  CHECK(plane(std::span<const double>(q)) > 0.0);
}

TEST_CASE("verdicts match an independent LP solver on 7-D instances") {
  const auto cases = load_fixture();
  REQUIRE(cases.size() == 200);
  int disagreements = 0, inside = 0;
  for (const auto& h : cases) {
    const auto v = hull_contains(h.train, h.query);
    disagreements += v.inside != h.inside;
    inside += v.inside;
    if (v.inside) check_certificate(h.train, h.query, v);
  }
  CHECK(disagreements == 0);
  CHECK(inside == 82);
}

TEST_CASE("convex combinations and training rows are inside") {
  Rng rng(8);
  Matrix x(40, 7);
  for (std::size_t r = 0; r < 40; ++r) {
    for (std::size_t c = 0; c < 7; ++c) x(r, c) = rng.uniform(-10, 10) * (c + 1);
  }
  Matrix q(60, 7);
  for (std::size_t k = 0; k < 40; ++k) {
    for (std::size_t c = 0; c < 7; ++c) q(k, c) = x(k, c);
  }
  for (std::size_t k = 40; k < 60; ++k) {
    std::vector<double> w(40);
    double s = 0.0;
    for (auto& v : w) s += (v = rng.uniform());
    for (std::size_t c = 0; c < 7; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < 40; ++r) acc += w[r] / s * x(r, c);
      q(k, c) = acc;
    }
  }
  const auto summary = classify_batch(x, q);
  CHECK(summary.inside == 60);
  CHECK(summary.outside == 0);
  for (std::size_t k = 0; k < 60; ++k) check_certificate(x, q.row(k), summary.verdicts[k]);
}

TEST_CASE("parallel classification equals the serial reference") {
  const auto cases = load_fixture();
  Matrix q;
  for (std::size_t k = 0; k < 40; ++k) q.append_row(cases[k].query);
  const auto a = classify_batch(cases[0].train, q);
  const auto b = classify_batch_serial(cases[0].train, q);
  CHECK(a.inside == b.inside);
  for (std::size_t k = 0; k < 40; ++k) {
    CHECK(a.verdicts[k].inside == b.verdicts[k].inside);
    CHECK(a.verdicts[k].slack == b.verdicts[k].slack);
    CHECK(a.verdicts[k].weights == b.verdicts[k].weights);
  }
}

TEST_CASE("verdicts are invariant under per-feature affine maps") {
  const auto cases = load_fixture();
  Rng rng(12);
  for (std::size_t k = 0; k < 50; ++k) {
    const auto& h = cases[k];
    std::vector<double> scale(7), shift(7);
    for (int c = 0; c < 7; ++c) {
      scale[c] = std::exp(rng.uniform(-6, 6));
      shift[c] = rng.uniform(-1e3, 1e3);
    }
    Matrix x = h.train;
    std::vector<double> q = h.query;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (int c = 0; c < 7; ++c) x(r, c) = x(r, c) * scale[c] + shift[c];
    }
    for (int c = 0; c < 7; ++c) q[c] = q[c] * scale[c] + shift[c];
    CHECK(hull_contains(x, q).inside == h.inside);
  }
}

TEST_CASE("pca: perfectly correlated features") {
  Matrix x;
  for (int k = 0; k < 10; ++k) x.append_row(std::vector<double>{double(k), 2.0 * k - 3.0});
  const auto p = fit_pca(x);
  CHECK(p.explained_variance[1] == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  const double total = p.explained_variance[0] + p.explained_variance[1];
  CHECK(p.explained_variance[0] / total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.components(0, 1) > 0.0);
}

TEST_CASE("pca: isotropic data has equal variances") {
  const auto p = fit_pca(unit_square());
  CHECK(p.explained_variance[0] == doctest::Approx(p.explained_variance[1]).epsilon(1e-12));
  CHECK(p.explained_variance[0] == doctest::Approx(0.25));
}

TEST_CASE("pca: known diagonal covariance") {
  // +-a e_i along each axis gives population covariance diag(a^2).
  Matrix x;
  const double a[] = {0.5, 2.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    for (double s : {-1.0, 1.0}) {
      std::vector<double> row(3, 0.0);
      row[i] = s * a[i] * std::sqrt(3.0);
      x.append_row(row);
    }
  }
  const auto p = fit_pca(x);
  CHECK(p.explained_variance[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(p.explained_variance[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.explained_variance[2] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.components(0, 1) == doctest::Approx(1.0));
  CHECK(p.components(1, 2) == doctest::Approx(1.0));
  CHECK(p.components(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("pca: orthonormal, sorted, reconstructs") {
  const auto cases = load_fixture();
  for (std::size_t k = 0; k < 20; ++k) {
    const auto& x = cases[k].train;
    const auto p = fit_pca(x);
    for (std::size_t i = 0; i < 7; ++i) {
      if (i > 0) CHECK(p.explained_variance[i] <= p.explained_variance[i - 1]);
      for (std::size_t j = 0; j < 7; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < 7; ++c) dot += p.components(i, c) * p.components(j, c);
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto back = p.reconstruct(p.project(x.row(r)));
      for (std::size_t c = 0; c < 7; ++c) {
        CHECK(std::abs(back[c] - x(r, c)) <= 1e-9 * std::max(1.0, std::abs(x(r, c))));
      }
    }
  }
}

TEST_CASE("exports") {
  const auto sq = unit_square();
  Matrix q;
  q.append_row(std::vector<double>{0.5, 0.5});
  q.append_row(std::vector<double>{2.0, 2.0});
  const auto s = classify_batch(sq, q);
  const auto v = format_verdicts(s);
  CHECK(v.rfind("row,inside,slack\n0,1,", 0) == 0);
  CHECK(v.find("\n1,0,") != std::string::npos);
  const auto proj = format_projection(fit_pca(sq, 2), sq, q, s);
  CHECK(proj.rfind("pc1,pc2,label\n", 0) == 0);
  CHECK(proj.find(",inside\n") != std::string::npos);
  CHECK(proj.find(",outside\n") != std::string::npos);
}
