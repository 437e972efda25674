// Serial reference vs OpenMP kernels: median wall time over repetitions and
// a bitwise comparison of the two outputs.
//
//   chfkit_bench [--reps N]

#include "chfkit/channel.hpp"
#include "chfkit/domain.hpp"
#include "chfkit/hybrid.hpp"
#include "chfkit/mlp.hpp"
#include "chfkit/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

using namespace chfkit;

namespace {

template <class F>
double median_ms(int reps, F&& f) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto a = std::chrono::steady_clock::now();
    f();
    const auto b = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double, std::milli>(b - a).count());
  }
  std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
  return t[t.size() / 2];
}

void row(const char* kernel, std::size_t n, double serial, double parallel, bool same) {
  std::printf("%-22s %8zu %12.3f %12.3f %8.2fx %s\n", kernel, n, serial, parallel, serial / parallel,
              same ? "identical" : "DIFFERENT");
}

InletConditions random_inlet(Rng& rng) {
  return {rng.uniform(0.006, 0.014), rng.uniform(1.0, 4.0), rng.uniform(3e6, 12e6), rng.uniform(1000, 4000),
          rng.uniform(5e4, 3e5)};
}

} // namespace

int main(int argc, char** argv) {
  int reps = 5;
  for (int k = 1; k + 1 < argc; ++k) {
    if (std::strcmp(argv[k], "--reps") == 0) reps = std::max(1, std::stoi(argv[k + 1]));
  }
  std::printf("threads %d, median of %d\n", omp_get_max_threads(), reps);
  std::printf("%-22s %8s %12s %12s %9s\n", "kernel", "n", "serial_ms", "openmp_ms", "speedup");
  Rng rng(2024);

  {
    const auto m = make_mlp(5, kReferenceHiddenWidths, Activation::tanh, 1);
    for (std::size_t n : {1000u, 100000u}) {
      Matrix x(n, 5);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < 5; ++c) x(r, c) = rng.uniform(-2.0, 2.0);
      }
      std::vector<double> a, b;
      const double ts = median_ms(reps, [&] { a = forward_batch_serial(m, x); });
      const double tp = median_ms(reps, [&] { b = forward_batch(m, x); });
      row("forward_batch", n, ts, tp, a == b);
    }
  }

  {
    Matrix train(400, 7), queries(200, 7);
    for (std::size_t r = 0; r < train.rows(); ++r) {
      for (std::size_t c = 0; c < 7; ++c) train(r, c) = rng.uniform(-1.0, 1.0);
    }
    for (std::size_t r = 0; r < queries.rows(); ++r) {
      for (std::size_t c = 0; c < 7; ++c) queries(r, c) = rng.uniform(-1.2, 1.2);
    }
    HullSummary a, b;
    const double ts = median_ms(reps, [&] { a = classify_batch_serial(train, queries); });
    const double tp = median_ms(reps, [&] { b = classify_batch(train, queries); });
    bool same = a.inside == b.inside;
    for (std::size_t k = 0; k < a.verdicts.size(); ++k) same = same && a.verdicts[k].inside == b.verdicts[k].inside;
    row("classify_batch", queries.rows(), ts, tp, same);
  }

  {
    std::vector<ChfRecord> recs;
    for (int k = 0; k < 2000; ++k) {
      const auto c = random_inlet(rng);
      recs.push_back({c.diameter, c.heated_length, c.pressure, c.mass_flux, 0.0, c.inlet_subcooling, std::nullopt,
                      2e6});
    }
    ResidualDataset a, b;
    const double ts = median_ms(reps, [&] { a = build_residual_dataset_serial(recs, Correlation::biasi); });
    const double tp = median_ms(reps, [&] { b = build_residual_dataset(recs, Correlation::biasi); });
    bool same = a.records.size() == b.records.size();
    for (std::size_t k = 0; same && k < a.records.size(); ++k) same = a.records[k].base_chf == b.records[k].base_chf;
    row("build_residual_dataset", recs.size(), ts, tp, same);
  }

  {
    std::vector<ChannelCase> cases;
    for (int k = 0; k < 200; ++k) {
      const auto c = random_inlet(rng);
      cases.push_back({c.diameter, c.heated_length, c.pressure, c.mass_flux, c.inlet_subcooling,
                       rng.uniform(2e5, 1.5e6), 60});
    }
    const ChfPredictor predictor(PredictorKind::base_bowring, std::nullopt, SolveMode::dsm);
    const auto chf = node_chf(predictor);
    std::vector<ChannelResult> a, b;
    const double ts = median_ms(reps, [&] { a = solve_channels_serial(cases, chf); });
    const double tp = median_ms(reps, [&] { b = solve_channels(cases, chf); });
    bool same = a.size() == b.size();
    for (std::size_t k = 0; same && k < a.size(); ++k) {
      same = a[k].error == b[k].error && a[k].profile.nodes.size() == b[k].profile.nodes.size();
      for (std::size_t j = 0; same && j < a[k].profile.nodes.size(); ++j) {
        same = a[k].profile.nodes[j].dnbr == b[k].profile.nodes[j].dnbr;
      }
    }
    row("solve_channels", cases.size(), ts, tp, same);
  }
  return 0;
}
