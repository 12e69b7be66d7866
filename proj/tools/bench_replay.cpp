// Benchmark: serial reference replay kernel vs the OpenMP one.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "emsched/coordinator.hpp"
#include "emsched/validation.hpp"

using namespace emsched;

namespace {

double bench(const char* name, int reps, const std::function<void()>& fn) {
  double best = 1e99;
  for (int k = 0; k < reps; ++k) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (dt < best) best = dt;
  }
  std::printf("%-10s best of %d: %8.3f ms\n", name, reps, best * 1e3);
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 5000;
  int threads = argc > 2 ? std::atoi(argv[2]) : 0;

  Scenario s = generate_synthetic(20, 3, 2, 42);
  CoordinatorOptions opt;
  opt.eps_ev = opt.eps_cs = opt.eps_re = 0.10;
  std::printf("solving day-ahead schedule (20 EVs)...\n");
  EcosystemSolution sol = run_day_ahead(s, opt);
  auto rs = sample_realizations(s, n, DrawKind::normal, 1, true);
  std::printf("replaying %d realizations\n", n);

  std::vector<ReplayFlags> serial, parallel;
  double ts = bench("serial", 3, [&] { serial = replay_all_serial(s, sol, rs); });
  double tp = bench("openmp", 3, [&] { parallel = replay_all(s, sol, rs, threads); });

  int diffs = 0;
  for (size_t k = 0; k < serial.size(); ++k)
    if (serial[k].ev != parallel[k].ev || serial[k].cs != parallel[k].cs ||
        serial[k].re != parallel[k].re ||
        serial[k].violated != parallel[k].violated)
      ++diffs;
  std::printf("speedup: %.2fx, result differences: %d\n", ts / tp, diffs);
  return diffs == 0 ? 0 : 1;
}
