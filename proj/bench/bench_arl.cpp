// Times the OpenMP replicate loop against the serial reference loop on the
// same workload and checks that both return bitwise identical estimates.
//
//   cewma_bench [replicates] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "cewma/chart.hpp"
#include "cewma/mc.hpp"
#include "cewma/misclass.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cewma;

  ChartConfig cfg;
  cfg.p0 = 0.05;
  cfg.lambda = 0.05;
  cfg.n = 20;
  cfg.arl0_target = 370.0;
  cfg.replicates = argc > 1 ? std::atoll(argv[1]) : 10001;
  cfg.validate();
  const MisclassMatrix pi = misclass_from_diagonal(0.95, 0.95);
  const ChartVariant variant = ChartVariant::Corrected;
  const double l = 2.0;
  const auto gen = in_control_generator(variant, cfg, pi);

#ifdef _OPENMP
  if (argc > 2) omp_set_num_threads(std::atoi(argv[2]));
  std::printf("openmp max threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without openmp, both runs are serial\n");
#endif
  std::printf("workload: corrected chart, n=%d, p0=%g, lambda=%g, L=%g, M=%lld\n",
              cfg.n, cfg.p0, cfg.lambda, l, static_cast<long long>(cfg.replicates));

  auto start = Clock::now();
  const ArlEstimate parallel = estimate_arl(variant, l, cfg, pi, gen);
  const double t_parallel = seconds_since(start);

  start = Clock::now();
  const ArlEstimate serial = estimate_arl_reference(variant, l, cfg, pi, gen);
  const double t_serial = seconds_since(start);

  std::printf("parallel: arl=%.6f se=%.6f censored=%lld  %.3fs\n",
              parallel.mean_rl, parallel.std_error,
              static_cast<long long>(parallel.censored), t_parallel);
  std::printf("serial:   arl=%.6f se=%.6f censored=%lld  %.3fs\n",
              serial.mean_rl, serial.std_error,
              static_cast<long long>(serial.censored), t_serial);
  std::printf("speedup: %.2fx\n", t_serial / t_parallel);

  const bool same = parallel.mean_rl == serial.mean_rl &&
                    parallel.std_error == serial.std_error &&
                    parallel.censored == serial.censored &&
                    parallel.replicates == serial.replicates;
  std::printf("bitwise identical: %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}
