// Timing comparison of the OpenMP production kernels against their serial
// reference implementations on the default desk-scale problem. Speedups track
// the available cores (OMP_NUM_THREADS); on a single-core host the two
// columns mostly measure the algorithmic difference (factored recurrences vs.
// direct evaluation of the defining sums).
#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "otfs/channel.hpp"
#include "otfs/config.hpp"
#include "otfs/pilot.hpp"

using namespace otfs;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    if (ms < best) best = ms;
  }
  return best;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s %12.2f %12.2f %9.2fx\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main() {
  OtfsConfig cfg;  // desk frame 64 x 16
  const int N_t = 16, L = cfg.N_cp - 1;
  const PathSet ps = generate_path_set(ChannelGenParams{}, cfg, N_t, 9);
  const PilotPattern pat = gen_pilots(24, 12, 8, 4, N_t, 13);
  pat.validate(cfg, 8, 4);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("desk-scale kernels, %d thread(s)\n", threads);
  std::printf("%-24s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms",
              "speedup");

  double sink = 0.0;
  row("time_variant_taps x16",
      best_of(3,
              [&] {
                for (int p = 0; p < N_t; ++p)
                  sink += ref::time_variant_taps(ps, cfg, L, p).taps(0, 0).real();
              }),
      best_of(3, [&] {
        for (int p = 0; p < N_t; ++p)
          sink += time_variant_taps(ps, cfg, L, p).taps(0, 0).real();
      }));

  row("dds_cir",
      best_of(3, [&] { sink += ref::dds_cir(ps, cfg, N_t, L).v[0].real(); }),
      best_of(3, [&] { sink += dds_cir(ps, cfg, N_t, L).v[0].real(); }));

  const Tensor3 dds = dds_cir(ps, cfg, N_t, L);
  row("dda_channel",
      best_of(5, [&] { sink += ref::dda_channel(dds).v[0].real(); }),
      best_of(5, [&] { sink += dda_channel(dds).v[0].real(); }));

  row("assemble_sensing",
      best_of(3, [&] { sink += ref::assemble_sensing(pat, cfg).Psi(0, 0).real(); }),
      best_of(3, [&] { sink += assemble_sensing(pat, cfg).Psi(0, 0).real(); }));

  std::printf("# checksum %g\n", sink);
  return 0;
}
