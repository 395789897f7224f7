#pragma once

#include <stdexcept>

namespace otfs {

/*
 * Grid parameters of one OTFS frame. M delay bins (subcarriers), N Doppler
 * bins (time symbols), cyclic prefix of N_cp samples per symbol. The sample
 * period is T_s = 1/(M*delta_f) and the full symbol duration including CP is
 * T = (M+N_cp)*T_s, so a frame spans N*(M+N_cp) samples.
 */
struct OtfsConfig {
  int M = 64;
  int N = 16;
  int N_cp = 16;
  double delta_f = 15e3;  // subcarrier spacing [Hz]
  double f_c = 2.15e9;    // carrier frequency [Hz]

  double T_s() const { return 1.0 / (M * delta_f); }
  double T() const { return (M + N_cp) * T_s(); }
  int frame_len() const { return (M + N_cp) * N; }

  void validate() const {
    if (M <= 0 || N <= 0 || N_cp <= 0)
      throw std::invalid_argument("OtfsConfig: M, N, N_cp must be positive");
    if (M % 2 != 0 || N % 2 != 0)
      throw std::invalid_argument(
          "OtfsConfig: M and N must be even (centered Doppler/angle grids)");
    if (delta_f <= 0 || f_c <= 0)
      throw std::invalid_argument("OtfsConfig: delta_f and f_c must be positive");
  }
};

}  // namespace otfs
