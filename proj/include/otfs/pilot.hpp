#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otfs/config.hpp"
#include "otfs/types.hpp"

namespace otfs {

/*
 * Pilot layout: every antenna transmits an independent Gaussian pilot block in
 * the SAME delay-Doppler cells (full overlap); separation happens through the
 * angle structure of the channel. One rectangle of (M_tau+M_g) x (N_nu+N_g)
 * cells holds the pilots plus their guards:
 *
 *   delay rows [0, M_g)                guard (absorbs the delay spread of
 *                                      whatever precedes the pilots cyclically)
 *   delay rows [M_g, M_g+M_tau)        pilot block
 *   Doppler offsets: pilot block of width N_nu centered on k = 0, flanked by
 *   N_g/2 guard columns on each side.
 *
 * Everything outside the rectangle may carry data. With the guards sized to
 * the channel support, every cell that can reach the pilot observation window
 * through the channel is a pilot or a guard zero, which is what makes the
 * zero-padded sensing model below exact.
 */
struct PilotPattern {
  int M_tau = 0;   // pilot delay rows
  int N_nu = 0;    // pilot Doppler columns
  int M_g = 0;     // delay guard size == truncated channel delay support
  int N_g = 0;     // Doppler guard total == truncated channel Doppler support
  Tensor3 pilots;  // M_tau x N_nu x N_t, unit-variance complex Gaussian

  int N_t() const { return pilots.n2; }
  int delay_start() const { return M_g; }                 // first pilot row
  int dopp_start(int N) const { return N / 2 - N_nu / 2; }  // first pilot col offset
  int rect_rows() const { return M_tau + M_g; }
  int rect_cols() const { return N_nu + N_g; }
  double overhead(const OtfsConfig& cfg) const {
    return static_cast<double>(rect_rows()) * rect_cols() / (cfg.M * cfg.N);
  }
  // Layout feasibility against frame dims and channel support; throws.
  void validate(const OtfsConfig& cfg, int M_max, int N_max) const;
};

// Unit-variance complex Gaussian pilots, deterministic in seed.
PilotPattern gen_pilots(int M_tau, int N_nu, int M_g, int N_g, int N_t,
                        uint64_t seed);

// Per-antenna M x N frames: pilots in the block, zeros in the guards, data
// cells taken from `data` when given (the rectangle is overwritten), zeros
// otherwise (estimation-only frames).
std::vector<Eigen::MatrixXcd> embed_pilots(
    const PilotPattern& pat, const OtfsConfig& cfg,
    const std::vector<Eigen::MatrixXcd>* data = nullptr);

// Reads the received pilot block into the measurement vector, row index
// l_local * N_nu + (k - k_first). Pure read; no scaling.
Eigen::VectorXcd extract_received_pilots(const Eigen::MatrixXcd& y_dd,
                                         const PilotPattern& pat,
                                         const OtfsConfig& cfg);

// Angle-domain pilots z(l, k, r) = sum_p x(l, k, p) e^{-j2pi r p / N_t}.
Tensor3 angle_transform_pilots(const PilotPattern& pat);

/*
 * Sensing operator for y = Psi h + v, h = truncate_and_vectorize(H_dda):
 * column (l', k', r) of angle block r holds
 *   w(l_abs, k') * z(l - l', k - k', r)
 * over measurement rows (l, k); z is zero outside the pilot block (out-of-range
 * indices land in guard zeros, never in a periodic image), and the phase
 *   w(l_abs, k') = exp(j2pi k' (l_abs + N_cp) / (N (M + N_cp)))
 * references the Doppler rotation to the first retained sample of each symbol
 * (CP length included), which the end-to-end oracle shows is the exact
 * discrete phase against the block-start channel coefficients.
 */
struct SensingSystem {
  Eigen::MatrixXcd Psi;
  int M_tau = 0, N_nu = 0, M_g = 0, N_g = 0, N_t = 0;

  int rows() const { return M_tau * N_nu; }
  int cols() const { return M_g * N_g * N_t; }
  // l_local in [0, M_tau), k centered in [-N_nu/2, N_nu/2).
  int row_index(int l_local, int k) const {
    return l_local * N_nu + dopp_off(k, N_nu);
  }
  // l' in [0, M_g), k' centered in N_g, r centered in N_t.
  int col_index(int lp, int kp, int r) const {
    return ang_off(r, N_t) * (M_g * N_g) + lp * N_g + dopp_off(kp, N_g);
  }
};

// Phase matrix W (rows x cols); W(row, col) depends on the row's absolute
// delay and the column's Doppler index only.
Eigen::MatrixXcd build_phase_matrix(const PilotPattern& pat, const OtfsConfig& cfg);

// One angle block of the convolution matrix: rows x (M_g*N_g), entry
// (row(l,k), l'*N_g + off(k')) = z(l-l', k-k', r), zero-padded.
Eigen::MatrixXcd build_conv_matrix(const Tensor3& z, const PilotPattern& pat,
                                   int r);

// Full Psi = [W .* Z_{-Nt/2} | ... | W .* Z_{Nt/2-1}], assembled per angle
// block (blocks are independent; production version parallelizes over them).
SensingSystem assemble_sensing(const PilotPattern& pat, const OtfsConfig& cfg);

// Bridge constant: sensing_gain * extract_received_pilots(demodulated frame)
// equals Psi * h_true for the noiseless chain.
inline double sensing_gain(const OtfsConfig& cfg, int N_t) {
  return static_cast<double>(cfg.N) * N_t;
}

// Debug dumps: row-major complex64 pairs, 16-byte header {rows, cols} as
// little-endian uint64.
void dump_matrix_binary(const std::string& path, const Eigen::MatrixXcd& m);
void dump_vector_binary(const std::string& path, const Eigen::VectorXcd& v);

namespace ref {
// Serial twin of assemble_sensing (identical arithmetic per element).
SensingSystem assemble_sensing(const PilotPattern& pat, const OtfsConfig& cfg);
}  // namespace ref

}  // namespace otfs
