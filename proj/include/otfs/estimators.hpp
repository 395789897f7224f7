#pragma once

#include <string>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/pilot.hpp"

namespace otfs {

// Relative squared error per antenna slice, averaged over antennas. est and
// truth are full M x N per-antenna delay-Doppler responses.
double nmse_dd(const std::vector<Eigen::MatrixXcd>& est,
               const std::vector<Eigen::MatrixXcd>& truth);

// Tensor NMSE ||est - truth||_F^2 / ||truth||_F^2 over the full grid.
double nmse_dda(const Tensor3& est, const Tensor3& truth);

// ---------------------------------------------------------------------------
// Greedy sparse recovery
// ---------------------------------------------------------------------------

struct SparseResult {
  Eigen::VectorXcd h;        // full-length coefficient vector, zero off-support
  std::vector<int> support;  // selected columns, insertion order
  bool regularized = false;  // LS fell back to Tikhonov
  bool support_capped = false;
  std::vector<double> residual_norms;  // ||r|| after each iteration
};

// Classical OMP: K iterations of correlate / argmax |Psi^H r| / LS on the
// accumulated support. Ties take the lowest index; K must not exceed rows.
SparseResult omp_recover(const Eigen::MatrixXcd& Psi, const Eigen::VectorXcd& y,
                         int K);

/*
 * Angle-burst lifting. With 1-based i in [1, N_t], j in [1, D]:
 *   i (+) j = i + j        if i + j <= N_t
 *           = i + j - N_t  otherwise
 * The lifting matrix L (N_t x N_t*D) has the single 1 of column (i-1)D + j at
 * row i (+) j, so row i of the N_t x D row-major reshape of L^T e collects the
 * cyclic window {i+1, ..., i+D} of e. A burst of length D starting at s
 * therefore maximizes row s-1 (cyclically), and the recovered start is
 * argmax_row (+) 1.
 */
int lifting_index(int i, int j, int N_t);              // 1-based in, 1-based out
Eigen::MatrixXd build_lifting_matrix(int N_t, int D);  // 0/1 entries

// Burst start (0-based) of the best cyclic length-D window of |e| (magnitudes
// given); lowest index wins ties.
int burst_start(const Eigen::VectorXd& e_mag, int D);

struct SompParams {
  int iters = 6;         // one per expected scatter
  int D = 2;             // assumed angle burst length
  double epsilon = 0.9;  // Doppler block norm-capture threshold
};

/*
 * Structured 3D-SOMP. Per iteration, on the correlation tensor E = invec of
 * Psi^H r (M_g x N_g x N_t):
 *   1. delay row with the largest slice norm,
 *   2. smallest centered Doppler block [-n, n) whose norm reaches
 *      epsilon * ||slice||, evaluated on that delay row across all angles,
 *   3. angle burst of length D located by the lifted argmax on the
 *      (delay row, Doppler block) slice norms,
 * then LS on the accumulated support and residual update. Runs exactly iters
 * iterations; all argmax ties resolve to the lowest index.
 */
SparseResult somp3d(const SensingSystem& sys, const Eigen::VectorXcd& y,
                    const SompParams& par);

// ---------------------------------------------------------------------------
// Impulse / LS baseline
// ---------------------------------------------------------------------------

/*
 * Per-antenna delay-Doppler impulses packed row-major on a grid of
 * M_max x N_max cells inside the usable pilot area (the guard-protected
 * area_M x area_N block whose origin is (delay0, dopp0)). Doppler slots come
 * first; when the area cannot hold N_t cells the delay spacing compresses
 * uniformly and insufficient_guard is set (neighboring responses then leak
 * into each other's read windows).
 */
struct ImpulseLayout {
  std::vector<int> delay_pos;  // absolute frame row per antenna
  std::vector<int> dopp_pos;   // absolute Doppler offset per antenna
  int M_max = 0, N_max = 0;
  bool insufficient_guard = false;
};

ImpulseLayout impulse_mimo_layout(int N_t, int M_max, int N_max, int area_M,
                                  int area_N, int delay0, int dopp0,
                                  const OtfsConfig& cfg);

// Per-antenna frames carrying one impulse of the given amplitude each.
std::vector<Eigen::MatrixXcd> impulse_frames(const ImpulseLayout& lay,
                                             const OtfsConfig& cfg,
                                             double amplitude);

// amplitude used by impulse_frames (equal per-antenna energy with a pilot
// block of M_tau*N_nu unit-variance cells).
inline double impulse_amplitude(int M_tau, int N_nu) {
  return std::sqrt(static_cast<double>(M_tau) * N_nu);
}

/*
 * Reads the window [l_p, l_p+M_max) x [k_p - N_max/2, k_p + N_max/2) around
 * each antenna's impulse from the received frame (single user antenna, all
 * impulses superposed), compensates the CP-referenced Doppler phase and the
 * chain gain, and returns full M x N per-antenna estimates, zero outside the
 * window. Window reads wrap modulo the frame.
 */
std::vector<Eigen::MatrixXcd> impulse_ls(const Eigen::MatrixXcd& y_dd,
                                         const ImpulseLayout& lay,
                                         const OtfsConfig& cfg,
                                         double amplitude);

}  // namespace otfs
