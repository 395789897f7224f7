#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otfs/config.hpp"
#include "otfs/modem.hpp"
#include "otfs/types.hpp"

namespace otfs {

/*
 * Clustered geometric channel for a downlink with N_t transmit antennas (ULA,
 * half-wavelength spacing) and a single receive antenna. N_p scatters, each a
 * cluster of N_s subpaths sharing the cluster delay but with individual
 * complex gain, Doppler shift and normalized spatial angle psi in [-1/2, 1/2).
 *
 * Per-antenna taps:
 *   h(kappa, l, p) = sum_i sum_{s in i} alpha_s exp(j2pi nu_s kappa T_s)
 *                    p_rc(l T_s - tau_i) exp(-j2pi p psi_s)
 * with p_rc the peak-1 raised-cosine pulse and kappa the 1-based sample index.
 *
 * Three equivalent representations:
 *   DDS  H(l, k, p)  delay-Doppler per antenna  (closed form: dds_cir)
 *   DDA  H(l, k, r)  delay-Doppler-angle, unnormalized DFT across antennas
 * The forward angle transform carries no 1/N_t; the inverse does, so the round
 * trip is the identity.
 */

// Periodic sinc kernel: sum_{n=1}^{N} exp(j2pi x (n-1) / N). Equals
// sin(pi x)/sin(pi x / N) * exp(j pi x (N-1)/N), with the removable
// singularity at x == 0 (mod N) evaluating to N.
cd upsilon(double x, int N);

// Raised-cosine pulse, unit peak, x = t / T_s. Roll-off in [0, 1].
double rc_pulse(double x, double rolloff);

struct Subpath {
  cd alpha;     // complex gain
  double nu;    // Doppler shift [Hz]
  double psi;   // normalized spatial angle in [-1/2, 1/2)
};

struct Path {
  double tau;   // cluster delay [s]
  std::vector<Subpath> subpaths;
};

struct PathSet {
  std::vector<Path> paths;
  double rolloff = 0.3;  // pulse roll-off used when materializing taps
};

std::string path_set_to_json(const PathSet& ps);
PathSet path_set_from_json(const std::string& text);

struct ChannelGenParams {
  int N_p = 6;                // scattering clusters
  int N_s = 20;               // subpaths per cluster
  double v = 100.0;           // terminal speed [m/s]
  double tau_max = 6.25e-6;   // delay spread bound [s]
  double angle_spread = 0.0625;  // subpath angle half-spread around the cluster mean
  double pdp_decay = 0.5;     // exponential power-delay profile exponent
  double rolloff = 0.3;       // raised-cosine roll-off
  // Snap draws to the estimation grids (exact-support test channels).
  bool on_grid_delay = false;
  bool on_grid_doppler = false;
  bool on_grid_angle = false;
};

// Channel support extents on the frame grids, including a +2 margin that
// absorbs pulse/Doppler leakage skirts.
int delay_support_bins(double tau_max, const OtfsConfig& cfg);
int doppler_support_bins(double v, const OtfsConfig& cfg);

// Draws a PathSet: cluster delays U[0, tau_max], cluster mean angles uniform
// with the spread kept inside [-1/2, 1/2), per-subpath angles uniform in the
// spread, Doppler nu = (v/lambda) sin(phi) with phi ~ U[-pi/2, pi/2), gains
// CN(0, P_i/N_s) under an exponential delay profile normalized to unit total
// mean power. Deterministic in seed; N_t only matters for on-grid angle snaps.
PathSet generate_path_set(const ChannelGenParams& par, const OtfsConfig& cfg,
                          int N_t, uint64_t seed);

// Materializes antenna p's taps over one frame, taps l in [0, L], L < N_cp.
// Pulse values are cut to the stored tap range (|l - tau/T_s| <= L), the same
// rule dds_cir applies, so the two representations agree exactly.
TapChannel time_variant_taps(const PathSet& ps, const OtfsConfig& cfg, int L, int p);

// Closed-form delay-Doppler-spatial tensor (M x N x N_t):
//   H(l, k, p) = sum_i sum_s beta_s Upsilon_N(nu_s N T - k)
//                p_rc(l T_s - tau_i) exp(-j2pi p psi_s),  beta = alpha exp(j2pi nu T_s).
// Algebraically identical to compute_h_dd(time_variant_taps(...)) per antenna.
Tensor3 dds_cir(const PathSet& ps, const OtfsConfig& cfg, int N_t, int L);

// Angle transform across antennas: A(l, k, r) = sum_p S(l, k, p) e^{+j2pi r p / N_t}.
Tensor3 dda_channel(const Tensor3& dds);

// Inverse with 1/N_t: S(l, k, p) = (1/N_t) sum_r A(l, k, r) e^{-j2pi r p / N_t}.
Tensor3 dds_from_dda(const Tensor3& dda);

// Stacks the truncated DDA tensor (delay [0, M_g), centered Doppler block of
// width N_g, all angles) into a vector of length M_g*N_g*N_t: angle blocks in
// ascending r, each block ordered l*N_g + (k + N_g/2).
Eigen::VectorXcd truncate_and_vectorize(const Tensor3& dda, int M_g, int N_g);

// Inverse of truncate_and_vectorize into an M_g x N_g x N_t tensor.
Tensor3 invec(const Eigen::VectorXcd& h, int M_g, int N_g, int N_t);

// Zero-pads a truncated tensor back onto the full M x N grid (delay rows at
// [0, M_g), Doppler block centered).
Tensor3 embed_full(const Tensor3& truncated, int M, int N);

namespace ref {
// Serial reference kernels: direct evaluation of the defining sums (upsilon by
// explicit summation, taps by per-sample exponentials). Oracles for the
// factored/recurrence production kernels above.
TapChannel time_variant_taps(const PathSet& ps, const OtfsConfig& cfg, int L, int p);
Tensor3 dds_cir(const PathSet& ps, const OtfsConfig& cfg, int N_t, int L);
Tensor3 dda_channel(const Tensor3& dds);
}  // namespace ref

}  // namespace otfs
