#pragma once

#include <cstdint>

#include "otfs/config.hpp"
#include "otfs/types.hpp"

namespace otfs {

/*
 * OTFS modem with unitary (1/sqrt) DFT normalization throughout, so
 * demodulate(modulate(X)) == X exactly and Parseval holds without scale
 * factors. The delay-Doppler convolution identities used on the estimation
 * side are conventionally written with unnormalized DFTs; the unitary chain
 * output differs from that model domain by the constant conv_model_gain()
 * (= N), applied once wherever a demodulated frame feeds an estimator.
 */

// Unitary n x n DFT matrix, standard bin order: F(a,b) = exp(-j2pi ab/n)/sqrt(n).
Eigen::MatrixXcd dft_matrix(int n);

// Unitary Doppler transform with centered bins: column offset j carries
// Doppler k = j - N/2, G(n,j) = exp(-j2pi n (j-N/2)/N)/sqrt(N). Using a
// centered column order keeps every delay-Doppler matrix in the storage
// convention of types.hpp end to end.
Eigen::MatrixXcd doppler_dft_matrix(int N);

// ISFFT: X_ft = F_M * X_dd * G_N^H. Inverse pair: sfft(isfft(X)) == X.
Eigen::MatrixXcd isfft(const Eigen::MatrixXcd& x_dd);

// SFFT: X_dd = F_M^H * X_ft * G_N.
Eigen::MatrixXcd sfft(const Eigen::MatrixXcd& x_ft);

/*
 * Time-variant tap-delay-line channel over one frame. taps(t, l) is the gain
 * of delay tap l for output sample t, t in [0, frame_len). The tap order L =
 * cols-1 must stay below N_cp so each retained symbol sees an ISI-free
 * circular channel; n_cp records that bound and apply_channel enforces it
 * when set.
 */
struct TapChannel {
  Eigen::MatrixXcd taps;
  int n_cp = 0;
  int L() const { return static_cast<int>(taps.cols()) - 1; }
};

// X_dd (M x N) -> transmit vector of length (M+N_cp)*N. Per Doppler transform
// the frame becomes M-length time symbols; each symbol gets a cyclic prefix
// (copy of its last N_cp samples) and symbols are concatenated in time.
Eigen::VectorXcd otfs_modulate(const Eigen::MatrixXcd& x_dd, const OtfsConfig& cfg);

// Linear time-variant convolution r[t] = sum_l taps(t,l) * s[t-l] (zero
// prehistory), plus circularly-symmetric AWGN of the given power when
// noise_power > 0. Deterministic in seed.
Eigen::VectorXcd apply_channel(const Eigen::VectorXcd& s, const TapChannel& ch,
                               double noise_power, uint64_t seed);

// Adds CN(0, noise_power) per sample in place. Deterministic in seed.
void add_awgn(Eigen::VectorXcd& s, double noise_power, uint64_t seed);

// Received vector -> M x N delay-Doppler frame: split into symbols, drop each
// CP, apply the Doppler transform. Exact inverse of otfs_modulate for an
// identity channel.
Eigen::MatrixXcd otfs_demodulate(const Eigen::VectorXcd& r, const OtfsConfig& cfg);

// Delay-Doppler response of a tap channel: per-symbol tap snapshots taken at
// the block starts, DFT'd across the N symbols,
//   H(l, k) = sum_i taps((i-1)(M+N_cp), l) * exp(-j2pi (i-1) k / N),
// for l in [0, M-1] (zero beyond L) and centered k. Periodic continuation in
// both axes is implied by the storage convention.
Eigen::MatrixXcd compute_h_dd(const TapChannel& ch, const OtfsConfig& cfg);

// Large-N delay-Doppler input-output prediction:
//   Y(l,k) = sum_{l',k'} X(l',k') H((l-l') mod M, wrap(k-k')) *
//            exp(j2pi l (k-k') / (N (M+N_cp)))
// with H given by compute_h_dd and the phase using the unwrapped difference
// k-k'. The physical chain equals this model divided by conv_model_gain(),
// up to a residual that vanishes as N grows.
Eigen::MatrixXcd lemma1_predict(const Eigen::MatrixXcd& x_dd,
                                const Eigen::MatrixXcd& h_dd,
                                const OtfsConfig& cfg);

// Bridge constant between the unitary chain output and the unnormalized
// convolution model domain.
inline double conv_model_gain(const OtfsConfig& cfg) { return static_cast<double>(cfg.N); }

}  // namespace otfs
