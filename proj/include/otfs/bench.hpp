#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/estimators.hpp"

namespace otfs {

struct EstimatorSpec {
  std::string id;        // "somp3d" | "omp" | "impulse_ls"
  int K = 0;             // omp sparsity, 0 = auto (N_max*N_p*D capped at rows/2)
  int iters = 0;         // somp iterations, 0 = channel N_p
  int D = 0;             // somp burst length, 0 = max(1, round(N_t/10))
  double epsilon = 0.9;  // somp Doppler threshold
};

struct SweepSpec {
  std::string axis = "eta";  // "eta" | "nt" | "snr"
  std::vector<double> values = {0.5};
};

struct ExperimentConfig {
  OtfsConfig otfs;
  ChannelGenParams channel;
  int N_t = 16;
  double eta = 0.5;     // pilot overhead target when not swept
  double snr_db = 5.0;  // SNR when not swept
  std::vector<EstimatorSpec> estimators;
  SweepSpec sweep;
  int trials = 100;
  uint64_t base_seed = 1;
  bool deterministic_output = false;  // write runtime_ms as 0 (byte-stable CSV)
  int L = 0;                          // channel tap order, 0 = N_cp - 1
};

ExperimentConfig desk_profile();
ExperimentConfig paper_profile();  // full-scale grid; heavy, opt-in

// JSON round trip. Parsing starts from the given profile and overrides any
// field present in the file; unknown keys throw.
ExperimentConfig config_from_json(const std::string& text,
                                  const ExperimentConfig& base);
std::string config_to_json(const ExperimentConfig& cfg);

struct OverheadResolution {
  int M_tau = 0, N_nu = 0;
  double achieved = 0.0;
};

// Largest feasible pilot rectangle with (M_tau+M_g)(N_nu+N_g) <= eta*M*N,
// subject to M_tau >= M_max, N_nu >= N_max and the frame bounds; ties prefer
// larger N_nu. Throws naming the minimum feasible eta when none fits.
OverheadResolution resolve_overhead(double eta, const OtfsConfig& cfg, int M_g,
                                    int N_g, int M_max, int N_max);

struct ResultRow {
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::string estimator;
  uint64_t seed = 0;
  double nmse = 0.0;
  double runtime_ms = 0.0;
  std::string flags;  // ';'-joined tokens, may be empty
};

// One full pipeline execution at a resolved sweep value: path set -> true
// channel tensors -> frames -> per-antenna modulate -> channel + shared noise
// -> demodulate -> measurements -> every configured estimator. Deterministic
// in (cfg, sweep_value, seed).
std::vector<ResultRow> run_trial(const ExperimentConfig& cfg, double sweep_value,
                                 uint64_t seed);

// All sweep values x trials (trial seeds base_seed + index; parallel across
// trials) in canonical row order: value-major, then trial, then estimator
// config order.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg);

struct AggregateRow {
  double sweep_value = 0.0;
  std::string estimator;
  double mean_nmse = 0.0;
  double median_nmse = 0.0;
  int count = 0;
};

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

// Fixed %.8e float formatting, fixed order; byte-identical across runs for
// deterministic_output configs.
void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows,
                       bool deterministic);
void write_summary_csv(const std::string& path,
                       const std::vector<AggregateRow>& rows);
void write_meta_json(const std::string& path, const ExperimentConfig& cfg);

std::string version_string();

// splitmix64 step; decorrelates sub-seeds derived from a trial seed.
uint64_t mix_seed(uint64_t seed, uint64_t salt);

}  // namespace otfs
