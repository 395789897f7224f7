#include "otfs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "otfs/modem.hpp"

namespace otfs {

using nlohmann::json;

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + salt * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string version_string() { return "otfs-mimo-bench 1.0.0"; }

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

ExperimentConfig desk_profile() {
  ExperimentConfig cfg;  // struct defaults are the desk grid
  cfg.estimators = {{"somp3d", 0, 0, 0, 0.9},
                    {"omp", 0, 0, 0, 0.9},
                    {"impulse_ls", 0, 0, 0, 0.9}};
  cfg.sweep.axis = "eta";
  cfg.sweep.values = {0.3, 0.4, 0.5};
  return cfg;
}

ExperimentConfig paper_profile() {
  ExperimentConfig cfg = desk_profile();
  cfg.otfs.M = 600;
  cfg.otfs.N = 12;
  cfg.otfs.N_cp = 150;
  cfg.N_t = 32;
  cfg.channel.tau_max = 5e-6;
  cfg.channel.angle_spread = 3.0 / 64.0;
  return cfg;
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(std::string("config: unknown key '") +
                                  it.key() + "' in " + where);
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_estimator_id(const std::string& id) {
  if (id != "somp3d" && id != "omp" && id != "impulse_ls")
    throw std::invalid_argument("config: unknown estimator id '" + id + "'");
}

void check_axis(const std::string& axis) {
  if (axis != "eta" && axis != "nt" && axis != "snr")
    throw std::invalid_argument("config: unknown sweep axis '" + axis + "'");
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text,
                                  const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config: not a JSON object");
  require_keys(j,
               {"otfs", "channel", "N_t", "eta", "snr_db", "estimators",
                "sweep", "trials", "base_seed", "deterministic_output", "L"},
               "top level");
  if (j.contains("otfs")) {
    const json& o = j["otfs"];
    require_keys(o, {"M", "N", "N_cp", "delta_f", "f_c"}, "otfs");
    maybe(o, "M", cfg.otfs.M);
    maybe(o, "N", cfg.otfs.N);
    maybe(o, "N_cp", cfg.otfs.N_cp);
    maybe(o, "delta_f", cfg.otfs.delta_f);
    maybe(o, "f_c", cfg.otfs.f_c);
  }
  if (j.contains("channel")) {
    const json& c = j["channel"];
    require_keys(c,
                 {"N_p", "N_s", "v", "tau_max", "angle_spread", "pdp_decay",
                  "rolloff", "on_grid_delay", "on_grid_doppler",
                  "on_grid_angle"},
                 "channel");
    maybe(c, "N_p", cfg.channel.N_p);
    maybe(c, "N_s", cfg.channel.N_s);
    maybe(c, "v", cfg.channel.v);
    maybe(c, "tau_max", cfg.channel.tau_max);
    maybe(c, "angle_spread", cfg.channel.angle_spread);
    maybe(c, "pdp_decay", cfg.channel.pdp_decay);
    maybe(c, "rolloff", cfg.channel.rolloff);
    maybe(c, "on_grid_delay", cfg.channel.on_grid_delay);
    maybe(c, "on_grid_doppler", cfg.channel.on_grid_doppler);
    maybe(c, "on_grid_angle", cfg.channel.on_grid_angle);
  }
  maybe(j, "N_t", cfg.N_t);
  maybe(j, "eta", cfg.eta);
  maybe(j, "snr_db", cfg.snr_db);
  if (j.contains("estimators")) {
    cfg.estimators.clear();
    for (const json& e : j["estimators"]) {
      require_keys(e, {"id", "K", "iters", "D", "epsilon"}, "estimators[]");
      EstimatorSpec spec;
      spec.id = e.at("id").get<std::string>();
      check_estimator_id(spec.id);
      maybe(e, "K", spec.K);
      maybe(e, "iters", spec.iters);
      maybe(e, "D", spec.D);
      maybe(e, "epsilon", spec.epsilon);
      cfg.estimators.push_back(spec);
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    require_keys(s, {"axis", "values"}, "sweep");
    maybe(s, "axis", cfg.sweep.axis);
    check_axis(cfg.sweep.axis);
    maybe(s, "values", cfg.sweep.values);
  }
  maybe(j, "trials", cfg.trials);
  maybe(j, "base_seed", cfg.base_seed);
  maybe(j, "deterministic_output", cfg.deterministic_output);
  maybe(j, "L", cfg.L);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["otfs"] = {{"M", cfg.otfs.M},
               {"N", cfg.otfs.N},
               {"N_cp", cfg.otfs.N_cp},
               {"delta_f", cfg.otfs.delta_f},
               {"f_c", cfg.otfs.f_c}};
  j["channel"] = {{"N_p", cfg.channel.N_p},
                  {"N_s", cfg.channel.N_s},
                  {"v", cfg.channel.v},
                  {"tau_max", cfg.channel.tau_max},
                  {"angle_spread", cfg.channel.angle_spread},
                  {"pdp_decay", cfg.channel.pdp_decay},
                  {"rolloff", cfg.channel.rolloff},
                  {"on_grid_delay", cfg.channel.on_grid_delay},
                  {"on_grid_doppler", cfg.channel.on_grid_doppler},
                  {"on_grid_angle", cfg.channel.on_grid_angle}};
  j["N_t"] = cfg.N_t;
  j["eta"] = cfg.eta;
  j["snr_db"] = cfg.snr_db;
  j["estimators"] = json::array();
  for (const EstimatorSpec& e : cfg.estimators)
    j["estimators"].push_back({{"id", e.id},
                               {"K", e.K},
                               {"iters", e.iters},
                               {"D", e.D},
                               {"epsilon", e.epsilon}});
  j["sweep"] = {{"axis", cfg.sweep.axis}, {"values", cfg.sweep.values}};
  j["trials"] = cfg.trials;
  j["base_seed"] = cfg.base_seed;
  j["deterministic_output"] = cfg.deterministic_output;
  j["L"] = cfg.L;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Overhead resolution
// ---------------------------------------------------------------------------

OverheadResolution resolve_overhead(double eta, const OtfsConfig& cfg, int M_g,
                                    int N_g, int M_max, int N_max) {
  cfg.validate();
  if (M_g < M_max || N_g < N_max)
    throw std::invalid_argument("resolve_overhead: guards below support");
  const long budget =
      static_cast<long>(std::floor(eta * cfg.M * cfg.N + 1e-9));
  const int n_nu_min = (N_max % 2 == 0) ? N_max : N_max + 1;

  OverheadResolution best;
  long best_cells = -1;
  for (int n_nu = n_nu_min; n_nu + N_g <= cfg.N; n_nu += 2) {
    for (int m_tau = M_max; m_tau + M_g <= cfg.M; ++m_tau) {
      const long cells = static_cast<long>(m_tau + M_g) * (n_nu + N_g);
      if (cells > budget) break;
      if (cells > best_cells || (cells == best_cells && n_nu > best.N_nu)) {
        best_cells = cells;
        best.M_tau = m_tau;
        best.N_nu = n_nu;
      }
    }
  }
  if (best_cells < 0) {
    const double min_eta = static_cast<double>(M_max + M_g) *
                           (n_nu_min + N_g) / (cfg.M * cfg.N);
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "resolve_overhead: eta %.6g infeasible; minimum feasible "
                  "eta is %.6g",
                  eta, min_eta);
    throw std::invalid_argument(buf);
  }
  best.achieved = static_cast<double>(best_cells) / (cfg.M * cfg.N);
  return best;
}

// ---------------------------------------------------------------------------
// Trial pipeline
// ---------------------------------------------------------------------------

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

std::string join_flags(std::initializer_list<std::pair<const char*, bool>> fs) {
  std::string out;
  for (const auto& [name, on] : fs) {
    if (!on) continue;
    if (!out.empty()) out += ';';
    out += name;
  }
  return out;
}

int auto_burst(int N_t) {
  return std::max(1, static_cast<int>(std::lround(N_t / 10.0)));
}

}  // namespace

std::vector<ResultRow> run_trial(const ExperimentConfig& cfg,
                                 double sweep_value, uint64_t seed) {
  check_axis(cfg.sweep.axis);
  OtfsConfig fr = cfg.otfs;
  fr.validate();
  int N_t = cfg.N_t;
  double eta = cfg.eta;
  double snr_db = cfg.snr_db;
  if (cfg.sweep.axis == "eta")
    eta = sweep_value;
  else if (cfg.sweep.axis == "nt")
    N_t = static_cast<int>(std::lround(sweep_value));
  else
    snr_db = sweep_value;
  if (N_t < 2 || N_t % 2 != 0)
    throw std::invalid_argument("run_trial: N_t must be even and >= 2");
  if (cfg.estimators.empty())
    throw std::invalid_argument("run_trial: no estimators configured");

  const int L = cfg.L > 0 ? cfg.L : fr.N_cp - 1;
  const int M_max = delay_support_bins(cfg.channel.tau_max, fr);
  const int N_max = doppler_support_bins(cfg.channel.v, fr);
  const int M_g = M_max, N_g = N_max;
  const OverheadResolution ov = resolve_overhead(eta, fr, M_g, N_g, M_max, N_max);
  const double reported = (cfg.sweep.axis == "eta") ? ov.achieved : sweep_value;

  // channel realization and the ground-truth tensors
  const PathSet ps = generate_path_set(cfg.channel, fr, N_t, mix_seed(seed, 1));
  const Tensor3 dds = dds_cir(ps, fr, N_t, L);
  const Tensor3 dda = dda_channel(dds);
  std::vector<TapChannel> taps(N_t);
  for (int p = 0; p < N_t; ++p) taps[p] = time_variant_taps(ps, fr, L, p);

  // pilot frames through the physical chain; SNR is defined against the
  // average received power over the observed pilot cells, and the resulting
  // per-sample noise variance is shared by every scheme in this trial
  const PilotPattern pat =
      gen_pilots(ov.M_tau, ov.N_nu, M_g, N_g, N_t, mix_seed(seed, 2));
  pat.validate(fr, M_max, N_max);
  const std::vector<Eigen::MatrixXcd> frames = embed_pilots(pat, fr);
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(fr.frame_len());
  for (int p = 0; p < N_t; ++p)
    r += apply_channel(otfs_modulate(frames[p], fr), taps[p], 0.0, 0);
  const Eigen::VectorXcd y_clean =
      extract_received_pilots(otfs_demodulate(r, fr), pat, fr);
  const double p_rx = y_clean.squaredNorm() / y_clean.size();
  const double sigma2 = p_rx / std::pow(10.0, snr_db / 10.0);
  const uint64_t noise_seed = mix_seed(seed, 3);
  add_awgn(r, sigma2, noise_seed);
  const Eigen::VectorXcd y =
      sensing_gain(fr, N_t) *
      extract_received_pilots(otfs_demodulate(r, fr), pat, fr);

  bool want_cs = false, want_imp = false;
  for (const EstimatorSpec& e : cfg.estimators) {
    if (e.id == "impulse_ls")
      want_imp = true;
    else
      want_cs = true;
  }

  SensingSystem sys;
  Eigen::VectorXcd h_true;
  if (want_cs) {
    sys = assemble_sensing(pat, fr);
    h_true = truncate_and_vectorize(dda, M_g, N_g);
  }

  // impulse scheme: same channel, same noise realization and power; the
  // impulses live in the guard-protected pilot area of the same rectangle
  ImpulseLayout lay;
  Eigen::MatrixXcd y_imp;
  const double A = impulse_amplitude(ov.M_tau, ov.N_nu);
  if (want_imp) {
    lay = impulse_mimo_layout(N_t, M_max, N_max, ov.M_tau, ov.N_nu, M_g,
                              pat.dopp_start(fr.N), fr);
    const std::vector<Eigen::MatrixXcd> ifr = impulse_frames(lay, fr, A);
    Eigen::VectorXcd r2 = Eigen::VectorXcd::Zero(fr.frame_len());
    for (int p = 0; p < N_t; ++p)
      r2 += apply_channel(otfs_modulate(ifr[p], fr), taps[p], 0.0, 0);
    add_awgn(r2, sigma2, noise_seed);
    y_imp = otfs_demodulate(r2, fr);
  }

  std::vector<ResultRow> rows;
  rows.reserve(cfg.estimators.size());
  for (const EstimatorSpec& spec : cfg.estimators) {
    ResultRow row;
    row.sweep_axis = cfg.sweep.axis;
    row.sweep_value = reported;
    row.estimator = spec.id;
    row.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    if (spec.id == "somp3d") {
      SompParams sp;
      sp.iters = spec.iters > 0 ? spec.iters : cfg.channel.N_p;
      sp.D = spec.D > 0 ? spec.D : auto_burst(N_t);
      sp.epsilon = spec.epsilon;
      const SparseResult res = somp3d(sys, y, sp);
      row.nmse = (res.h - h_true).squaredNorm() / h_true.squaredNorm();
      row.flags = join_flags({{"regularized", res.regularized},
                              {"support_capped", res.support_capped}});
    } else if (spec.id == "omp") {
      const int D_eff = spec.D > 0 ? spec.D : auto_burst(N_t);
      int K = spec.K > 0 ? spec.K
                         : std::min(N_max * cfg.channel.N_p * D_eff,
                                    sys.rows() / 2);
      K = std::clamp(K, 1, std::min(sys.rows(), sys.cols()));
      const SparseResult res = omp_recover(sys.Psi, y, K);
      row.nmse = (res.h - h_true).squaredNorm() / h_true.squaredNorm();
      row.flags = join_flags({{"regularized", res.regularized}});
    } else {
      const std::vector<Eigen::MatrixXcd> est = impulse_ls(y_imp, lay, fr, A);
      std::vector<Eigen::MatrixXcd> truth(N_t);
      for (int p = 0; p < N_t; ++p) {
        truth[p] = Eigen::MatrixXcd::Zero(fr.M, fr.N);
        for (int l = 0; l < fr.M; ++l)
          for (int j = 0; j < fr.N; ++j) truth[p](l, j) = dds(l, j, p);
      }
      row.nmse = nmse_dd(est, truth);
      row.flags = join_flags({{"insufficient_guard", lay.insufficient_guard}});
    }
    row.runtime_ms = ms_since(t0);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("run_sweep: trials < 1");
  if (cfg.sweep.values.empty())
    throw std::invalid_argument("run_sweep: no sweep values");
  const int n_values = static_cast<int>(cfg.sweep.values.size());
  const int jobs = n_values * cfg.trials;
  std::vector<std::vector<ResultRow>> slots(jobs);

#pragma omp parallel for schedule(dynamic)
  for (int idx = 0; idx < jobs; ++idx) {
    const int vi = idx / cfg.trials;
    const int ti = idx % cfg.trials;
    slots[idx] = run_trial(cfg, cfg.sweep.values[vi],
                           cfg.base_seed + static_cast<uint64_t>(ti));
  }

  std::vector<ResultRow> rows;
  rows.reserve(static_cast<size_t>(jobs) * cfg.estimators.size());
  for (int idx = 0; idx < jobs; ++idx)
    for (ResultRow& r : slots[idx]) rows.push_back(std::move(r));
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation and writers
// ---------------------------------------------------------------------------

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<double>> samples;
  for (const ResultRow& r : rows) {
    size_t g = 0;
    for (; g < out.size(); ++g)
      if (out[g].sweep_value == r.sweep_value && out[g].estimator == r.estimator)
        break;
    if (g == out.size()) {
      out.push_back({r.sweep_value, r.estimator, 0.0, 0.0, 0});
      samples.emplace_back();
    }
    samples[g].push_back(r.nmse);
  }
  for (size_t g = 0; g < out.size(); ++g) {
    std::vector<double>& s = samples[g];
    std::sort(s.begin(), s.end());
    double sum = 0.0;
    for (double v : s) sum += v;
    out[g].count = static_cast<int>(s.size());
    out[g].mean_nmse = sum / s.size();
    out[g].median_nmse = (s.size() % 2 == 1)
                             ? s[s.size() / 2]
                             : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
  }
  return out;
}

namespace {

struct FileCloser {
  std::FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

std::FILE* open_or_throw(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

}  // namespace

void write_results_csv(const std::string& path,
                       const std::vector<ResultRow>& rows, bool deterministic) {
  std::FILE* f = open_or_throw(path);
  FileCloser fc{f};
  std::fprintf(f, "sweep_axis,sweep_value,estimator,seed,nmse,runtime_ms,flags\n");
  for (const ResultRow& r : rows)
    std::fprintf(f, "%s,%.8e,%s,%llu,%.8e,%.8e,%s\n", r.sweep_axis.c_str(),
                 r.sweep_value, r.estimator.c_str(),
                 static_cast<unsigned long long>(r.seed), r.nmse,
                 deterministic ? 0.0 : r.runtime_ms, r.flags.c_str());
}

void write_summary_csv(const std::string& path,
                       const std::vector<AggregateRow>& rows) {
  std::FILE* f = open_or_throw(path);
  FileCloser fc{f};
  std::fprintf(f, "sweep_value,estimator,mean_nmse,median_nmse,count\n");
  for (const AggregateRow& r : rows)
    std::fprintf(f, "%.8e,%s,%.8e,%.8e,%d\n", r.sweep_value,
                 r.estimator.c_str(), r.mean_nmse, r.median_nmse, r.count);
}

void write_meta_json(const std::string& path, const ExperimentConfig& cfg) {
  json j;
  j["version"] = version_string();
  j["config"] = json::parse(config_to_json(cfg));
  std::FILE* f = open_or_throw(path);
  FileCloser fc{f};
  const std::string text = j.dump(2) + "\n";
  std::fwrite(text.data(), 1, text.size(), f);
}

}  // namespace otfs
