#include "otfs/channel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace otfs {

namespace {

constexpr double kC0 = 299792458.0;  // speed of light [m/s]

// Flattened subpath ready for tap/tensor accumulation.
struct FlatSub {
  cd beta0;     // weighted gain (antenna phase folded in where applicable)
  double nu;    // Doppler [Hz]
  double psi;   // normalized spatial angle
  int path;     // owning path index (pulse row lookup)
};

// Pulse row over taps l in [0, L] for one path: values p_rc(l - cell), cut to
// |l - cell| <= L. Returns the nonzero range [lo, hi] (lo > hi when empty).
struct PulseRow {
  std::vector<double> pv;
  int lo = 0, hi = -1;
};

PulseRow pulse_row(double tau, double t_s, double rolloff, int L) {
  PulseRow row;
  row.pv.assign(L + 1, 0.0);
  const double cell = tau / t_s;
  row.lo = L + 1;
  row.hi = -1;
  for (int l = 0; l <= L; ++l) {
    if (std::abs(l - cell) <= double(L)) {
      row.pv[l] = rc_pulse(l - cell, rolloff);
      row.lo = std::min(row.lo, l);
      row.hi = std::max(row.hi, l);
    }
  }
  return row;
}

void check_tap_range(int L, const OtfsConfig& cfg) {
  if (L < 0 || L >= cfg.N_cp)
    throw std::invalid_argument(
        "channel: tap order L must lie in [0, N_cp)");
}

}  // namespace

double rel_sq_error(const Tensor3& a, const Tensor3& b) {
  if (!a.same_dims(b))
    throw std::invalid_argument("rel_sq_error: dimension mismatch");
  double num = 0;
  for (size_t i = 0; i < a.v.size(); ++i) num += std::norm(a.v[i] - b.v[i]);
  const double den = b.squared_norm();
  return den > 0 ? num / den : num;
}

cd upsilon(double x, int N) {
  // N-periodic; reduce first so large arguments stay accurate.
  const double m = std::remainder(x, double(N));
  if (std::abs(m) < 1e-13) return cd(double(N), 0.0);
  const double ratio = std::sin(M_PI * m) / std::sin(M_PI * m / N);
  return ratio * std::exp(cd(0.0, M_PI * m * (N - 1) / N));
}

double rc_pulse(double x, double rolloff) {
  const double s =
      (std::abs(x) < 1e-12) ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
  if (rolloff <= 0.0) return s;
  const double u = 2.0 * rolloff * x;
  const double den = 1.0 - u * u;
  if (std::abs(den) < 1e-9) {
    const double x0 = 1.0 / (2.0 * rolloff);
    const double s0 = std::sin(M_PI * x0) / (M_PI * x0);
    return s0 * M_PI / 4.0;
  }
  return s * std::cos(M_PI * rolloff * x) / den;
}

int delay_support_bins(double tau_max, const OtfsConfig& cfg) {
  if (tau_max < 0) throw std::invalid_argument("delay_support_bins: tau_max < 0");
  return int(std::ceil(tau_max * cfg.M * cfg.delta_f - 1e-9)) + 2;
}

int doppler_support_bins(double v, const OtfsConfig& cfg) {
  if (v < 0) throw std::invalid_argument("doppler_support_bins: v < 0");
  const double nu_span = 2.0 * v / (kC0 / cfg.f_c);
  int n = int(std::ceil(nu_span * cfg.N * cfg.T() - 1e-9)) + 2;
  if (n % 2) ++n;  // centered storage needs an even width
  return n;
}

PathSet generate_path_set(const ChannelGenParams& par, const OtfsConfig& cfg,
                          int N_t, uint64_t seed) {
  cfg.validate();
  if (par.N_p <= 0 || par.N_s <= 0)
    throw std::invalid_argument("generate_path_set: need N_p, N_s > 0");
  if (par.tau_max < 0 || par.v < 0 || par.angle_spread < 0 ||
      par.angle_spread >= 0.5)
    throw std::invalid_argument("generate_path_set: bad channel bound");
  if (N_t <= 0 || N_t % 2)
    throw std::invalid_argument("generate_path_set: N_t must be even and > 0");

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 1.0);

  const double lambda = kC0 / cfg.f_c;
  const double nu_peak = par.v / lambda;
  const double NT = cfg.N * cfg.T();
  const int n_dopp = doppler_support_bins(par.v, cfg);
  const long max_cell = long(std::floor(par.tau_max / cfg.T_s() + 1e-9));

  // Exponential power-delay profile, unit total mean power.
  std::vector<double> prof(par.N_p);
  double z = 0;
  for (int i = 0; i < par.N_p; ++i) {
    prof[i] = std::exp(-par.pdp_decay * i);
    z += prof[i];
  }
  for (double& p : prof) p /= z;

  PathSet ps;
  ps.rolloff = par.rolloff;
  ps.paths.reserve(par.N_p);
  // Draw order per path: tau, mean angle; per subpath: gain re, gain im,
  // azimuth, angle offset. Fixed so seeds reproduce across runs.
  for (int i = 0; i < par.N_p; ++i) {
    Path path;
    path.tau = uni(gen) * par.tau_max;
    if (par.on_grid_delay) {
      long cell = std::lround(path.tau / cfg.T_s());
      cell = std::clamp(cell, 0L, max_cell);
      path.tau = double(cell) * cfg.T_s();
    }
    // mean kept angle_spread away from the edges so subpath angles stay
    // inside [-1/2, 1/2) without wrapping
    const double mean_psi =
        -0.5 + par.angle_spread + uni(gen) * (1.0 - 2.0 * par.angle_spread);
    const double sigma = std::sqrt(prof[i] / (2.0 * par.N_s));
    path.subpaths.reserve(par.N_s);
    for (int s = 0; s < par.N_s; ++s) {
      Subpath sp;
      sp.alpha = cd(nrm(gen), nrm(gen)) * sigma;
      const double phi = (uni(gen) - 0.5) * M_PI;
      sp.nu = nu_peak * std::sin(phi);
      if (par.on_grid_doppler) {
        long kb = std::lround(sp.nu * NT);
        kb = std::clamp<long>(kb, -(n_dopp / 2), n_dopp / 2 - 1);
        sp.nu = double(kb) / NT;
      }
      double psi = mean_psi + (2.0 * uni(gen) - 1.0) * par.angle_spread;
      if (par.on_grid_angle) {
        long rb = std::lround(psi * N_t);
        if (rb >= N_t / 2) rb -= N_t;
        psi = double(rb) / N_t;
      }
      sp.psi = psi;
      path.subpaths.push_back(sp);
    }
    ps.paths.push_back(std::move(path));
  }
  return ps;
}

std::string path_set_to_json(const PathSet& ps) {
  nlohmann::json j;
  j["rolloff"] = ps.rolloff;
  j["paths"] = nlohmann::json::array();
  for (const Path& p : ps.paths) {
    nlohmann::json jp;
    jp["tau"] = p.tau;
    jp["subpaths"] = nlohmann::json::array();
    for (const Subpath& s : p.subpaths) {
      jp["subpaths"].push_back({{"alpha_re", s.alpha.real()},
                                {"alpha_im", s.alpha.imag()},
                                {"nu", s.nu},
                                {"psi", s.psi}});
    }
    j["paths"].push_back(std::move(jp));
  }
  return j.dump(2);
}

PathSet path_set_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  PathSet ps;
  ps.rolloff = j.at("rolloff").get<double>();
  for (const auto& jp : j.at("paths")) {
    Path p;
    p.tau = jp.at("tau").get<double>();
    for (const auto& js : jp.at("subpaths")) {
      Subpath s;
      s.alpha = cd(js.at("alpha_re").get<double>(),
                   js.at("alpha_im").get<double>());
      s.nu = js.at("nu").get<double>();
      s.psi = js.at("psi").get<double>();
      p.subpaths.push_back(s);
    }
    ps.paths.push_back(std::move(p));
  }
  return ps;
}

TapChannel time_variant_taps(const PathSet& ps, const OtfsConfig& cfg, int L,
                             int p) {
  cfg.validate();
  check_tap_range(L, cfg);
  const int F = cfg.frame_len();
  const double t_s = cfg.T_s();

  std::vector<PulseRow> rows;
  rows.reserve(ps.paths.size());
  for (const Path& path : ps.paths)
    rows.push_back(pulse_row(path.tau, t_s, ps.rolloff, L));

  std::vector<FlatSub> subs;
  for (size_t i = 0; i < ps.paths.size(); ++i) {
    if (rows[i].hi < rows[i].lo) continue;
    for (const Subpath& s : ps.paths[i].subpaths) {
      FlatSub f;
      f.beta0 = s.alpha * std::exp(cd(0, -2.0 * M_PI * p * s.psi));
      f.nu = s.nu;
      f.psi = s.psi;
      f.path = int(i);
      subs.push_back(f);
    }
  }

  TapChannel ch;
  ch.n_cp = cfg.N_cp;
  ch.taps = Eigen::MatrixXcd::Zero(F, L + 1);

  // Sample phase advances by a per-subpath rotation; chunks re-anchor the
  // phasor exactly so threads stay independent and drift stays bounded.
  const int kChunk = 256;
  const int n_chunks = (F + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n_chunks; ++c) {
    const int t0 = c * kChunk;
    const int t1 = std::min(F, t0 + kChunk);
    for (const FlatSub& f : subs) {
      const PulseRow& row = rows[f.path];
      const cd rot = std::exp(cd(0, 2.0 * M_PI * f.nu * t_s));
      // 1-based sample index kappa = t + 1
      cd val = f.beta0 * std::exp(cd(0, 2.0 * M_PI * f.nu * (t0 + 1) * t_s));
      for (int t = t0; t < t1; ++t) {
        for (int l = row.lo; l <= row.hi; ++l)
          ch.taps(t, l) += val * row.pv[l];
        val *= rot;
      }
    }
  }
  return ch;
}

Tensor3 dds_cir(const PathSet& ps, const OtfsConfig& cfg, int N_t, int L) {
  cfg.validate();
  check_tap_range(L, cfg);
  if (N_t <= 0) throw std::invalid_argument("dds_cir: N_t must be > 0");
  const int M = cfg.M, N = cfg.N;
  const double t_s = cfg.T_s();
  const double NT = N * cfg.T();

  std::vector<PulseRow> rows;
  rows.reserve(ps.paths.size());
  for (const Path& path : ps.paths)
    rows.push_back(pulse_row(path.tau, t_s, ps.rolloff, L));

  struct Factored {
    cd beta;
    std::vector<cd> ups;  // Upsilon_N(nu N T - k) over Doppler columns
    std::vector<cd> ang;  // exp(-j2pi p psi) over antennas
    int path;
  };
  std::vector<Factored> terms;
  for (size_t i = 0; i < ps.paths.size(); ++i) {
    if (rows[i].hi < rows[i].lo) continue;
    for (const Subpath& s : ps.paths[i].subpaths) {
      Factored f;
      f.beta = s.alpha * std::exp(cd(0, 2.0 * M_PI * s.nu * t_s));
      f.ups.resize(N);
      for (int j = 0; j < N; ++j)
        f.ups[j] = upsilon(s.nu * NT - off_dopp(j, N), N);
      f.ang.resize(N_t);
      for (int a = 0; a < N_t; ++a)
        f.ang[a] = std::exp(cd(0, -2.0 * M_PI * a * s.psi));
      f.path = int(i);
      terms.push_back(std::move(f));
    }
  }

  Tensor3 out(M, N, N_t);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < N; ++j) {
    for (const Factored& f : terms) {
      const PulseRow& row = rows[f.path];
      const cd c = f.beta * f.ups[j];
      for (int l = row.lo; l <= row.hi; ++l) {
        const cd cl = c * row.pv[l];
        for (int a = 0; a < N_t; ++a) out(l, j, a) += cl * f.ang[a];
      }
    }
  }
  return out;
}

Tensor3 dda_channel(const Tensor3& dds) {
  const int n0 = dds.n0, n1 = dds.n1, N_t = dds.n2;
  Eigen::MatrixXcd tab(N_t, N_t);
  for (int jr = 0; jr < N_t; ++jr)
    for (int p = 0; p < N_t; ++p)
      tab(jr, p) =
          std::exp(cd(0, 2.0 * M_PI * off_ang(jr, N_t) * p / double(N_t)));

  Tensor3 out(n0, n1, N_t);
#pragma omp parallel for schedule(static)
  for (int cell = 0; cell < n0 * n1; ++cell) {
    const int l = cell / n1, j = cell % n1;
    for (int jr = 0; jr < N_t; ++jr) {
      cd acc = 0;
      for (int p = 0; p < N_t; ++p) acc += dds(l, j, p) * tab(jr, p);
      out(l, j, jr) = acc;
    }
  }
  return out;
}

Tensor3 dds_from_dda(const Tensor3& dda) {
  const int n0 = dda.n0, n1 = dda.n1, N_t = dda.n2;
  Eigen::MatrixXcd tab(N_t, N_t);
  for (int p = 0; p < N_t; ++p)
    for (int jr = 0; jr < N_t; ++jr)
      tab(p, jr) =
          std::exp(cd(0, -2.0 * M_PI * off_ang(jr, N_t) * p / double(N_t)));

  Tensor3 out(n0, n1, N_t);
#pragma omp parallel for schedule(static)
  for (int cell = 0; cell < n0 * n1; ++cell) {
    const int l = cell / n1, j = cell % n1;
    for (int p = 0; p < N_t; ++p) {
      cd acc = 0;
      for (int jr = 0; jr < N_t; ++jr) acc += dda(l, j, jr) * tab(p, jr);
      out(l, j, p) = acc / double(N_t);
    }
  }
  return out;
}

Eigen::VectorXcd truncate_and_vectorize(const Tensor3& dda, int M_g, int N_g) {
  if (M_g <= 0 || M_g > dda.n0 || N_g <= 0 || N_g > dda.n1 || N_g % 2)
    throw std::invalid_argument("truncate_and_vectorize: bad window");
  const int N_t = dda.n2;
  const int jk0 = (dda.n1 - N_g) / 2;  // full-grid column of k = -N_g/2
  Eigen::VectorXcd h(std::ptrdiff_t(M_g) * N_g * N_t);
  for (int jr = 0; jr < N_t; ++jr)
    for (int l = 0; l < M_g; ++l)
      for (int jk = 0; jk < N_g; ++jk)
        h(jr * M_g * N_g + l * N_g + jk) = dda(l, jk0 + jk, jr);
  return h;
}

Tensor3 invec(const Eigen::VectorXcd& h, int M_g, int N_g, int N_t) {
  if (h.size() != std::ptrdiff_t(M_g) * N_g * N_t)
    throw std::invalid_argument("invec: length mismatch");
  Tensor3 t(M_g, N_g, N_t);
  for (int jr = 0; jr < N_t; ++jr)
    for (int l = 0; l < M_g; ++l)
      for (int jk = 0; jk < N_g; ++jk)
        t(l, jk, jr) = h(jr * M_g * N_g + l * N_g + jk);
  return t;
}

Tensor3 embed_full(const Tensor3& truncated, int M, int N) {
  const int M_g = truncated.n0, N_g = truncated.n1, N_t = truncated.n2;
  if (M_g > M || N_g > N || (N - N_g) % 2)
    throw std::invalid_argument("embed_full: window does not fit");
  Tensor3 out(M, N, N_t);
  const int jk0 = (N - N_g) / 2;
  for (int l = 0; l < M_g; ++l)
    for (int jk = 0; jk < N_g; ++jk)
      for (int jr = 0; jr < N_t; ++jr)
        out(l, jk0 + jk, jr) = truncated(l, jk, jr);
  return out;
}

namespace ref {

TapChannel time_variant_taps(const PathSet& ps, const OtfsConfig& cfg, int L,
                             int p) {
  cfg.validate();
  check_tap_range(L, cfg);
  const int F = cfg.frame_len();
  const double t_s = cfg.T_s();
  TapChannel ch;
  ch.n_cp = cfg.N_cp;
  ch.taps = Eigen::MatrixXcd::Zero(F, L + 1);
  for (int t = 0; t < F; ++t)
    for (const Path& path : ps.paths) {
      const double cell = path.tau / t_s;
      for (int l = 0; l <= L; ++l) {
        if (std::abs(l - cell) > double(L)) continue;
        const double pv = rc_pulse(l - cell, ps.rolloff);
        for (const Subpath& s : path.subpaths)
          ch.taps(t, l) += s.alpha *
                           std::exp(cd(0, 2.0 * M_PI * s.nu * (t + 1) * t_s)) *
                           pv * std::exp(cd(0, -2.0 * M_PI * p * s.psi));
      }
    }
  return ch;
}

Tensor3 dds_cir(const PathSet& ps, const OtfsConfig& cfg, int N_t, int L) {
  cfg.validate();
  check_tap_range(L, cfg);
  const int M = cfg.M, N = cfg.N;
  const double t_s = cfg.T_s();
  const double NT = N * cfg.T();
  Tensor3 out(M, N, N_t);
  for (int l = 0; l < M; ++l)
    for (int j = 0; j < N; ++j) {
      const int k = off_dopp(j, N);
      for (int a = 0; a < N_t; ++a) {
        cd acc = 0;
        for (const Path& path : ps.paths) {
          const double cell = path.tau / t_s;
          if (l > L || std::abs(l - cell) > double(L)) continue;
          const double pv = rc_pulse(l - cell, ps.rolloff);
          for (const Subpath& s : path.subpaths) {
            // periodic kernel evaluated by explicit summation
            cd ups = 0;
            const double x = s.nu * NT - k;
            for (int n = 0; n < N; ++n)
              ups += std::exp(cd(0, 2.0 * M_PI * x * n / N));
            acc += s.alpha * std::exp(cd(0, 2.0 * M_PI * s.nu * t_s)) * ups *
                   pv * std::exp(cd(0, -2.0 * M_PI * a * s.psi));
          }
        }
        out(l, j, a) = acc;
      }
    }
  return out;
}

Tensor3 dda_channel(const Tensor3& dds) {
  const int n0 = dds.n0, n1 = dds.n1, N_t = dds.n2;
  Tensor3 out(n0, n1, N_t);
  for (int l = 0; l < n0; ++l)
    for (int j = 0; j < n1; ++j)
      for (int jr = 0; jr < N_t; ++jr) {
        cd acc = 0;
        for (int p = 0; p < N_t; ++p)
          acc += dds(l, j, p) *
                 std::exp(cd(0, 2.0 * M_PI * off_ang(jr, N_t) * p /
                                    double(N_t)));
        out(l, j, jr) = acc;
      }
  return out;
}

}  // namespace ref

}  // namespace otfs
