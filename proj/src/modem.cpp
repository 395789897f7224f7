#include "otfs/modem.hpp"

#include <random>

namespace otfs {

Eigen::MatrixXcd dft_matrix(int n) {
  Eigen::MatrixXcd f(n, n);
  const double s = 1.0 / std::sqrt(double(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      f(a, b) = s * std::exp(cd(0, -2.0 * M_PI * a * b / double(n)));
  return f;
}

Eigen::MatrixXcd doppler_dft_matrix(int N) {
  Eigen::MatrixXcd g(N, N);
  const double s = 1.0 / std::sqrt(double(N));
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < N; ++j)
      g(n, j) = s * std::exp(cd(0, -2.0 * M_PI * n * off_dopp(j, N) / double(N)));
  return g;
}

Eigen::MatrixXcd isfft(const Eigen::MatrixXcd& x_dd) {
  return dft_matrix(x_dd.rows()) * x_dd *
         doppler_dft_matrix(x_dd.cols()).adjoint();
}

Eigen::MatrixXcd sfft(const Eigen::MatrixXcd& x_ft) {
  return dft_matrix(x_ft.rows()).adjoint() * x_ft *
         doppler_dft_matrix(x_ft.cols());
}

Eigen::VectorXcd otfs_modulate(const Eigen::MatrixXcd& x_dd,
                               const OtfsConfig& cfg) {
  cfg.validate();
  if (x_dd.rows() != cfg.M || x_dd.cols() != cfg.N)
    throw std::invalid_argument("otfs_modulate: frame shape mismatch");
  // S = X * G^H: column n carries time symbol n.
  Eigen::MatrixXcd s_sym = x_dd * doppler_dft_matrix(cfg.N).adjoint();
  const int W = cfg.M + cfg.N_cp;
  Eigen::VectorXcd s(cfg.frame_len());
  for (int n = 0; n < cfg.N; ++n)
    for (int m = 0; m < W; ++m)
      s(n * W + m) = s_sym(wrap(m - cfg.N_cp, cfg.M), n);
  return s;
}

void add_awgn(Eigen::VectorXcd& s, double noise_power, uint64_t seed) {
  if (noise_power <= 0) return;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(noise_power / 2.0));
  for (int t = 0; t < s.size(); ++t) s(t) += cd(nd(gen), nd(gen));
}

Eigen::VectorXcd apply_channel(const Eigen::VectorXcd& s, const TapChannel& ch,
                               double noise_power, uint64_t seed) {
  if (ch.taps.rows() < s.size())
    throw std::invalid_argument("apply_channel: taps do not cover the frame");
  const int L = ch.L();
  if (ch.n_cp > 0 && L >= ch.n_cp)
    throw std::invalid_argument(
        "apply_channel: tap order must stay below the cyclic prefix");
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(s.size());
  for (int t = 0; t < s.size(); ++t) {
    cd acc = 0;
    const int lmax = std::min<int>(L, t);
    for (int l = 0; l <= lmax; ++l) acc += ch.taps(t, l) * s(t - l);
    r(t) = acc;
  }
  add_awgn(r, noise_power, seed);
  return r;
}

Eigen::MatrixXcd otfs_demodulate(const Eigen::VectorXcd& r,
                                 const OtfsConfig& cfg) {
  cfg.validate();
  if (r.size() != cfg.frame_len())
    throw std::invalid_argument("otfs_demodulate: vector length mismatch");
  const int W = cfg.M + cfg.N_cp;
  Eigen::MatrixXcd z(cfg.M, cfg.N);
  for (int n = 0; n < cfg.N; ++n)
    for (int m = 0; m < cfg.M; ++m) z(m, n) = r(n * W + cfg.N_cp + m);
  return z * doppler_dft_matrix(cfg.N);
}

Eigen::MatrixXcd compute_h_dd(const TapChannel& ch, const OtfsConfig& cfg) {
  cfg.validate();
  if (ch.taps.rows() < cfg.frame_len())
    throw std::invalid_argument("compute_h_dd: taps do not cover the frame");
  const int W = cfg.M + cfg.N_cp;
  const int lmax = std::min<int>(ch.L(), cfg.M - 1);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(cfg.M, cfg.N);
  for (int l = 0; l <= lmax; ++l)
    for (int j = 0; j < cfg.N; ++j) {
      const int k = off_dopp(j, cfg.N);
      cd acc = 0;
      for (int i = 0; i < cfg.N; ++i)
        acc += ch.taps(i * W, l) *
               std::exp(cd(0, -2.0 * M_PI * i * k / double(cfg.N)));
      h(l, j) = acc;
    }
  return h;
}

Eigen::MatrixXcd lemma1_predict(const Eigen::MatrixXcd& x_dd,
                                const Eigen::MatrixXcd& h_dd,
                                const OtfsConfig& cfg) {
  cfg.validate();
  if (x_dd.rows() != cfg.M || x_dd.cols() != cfg.N || h_dd.rows() != cfg.M ||
      h_dd.cols() != cfg.N)
    throw std::invalid_argument("lemma1_predict: shape mismatch");
  const int M = cfg.M, N = cfg.N, W = M + cfg.N_cp;
  // phase table over (l, k - k'); the difference is not wrapped.
  Eigen::MatrixXcd ph(M, 2 * N - 1);
  for (int l = 0; l < M; ++l)
    for (int d = -(N - 1); d <= N - 1; ++d)
      ph(l, d + N - 1) = std::exp(cd(0, 2.0 * M_PI * l * d / (double(N) * W)));

  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(M, N);
  for (int l = 0; l < M; ++l)
    for (int jk = 0; jk < N; ++jk) {
      const int k = off_dopp(jk, N);
      cd acc = 0;
      for (int lp = 0; lp < M; ++lp) {
        const int dl = wrap(l - lp, M);
        for (int jkp = 0; jkp < N; ++jkp) {
          const int kp = off_dopp(jkp, N);
          const int dk_off = wrap((k - kp) + N / 2, N);
          acc += x_dd(lp, jkp) * h_dd(dl, dk_off) * ph(l, (k - kp) + N - 1);
        }
      }
      y(l, jk) = acc;
    }
  return y;
}

}  // namespace otfs
