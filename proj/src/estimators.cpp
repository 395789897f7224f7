#include "otfs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace otfs {

namespace {

// LS on the given columns; rank-deficient systems fall back to Tikhonov and
// raise *regularized.
Eigen::VectorXcd ls_on_support(const Eigen::MatrixXcd& Psi,
                               const Eigen::VectorXcd& y,
                               const std::vector<int>& support,
                               bool* regularized) {
  const int k = static_cast<int>(support.size());
  if (k == 0) return Eigen::VectorXcd();
  Eigen::MatrixXcd A(Psi.rows(), k);
  for (int i = 0; i < k; ++i) A.col(i) = Psi.col(support[i]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
  if (qr.rank() == k) return qr.solve(y);
  *regularized = true;
  Eigen::MatrixXcd G = A.adjoint() * A;
  double lam = 1e-10 * G.trace().real() / k + 1e-300;
  G.diagonal().array() += lam;
  return G.ldlt().solve(A.adjoint() * y);
}

Eigen::VectorXcd scatter(const Eigen::VectorXcd& x,
                         const std::vector<int>& support, int n) {
  Eigen::VectorXcd h = Eigen::VectorXcd::Zero(n);
  for (size_t i = 0; i < support.size(); ++i) h(support[i]) = x(i);
  return h;
}

}  // namespace

double nmse_dd(const std::vector<Eigen::MatrixXcd>& est,
               const std::vector<Eigen::MatrixXcd>& truth) {
  if (est.size() != truth.size() || truth.empty())
    throw std::invalid_argument("nmse_dd: mismatched antenna counts");
  double acc = 0.0;
  for (size_t p = 0; p < truth.size(); ++p) {
    if (est[p].rows() != truth[p].rows() || est[p].cols() != truth[p].cols())
      throw std::invalid_argument("nmse_dd: mismatched frame dims");
    double den = truth[p].squaredNorm();
    if (den == 0.0)
      throw std::invalid_argument("nmse_dd: zero-energy truth slice");
    acc += (est[p] - truth[p]).squaredNorm() / den;
  }
  return acc / static_cast<double>(truth.size());
}

double nmse_dda(const Tensor3& est, const Tensor3& truth) {
  if (!est.same_dims(truth))
    throw std::invalid_argument("nmse_dda: mismatched tensor dims");
  double den = truth.squared_norm();
  if (den == 0.0) throw std::invalid_argument("nmse_dda: zero-energy truth");
  double num = 0.0;
  for (size_t i = 0; i < truth.v.size(); ++i)
    num += std::norm(est.v[i] - truth.v[i]);
  return num / den;
}

// ---------------------------------------------------------------------------
// OMP
// ---------------------------------------------------------------------------

SparseResult omp_recover(const Eigen::MatrixXcd& Psi, const Eigen::VectorXcd& y,
                         int K) {
  const int rows = static_cast<int>(Psi.rows());
  const int cols = static_cast<int>(Psi.cols());
  if (y.size() != rows) throw std::invalid_argument("omp: y/Psi size mismatch");
  if (K < 0 || K > rows || K > cols)
    throw std::invalid_argument("omp: K must lie in [0, min(rows, cols)]");

  SparseResult res;
  res.h = Eigen::VectorXcd::Zero(cols);
  if (K == 0) return res;

  std::vector<char> picked(cols, 0);
  Eigen::VectorXcd r = y;
  Eigen::VectorXcd x;
  for (int it = 0; it < K; ++it) {
    Eigen::VectorXcd c = Psi.adjoint() * r;
    int best = -1;
    double best_mag = -1.0;
    for (int i = 0; i < cols; ++i) {
      if (picked[i]) continue;
      double m = std::abs(c(i));
      if (m > best_mag) {
        best_mag = m;
        best = i;
      }
    }
    picked[best] = 1;
    res.support.push_back(best);
    x = ls_on_support(Psi, y, res.support, &res.regularized);
    Eigen::VectorXcd fit = Eigen::VectorXcd::Zero(rows);
    for (size_t i = 0; i < res.support.size(); ++i)
      fit += x(i) * Psi.col(res.support[i]);
    r = y - fit;
    res.residual_norms.push_back(r.norm());
  }
  res.h = scatter(x, res.support, cols);
  return res;
}

// ---------------------------------------------------------------------------
// Lifting
// ---------------------------------------------------------------------------

int lifting_index(int i, int j, int N_t) {
  int s = i + j;
  return s <= N_t ? s : s - N_t;
}

Eigen::MatrixXd build_lifting_matrix(int N_t, int D) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N_t, N_t * D);
  for (int i = 1; i <= N_t; ++i)
    for (int j = 1; j <= D; ++j)
      L(lifting_index(i, j, N_t) - 1, (i - 1) * D + j - 1) = 1.0;
  return L;
}

int burst_start(const Eigen::VectorXd& e_mag, int D) {
  const int n = static_cast<int>(e_mag.size());
  if (n == 0 || D < 1 || D > n)
    throw std::invalid_argument("burst_start: need 1 <= D <= len(e)");
  int best = 0;
  double best_sum = -1.0;
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (int d = 0; d < D; ++d) {
      double v = e_mag((s + d) % n);
      sum += v * v;
    }
    if (sum > best_sum) {
      best_sum = sum;
      best = s;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// 3D-SOMP
// ---------------------------------------------------------------------------

SparseResult somp3d(const SensingSystem& sys, const Eigen::VectorXcd& y,
                    const SompParams& par) {
  const int rows = sys.rows();
  const int cols = sys.cols();
  const int M_g = sys.M_g, N_g = sys.N_g, N_t = sys.N_t;
  if (y.size() != rows) throw std::invalid_argument("somp: y size mismatch");
  if (par.iters < 0 || par.D < 1 || par.D > N_t ||
      !(par.epsilon > 0.0 && par.epsilon <= 1.0))
    throw std::invalid_argument("somp: bad parameters");

  SparseResult res;
  res.h = Eigen::VectorXcd::Zero(cols);
  Eigen::VectorXcd r = y;
  Eigen::VectorXcd x;
  std::vector<char> picked(cols, 0);

  for (int it = 0; it < par.iters; ++it) {
    Eigen::VectorXcd corr = sys.Psi.adjoint() * r;
    Tensor3 E = invec(corr, M_g, N_g, N_t);

    // 1. delay row with the largest slice norm
    int lp = 0;
    double best = -1.0;
    for (int l = 0; l < M_g; ++l) {
      double nrm = 0.0;
      for (int jk = 0; jk < N_g; ++jk)
        for (int jr = 0; jr < N_t; ++jr) nrm += std::norm(E(l, jk, jr));
      if (nrm > best) {
        best = nrm;
        lp = l;
      }
    }

    // 2. smallest centered Doppler block [-n_b, n_b) capturing epsilon of the
    // row's Doppler profile
    Eigen::VectorXd e_nu(N_g);
    for (int jk = 0; jk < N_g; ++jk) {
      double nrm = 0.0;
      for (int jr = 0; jr < N_t; ++jr) nrm += std::norm(E(lp, jk, jr));
      e_nu(jk) = nrm;  // squared for now
    }
    const double total = e_nu.sum();
    const double target = par.epsilon * par.epsilon * total;
    int n_b = N_g / 2;
    double captured = 0.0;
    for (int n = 1; n <= N_g / 2; ++n) {
      captured = 0.0;
      for (int jk = N_g / 2 - n; jk < N_g / 2 + n; ++jk) captured += e_nu(jk);
      if (captured >= target) {
        n_b = n;
        break;
      }
    }

    // 3. lifted angle burst on the (row, block) profile
    Eigen::VectorXd e_theta(N_t);
    for (int jr = 0; jr < N_t; ++jr) {
      double nrm = 0.0;
      for (int jk = N_g / 2 - n_b; jk < N_g / 2 + n_b; ++jk)
        nrm += std::norm(E(lp, jk, jr));
      e_theta(jr) = std::sqrt(nrm);
    }
    int s = burst_start(e_theta, par.D);

    for (int jk = N_g / 2 - n_b; jk < N_g / 2 + n_b; ++jk) {
      for (int d = 0; d < par.D; ++d) {
        int jr = (s + d) % N_t;
        int col = sys.col_index(lp, off_dopp(jk, N_g), off_ang(jr, N_t));
        if (picked[col]) continue;
        if (static_cast<int>(res.support.size()) >= rows) {
          res.support_capped = true;
          break;
        }
        picked[col] = 1;
        res.support.push_back(col);
      }
    }

    x = ls_on_support(sys.Psi, y, res.support, &res.regularized);
    Eigen::VectorXcd fit = Eigen::VectorXcd::Zero(rows);
    for (size_t i = 0; i < res.support.size(); ++i)
      fit += x(i) * sys.Psi.col(res.support[i]);
    r = y - fit;
    res.residual_norms.push_back(r.norm());
  }
  if (!res.support.empty()) res.h = scatter(x, res.support, cols);
  return res;
}

// ---------------------------------------------------------------------------
// Impulse / LS baseline
// ---------------------------------------------------------------------------

ImpulseLayout impulse_mimo_layout(int N_t, int M_max, int N_max, int area_M,
                                  int area_N, int delay0, int dopp0,
                                  const OtfsConfig& cfg) {
  if (N_t < 1 || M_max < 1 || N_max < 1 || area_M < 1 || area_N < 1 ||
      area_M > cfg.M || area_N > cfg.N || delay0 < 0 || delay0 >= cfg.M)
    throw std::invalid_argument("impulse layout: bad geometry");

  ImpulseLayout lay;
  lay.M_max = M_max;
  lay.N_max = N_max;

  // Doppler slots fill first; the delay spacing only compresses below the
  // nominal cell height when the area cannot hold N_t cells.
  int cols = std::clamp(area_N / N_max, 1, N_t);
  int rows = (N_t + cols - 1) / cols;
  int rows_cap = std::max(area_M / M_max, 1);
  int spacing_d = rows <= rows_cap ? M_max : std::max(area_M / rows, 1);
  int spacing_k = std::max(std::min(area_N / cols, N_max), 1);
  lay.insufficient_guard = spacing_d < M_max || spacing_k < N_max;

  lay.delay_pos.resize(N_t);
  lay.dopp_pos.resize(N_t);
  for (int a = 0; a < N_t; ++a) {
    int row_block = a / cols;
    int col_block = a % cols;
    lay.delay_pos[a] = wrap(delay0 + row_block * spacing_d, cfg.M);
    lay.dopp_pos[a] = wrap(dopp0 + col_block * spacing_k + N_max / 2, cfg.N);
  }
  return lay;
}

std::vector<Eigen::MatrixXcd> impulse_frames(const ImpulseLayout& lay,
                                             const OtfsConfig& cfg,
                                             double amplitude) {
  const int N_t = static_cast<int>(lay.delay_pos.size());
  std::vector<Eigen::MatrixXcd> frames(N_t);
  for (int p = 0; p < N_t; ++p) {
    frames[p] = Eigen::MatrixXcd::Zero(cfg.M, cfg.N);
    frames[p](lay.delay_pos[p], lay.dopp_pos[p]) = cd(amplitude, 0.0);
  }
  return frames;
}

std::vector<Eigen::MatrixXcd> impulse_ls(const Eigen::MatrixXcd& y_dd,
                                         const ImpulseLayout& lay,
                                         const OtfsConfig& cfg,
                                         double amplitude) {
  if (amplitude <= 0.0) throw std::invalid_argument("impulse_ls: amplitude");
  if (y_dd.rows() != cfg.M || y_dd.cols() != cfg.N)
    throw std::invalid_argument("impulse_ls: frame dims");
  if (lay.M_max > cfg.M || lay.N_max > cfg.N)
    throw std::invalid_argument("impulse_ls: window exceeds frame");
  const int N_t = static_cast<int>(lay.delay_pos.size());
  const double gain = static_cast<double>(cfg.N) / amplitude;
  const double W = static_cast<double>(cfg.N) * (cfg.M + cfg.N_cp);

  std::vector<Eigen::MatrixXcd> est(N_t);
  for (int a = 0; a < N_t; ++a) {
    est[a] = Eigen::MatrixXcd::Zero(cfg.M, cfg.N);
    for (int d = 0; d < lay.M_max; ++d) {
      const int l_row = wrap(lay.delay_pos[a] + d, cfg.M);
      for (int kappa = -lay.N_max / 2; kappa < lay.N_max - lay.N_max / 2;
           ++kappa) {
        const int j_meas = wrap(lay.dopp_pos[a] + kappa, cfg.N);
        const double ph = -2.0 * M_PI * kappa * (l_row + cfg.N_cp) / W;
        est[a](d, dopp_off(kappa, cfg.N)) =
            gain * y_dd(l_row, j_meas) * cd(std::cos(ph), std::sin(ph));
      }
    }
  }
  return est;
}

}  // namespace otfs
