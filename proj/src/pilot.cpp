#include "otfs/pilot.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace otfs {

void PilotPattern::validate(const OtfsConfig& cfg, int M_max,
                            int N_max) const {
  cfg.validate();
  if (M_tau < 1 || N_nu < 2 || M_g < 0 || N_g < 0)
    throw std::invalid_argument("PilotPattern: non-positive dimensions");
  if (N_nu % 2 || N_g % 2)
    throw std::invalid_argument(
        "PilotPattern: centered Doppler blocks need even widths");
  if (M_g < M_max || N_g < N_max)
    throw std::invalid_argument(
        "PilotPattern: guards smaller than the channel support");
  if (rect_rows() > cfg.M || rect_cols() > cfg.N)
    throw std::invalid_argument(
        "PilotPattern: pilot rectangle exceeds the frame");
  if (pilots.n0 != M_tau || pilots.n1 != N_nu || pilots.n2 < 1)
    throw std::invalid_argument("PilotPattern: pilot tensor shape mismatch");
}

PilotPattern gen_pilots(int M_tau, int N_nu, int M_g, int N_g, int N_t,
                        uint64_t seed) {
  if (M_tau < 1 || N_nu < 1 || M_g < 0 || N_g < 0 || N_t < 1)
    throw std::invalid_argument("gen_pilots: non-positive dimensions");
  PilotPattern pat;
  pat.M_tau = M_tau;
  pat.N_nu = N_nu;
  pat.M_g = M_g;
  pat.N_g = N_g;
  pat.pilots = Tensor3(M_tau, N_nu, N_t);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  // draw order: delay row, Doppler column, antenna; re then im
  for (int l = 0; l < M_tau; ++l)
    for (int jk = 0; jk < N_nu; ++jk)
      for (int p = 0; p < N_t; ++p) {
        const double re = nd(gen), im = nd(gen);
        pat.pilots(l, jk, p) = cd(re, im);
      }
  return pat;
}

std::vector<Eigen::MatrixXcd> embed_pilots(
    const PilotPattern& pat, const OtfsConfig& cfg,
    const std::vector<Eigen::MatrixXcd>* data) {
  pat.validate(cfg, 0, 0);
  const int N_t = pat.N_t();
  if (data) {
    if (int(data->size()) != N_t)
      throw std::invalid_argument("embed_pilots: data antenna count mismatch");
    for (const auto& d : *data)
      if (d.rows() != cfg.M || d.cols() != cfg.N)
        throw std::invalid_argument("embed_pilots: data frame shape mismatch");
  }
  const int j_rect = cfg.N / 2 - pat.rect_cols() / 2;
  const int j0 = pat.dopp_start(cfg.N);
  std::vector<Eigen::MatrixXcd> frames(N_t);
  for (int p = 0; p < N_t; ++p) {
    frames[p] = data ? (*data)[p]
                     : Eigen::MatrixXcd::Zero(cfg.M, cfg.N).eval();
    frames[p].block(0, j_rect, pat.rect_rows(), pat.rect_cols()).setZero();
    for (int l = 0; l < pat.M_tau; ++l)
      for (int jk = 0; jk < pat.N_nu; ++jk)
        frames[p](pat.delay_start() + l, j0 + jk) = pat.pilots(l, jk, p);
  }
  return frames;
}

Eigen::VectorXcd extract_received_pilots(const Eigen::MatrixXcd& y_dd,
                                         const PilotPattern& pat,
                                         const OtfsConfig& cfg) {
  if (y_dd.rows() != cfg.M || y_dd.cols() != cfg.N)
    throw std::invalid_argument("extract_received_pilots: frame shape");
  const int j0 = pat.dopp_start(cfg.N);
  Eigen::VectorXcd v(pat.M_tau * pat.N_nu);
  for (int l = 0; l < pat.M_tau; ++l)
    for (int jk = 0; jk < pat.N_nu; ++jk)
      v(l * pat.N_nu + jk) = y_dd(pat.delay_start() + l, j0 + jk);
  return v;
}

Tensor3 angle_transform_pilots(const PilotPattern& pat) {
  const int N_t = pat.N_t();
  Eigen::MatrixXcd tab(N_t, N_t);
  for (int jr = 0; jr < N_t; ++jr)
    for (int p = 0; p < N_t; ++p)
      tab(jr, p) =
          std::exp(cd(0, -2.0 * M_PI * off_ang(jr, N_t) * p / double(N_t)));
  Tensor3 z(pat.M_tau, pat.N_nu, N_t);
  for (int l = 0; l < pat.M_tau; ++l)
    for (int jk = 0; jk < pat.N_nu; ++jk)
      for (int jr = 0; jr < N_t; ++jr) {
        cd acc = 0;
        for (int p = 0; p < N_t; ++p) acc += pat.pilots(l, jk, p) * tab(jr, p);
        z(l, jk, jr) = acc;
      }
  return z;
}

Eigen::MatrixXcd build_phase_matrix(const PilotPattern& pat,
                                    const OtfsConfig& cfg) {
  const int rows = pat.M_tau * pat.N_nu;
  const int bcols = pat.M_g * pat.N_g;
  const double denom = double(cfg.N) * (cfg.M + cfg.N_cp);
  Eigen::MatrixXcd W(rows, bcols);
  for (int ll = 0; ll < pat.M_tau; ++ll) {
    const int l_abs = pat.delay_start() + ll;
    for (int jk = 0; jk < pat.N_nu; ++jk) {
      const int row = ll * pat.N_nu + jk;
      for (int lp = 0; lp < pat.M_g; ++lp)
        for (int jkp = 0; jkp < pat.N_g; ++jkp) {
          const int kp = off_dopp(jkp, pat.N_g);
          W(row, lp * pat.N_g + jkp) =
              std::exp(cd(0, 2.0 * M_PI * kp * (l_abs + cfg.N_cp) / denom));
        }
    }
  }
  return W;
}

Eigen::MatrixXcd build_conv_matrix(const Tensor3& z, const PilotPattern& pat,
                                   int r) {
  const int rows = pat.M_tau * pat.N_nu;
  const int bcols = pat.M_g * pat.N_g;
  const int jr = ang_off(r, pat.N_t());
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(rows, bcols);
  for (int ll = 0; ll < pat.M_tau; ++ll)
    for (int jk = 0; jk < pat.N_nu; ++jk) {
      const int k = off_dopp(jk, pat.N_nu);
      const int row = ll * pat.N_nu + jk;
      for (int lp = 0; lp < pat.M_g; ++lp) {
        const int dl = ll - lp;
        if (dl < 0 || dl >= pat.M_tau) continue;
        for (int jkp = 0; jkp < pat.N_g; ++jkp) {
          const int kp = off_dopp(jkp, pat.N_g);
          const int dk_off = dopp_off(k - kp, pat.N_nu);
          if (dk_off < 0 || dk_off >= pat.N_nu) continue;
          Z(row, lp * pat.N_g + jkp) = z(dl, dk_off, jr);
        }
      }
    }
  return Z;
}

namespace {

SensingSystem assemble_impl(const PilotPattern& pat, const OtfsConfig& cfg,
                            bool parallel) {
  pat.validate(cfg, 0, 0);
  SensingSystem sys;
  sys.M_tau = pat.M_tau;
  sys.N_nu = pat.N_nu;
  sys.M_g = pat.M_g;
  sys.N_g = pat.N_g;
  sys.N_t = pat.N_t();
  const Tensor3 z = angle_transform_pilots(pat);
  const Eigen::MatrixXcd W = build_phase_matrix(pat, cfg);
  const int bcols = pat.M_g * pat.N_g;
  sys.Psi.resize(sys.rows(), sys.cols());
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int jr = 0; jr < sys.N_t; ++jr) {
      const Eigen::MatrixXcd Z =
          build_conv_matrix(z, pat, off_ang(jr, sys.N_t));
      sys.Psi.middleCols(jr * bcols, bcols) = W.cwiseProduct(Z);
    }
  } else {
    for (int jr = 0; jr < sys.N_t; ++jr) {
      const Eigen::MatrixXcd Z =
          build_conv_matrix(z, pat, off_ang(jr, sys.N_t));
      sys.Psi.middleCols(jr * bcols, bcols) = W.cwiseProduct(Z);
    }
  }
  return sys;
}

}  // namespace

SensingSystem assemble_sensing(const PilotPattern& pat, const OtfsConfig& cfg) {
  return assemble_impl(pat, cfg, true);
}

namespace ref {
SensingSystem assemble_sensing(const PilotPattern& pat, const OtfsConfig& cfg) {
  return assemble_impl(pat, cfg, false);
}
}  // namespace ref

namespace {

void write_header_and_payload(std::ofstream& f, uint64_t rows, uint64_t cols,
                              const Eigen::MatrixXcd& m) {
  f.write(reinterpret_cast<const char*>(&rows), 8);
  f.write(reinterpret_cast<const char*>(&cols), 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double re = m(i, j).real(), im = m(i, j).imag();
      f.write(reinterpret_cast<const char*>(&re), 8);
      f.write(reinterpret_cast<const char*>(&im), 8);
    }
}

}  // namespace

void dump_matrix_binary(const std::string& path, const Eigen::MatrixXcd& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("dump_matrix_binary: cannot open " + path);
  write_header_and_payload(f, uint64_t(m.rows()), uint64_t(m.cols()), m);
}

void dump_vector_binary(const std::string& path, const Eigen::VectorXcd& v) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("dump_vector_binary: cannot open " + path);
  write_header_and_payload(f, uint64_t(v.size()), 1, v);
}

}  // namespace otfs
