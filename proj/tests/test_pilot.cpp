#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/modem.hpp"
#include "otfs/pilot.hpp"

using namespace otfs;

namespace {

// Entry-level oracle for the sensing operator: w(l_abs, k') * zero-padded z.
cd psi_entry_oracle(const PilotPattern& pat, const OtfsConfig& cfg,
                    const Tensor3& z, int l_local, int k, int lp, int kp,
                    int r) {
  const int dl = l_local - lp;
  const int dk_off = dopp_off(k - kp, pat.N_nu);
  if (dl < 0 || dl >= pat.M_tau || dk_off < 0 || dk_off >= pat.N_nu)
    return cd(0, 0);
  const int l_abs = pat.delay_start() + l_local;
  const cd w = std::exp(cd(0, 2.0 * M_PI * kp * (l_abs + cfg.N_cp) /
                                  (double(cfg.N) * (cfg.M + cfg.N_cp))));
  return w * z(dl, dk_off, ang_off(r, pat.N_t()));
}

// Physical noiseless chain: per-antenna embed -> modulate -> taps -> sum ->
// demodulate -> extract, scaled by the sensing gain.
Eigen::VectorXcd chain_measurement(const PilotPattern& pat,
                                   const OtfsConfig& cfg, const PathSet& ps,
                                   int L,
                                   const std::vector<Eigen::MatrixXcd>* data) {
  const int N_t = pat.N_t();
  std::vector<Eigen::MatrixXcd> frames = embed_pilots(pat, cfg, data);
  Eigen::VectorXcd r_sum = Eigen::VectorXcd::Zero(cfg.frame_len());
  for (int p = 0; p < N_t; ++p) {
    Eigen::VectorXcd s = otfs_modulate(frames[p], cfg);
    TapChannel ch = time_variant_taps(ps, cfg, L, p);
    r_sum += apply_channel(s, ch, 0.0, 0);
  }
  Eigen::MatrixXcd y_dd = otfs_demodulate(r_sum, cfg);
  return sensing_gain(cfg, N_t) * extract_received_pilots(y_dd, pat, cfg);
}

PilotPattern desk_pattern(int N_t, uint64_t seed) {
  return gen_pilots(24, 12, 8, 4, N_t, seed);
}

}  // namespace

TEST_CASE("gen_pilots: shape, determinism, unit variance, overhead") {
  OtfsConfig cfg;
  PilotPattern a = desk_pattern(16, 3);
  PilotPattern b = desk_pattern(16, 3);
  PilotPattern c = desk_pattern(16, 4);
  REQUIRE(a.pilots.n0 == 24);
  REQUIRE(a.pilots.n1 == 12);
  REQUIRE(a.pilots.n2 == 16);
  CHECK(a.N_t() == 16);
  double diff = 0;
  for (size_t i = 0; i < a.pilots.size(); ++i)
    diff += std::norm(a.pilots.v[i] - b.pilots.v[i]);
  CHECK(diff == 0.0);
  double diff_c = 0;
  for (size_t i = 0; i < a.pilots.size(); ++i)
    diff_c += std::norm(a.pilots.v[i] - c.pilots.v[i]);
  CHECK(diff_c > 0.0);

  double mean_sq = a.pilots.squared_norm() / double(a.pilots.size());
  CHECK(mean_sq == doctest::Approx(1.0).epsilon(0.05));

  CHECK(a.overhead(cfg) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.delay_start() == 8);
  CHECK(a.dopp_start(cfg.N) == 2);
  CHECK(a.rect_rows() == 32);
  CHECK(a.rect_cols() == 16);
  CHECK_NOTHROW(a.validate(cfg, 8, 4));
}

TEST_CASE("PilotPattern::validate rejects undersized guards and overflows") {
  OtfsConfig cfg;
  PilotPattern p = desk_pattern(8, 1);
  CHECK_THROWS_AS(p.validate(cfg, 9, 4), std::invalid_argument);   // M_g < M_max
  CHECK_THROWS_AS(p.validate(cfg, 8, 6), std::invalid_argument);   // N_g < N_max
  PilotPattern big = gen_pilots(60, 12, 8, 4, 8, 1);               // 68 rows > M
  CHECK_THROWS_AS(big.validate(cfg, 8, 4), std::invalid_argument);
  PilotPattern wide = gen_pilots(24, 14, 8, 4, 8, 1);              // 18 cols > N
  CHECK_THROWS_AS(wide.validate(cfg, 8, 4), std::invalid_argument);
  PilotPattern odd = gen_pilots(24, 11, 8, 4, 8, 1);               // odd N_nu
  CHECK_THROWS_AS(odd.validate(cfg, 8, 4), std::invalid_argument);
}

TEST_CASE("embed_pilots places the block and zeroes the guards") {
  OtfsConfig cfg;
  PilotPattern pat = desk_pattern(4, 7);
  const int j0 = pat.dopp_start(cfg.N);

  SUBCASE("estimation-only frames: zeros outside the pilot block") {
    std::vector<Eigen::MatrixXcd> frames = embed_pilots(pat, cfg);
    REQUIRE(int(frames.size()) == 4);
    for (int p = 0; p < 4; ++p) {
      REQUIRE(frames[p].rows() == cfg.M);
      REQUIRE(frames[p].cols() == cfg.N);
      for (int l = 0; l < cfg.M; ++l)
        for (int j = 0; j < cfg.N; ++j) {
          bool in_block = l >= pat.delay_start() &&
                          l < pat.delay_start() + pat.M_tau && j >= j0 &&
                          j < j0 + pat.N_nu;
          if (in_block)
            CHECK(frames[p](l, j) ==
                  pat.pilots(l - pat.delay_start(), j - j0, p));
          else
            CHECK(frames[p](l, j) == cd(0, 0));
        }
    }
  }

  SUBCASE("data frames: rectangle overwritten, elsewhere preserved") {
    std::vector<Eigen::MatrixXcd> data(4);
    for (int p = 0; p < 4; ++p)
      data[p] = Eigen::MatrixXcd::Constant(cfg.M, cfg.N, cd(1.0, -2.0));
    std::vector<Eigen::MatrixXcd> frames = embed_pilots(pat, cfg, &data);
    const int jr0 = cfg.N / 2 - pat.rect_cols() / 2;
    for (int p = 0; p < 4; ++p)
      for (int l = 0; l < cfg.M; ++l)
        for (int j = 0; j < cfg.N; ++j) {
          bool in_rect = l < pat.rect_rows() && j >= jr0 &&
                         j < jr0 + pat.rect_cols();
          bool in_block = l >= pat.delay_start() &&
                          l < pat.delay_start() + pat.M_tau && j >= j0 &&
                          j < j0 + pat.N_nu;
          if (in_block)
            CHECK(frames[p](l, j) ==
                  pat.pilots(l - pat.delay_start(), j - j0, p));
          else if (in_rect)
            CHECK(frames[p](l, j) == cd(0, 0));
          else
            CHECK(frames[p](l, j) == cd(1.0, -2.0));
        }
  }
}

TEST_CASE("extract_received_pilots: reads the block in row-index order") {
  OtfsConfig cfg;
  PilotPattern pat = desk_pattern(2, 9);
  std::vector<Eigen::MatrixXcd> frames = embed_pilots(pat, cfg);
  Eigen::VectorXcd v = extract_received_pilots(frames[1], pat, cfg);
  REQUIRE(v.size() == pat.M_tau * pat.N_nu);
  for (int l = 0; l < pat.M_tau; ++l)
    for (int jk = 0; jk < pat.N_nu; ++jk)
      CHECK(v(l * pat.N_nu + jk) == pat.pilots(l, jk, 1));
}

TEST_CASE("angle_transform_pilots: direct sum and the constant-pilot case") {
  PilotPattern pat = gen_pilots(3, 4, 2, 2, 8, 21);
  Tensor3 z = angle_transform_pilots(pat);
  REQUIRE(z.n0 == 3);
  REQUIRE(z.n1 == 4);
  REQUIRE(z.n2 == 8);
  for (int l = 0; l < 3; ++l)
    for (int jk = 0; jk < 4; ++jk)
      for (int jr = 0; jr < 8; ++jr) {
        cd acc = 0;
        for (int p = 0; p < 8; ++p)
          acc += pat.pilots(l, jk, p) *
                 std::exp(cd(0, -2.0 * M_PI * off_ang(jr, 8) * p / 8.0));
        CHECK(std::abs(z(l, jk, jr) - acc) < 1e-12);
      }

  // identical pilots on every antenna -> only the r = 0 slice survives
  PilotPattern same = pat;
  for (int l = 0; l < 3; ++l)
    for (int jk = 0; jk < 4; ++jk)
      for (int p = 0; p < 8; ++p)
        same.pilots(l, jk, p) = pat.pilots(l, jk, 0);
  Tensor3 zs = angle_transform_pilots(same);
  for (int l = 0; l < 3; ++l)
    for (int jk = 0; jk < 4; ++jk)
      for (int jr = 0; jr < 8; ++jr) {
        if (off_ang(jr, 8) == 0)
          CHECK(std::abs(zs(l, jk, jr) - 8.0 * pat.pilots(l, jk, 0)) < 1e-12);
        else
          CHECK(std::abs(zs(l, jk, jr)) < 1e-12);
      }
}

TEST_CASE("assemble_sensing: every entry matches the w*z oracle") {
  OtfsConfig cfg;
  cfg.M = 32;
  cfg.N = 8;
  cfg.N_cp = 8;
  PilotPattern pat = gen_pilots(6, 4, 4, 2, 4, 31);
  Tensor3 z = angle_transform_pilots(pat);
  SensingSystem sys = assemble_sensing(pat, cfg);
  REQUIRE(sys.Psi.rows() == sys.rows());
  REQUIRE(sys.Psi.cols() == sys.cols());
  REQUIRE(sys.rows() == 24);
  REQUIRE(sys.cols() == 4 * 2 * 4);
  for (int ll = 0; ll < pat.M_tau; ++ll)
    for (int k = -pat.N_nu / 2; k < pat.N_nu / 2; ++k)
      for (int lp = 0; lp < pat.M_g; ++lp)
        for (int kp = -pat.N_g / 2; kp < pat.N_g / 2; ++kp)
          for (int r = -pat.N_t() / 2; r < pat.N_t() / 2; ++r) {
            cd want = psi_entry_oracle(pat, cfg, z, ll, k, lp, kp, r);
            cd got = sys.Psi(sys.row_index(ll, k), sys.col_index(lp, kp, r));
            CHECK(std::abs(got - want) < 1e-12);
          }

  SensingSystem srl = ref::assemble_sensing(pat, cfg);
  CHECK((sys.Psi - srl.Psi).norm() == 0.0);

  // phase/conv factorization: the angle-r block is W .* Z_r
  Eigen::MatrixXcd W = build_phase_matrix(pat, cfg);
  REQUIRE(W.rows() == sys.rows());
  REQUIRE(W.cols() == pat.M_g * pat.N_g);
  for (int r = -pat.N_t() / 2; r < pat.N_t() / 2; ++r) {
    Eigen::MatrixXcd Z = build_conv_matrix(z, pat, r);
    Eigen::MatrixXcd block = sys.Psi.middleCols(
        ang_off(r, pat.N_t()) * pat.M_g * pat.N_g, pat.M_g * pat.N_g);
    CHECK((block - W.cwiseProduct(Z)).norm() < 1e-12);
    // unit-modulus phases: column energies agree between Psi and Z blocks
    for (int c = 0; c < Z.cols(); ++c)
      CHECK(block.col(c).squaredNorm() ==
            doctest::Approx(Z.col(c).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("sensing column norms concentrate for Gaussian pilots") {
  OtfsConfig cfg;
  const double target = std::sqrt(48.0 * 12.0 * 8.0);

  // tall pilot block: every column within +-20% of sqrt(M_tau N_nu N_t)
  PilotPattern tall = gen_pilots(48, 12, 8, 4, 8, 41);
  SensingSystem sys = assemble_sensing(tall, cfg);
  for (int c = 0; c < sys.cols(); ++c) {
    double n = sys.Psi.col(c).norm();
    CHECK(n > 0.8 * target);
    CHECK(n < 1.2 * target);
  }

  // desk-size block: corner columns lose support rows, so only the bulk
  // concentrates within +-20%
  PilotPattern desk = desk_pattern(8, 42);
  SensingSystem ds = assemble_sensing(desk, cfg);
  const double dt = std::sqrt(24.0 * 12.0 * 8.0);
  int within = 0;
  for (int c = 0; c < ds.cols(); ++c) {
    double n = ds.Psi.col(c).norm();
    if (n > 0.8 * dt && n < 1.2 * dt) ++within;
  }
  CHECK(double(within) / ds.cols() >= 0.90);
}

TEST_CASE("noiseless chain equals Psi h for an on-grid channel") {
  OtfsConfig cfg;
  const int N_t = 8;
  PilotPattern pat = desk_pattern(N_t, 51);
  ChannelGenParams par;
  par.N_p = 3;
  par.N_s = 4;
  par.v = 100.0;
  par.tau_max = 6.25e-6;
  par.on_grid_delay = par.on_grid_doppler = par.on_grid_angle = true;
  PathSet ps = generate_path_set(par, cfg, N_t, 77);

  Tensor3 dda = dda_channel(dds_cir(ps, cfg, N_t, cfg.N_cp - 1));
  Eigen::VectorXcd h = truncate_and_vectorize(dda, pat.M_g, pat.N_g);
  SensingSystem sys = assemble_sensing(pat, cfg);
  Eigen::VectorXcd y_model = sys.Psi * h;
  Eigen::VectorXcd y_chain = chain_measurement(pat, cfg, ps, cfg.N_cp - 1,
                                               nullptr);
  CHECK((y_chain - y_model).norm() < 1e-10 * y_model.norm());
}

TEST_CASE("off-grid channel: windowed model explains the bulk of the chain") {
  OtfsConfig cfg;
  const int N_t = 8;
  PilotPattern pat = desk_pattern(N_t, 52);
  ChannelGenParams par;
  par.N_p = 3;
  par.N_s = 4;
  par.v = 100.0;
  par.tau_max = 6.25e-6;
  PathSet ps = generate_path_set(par, cfg, N_t, 78);

  Tensor3 dda = dda_channel(dds_cir(ps, cfg, N_t, cfg.N_cp - 1));
  Eigen::VectorXcd h = truncate_and_vectorize(dda, pat.M_g, pat.N_g);
  SensingSystem sys = assemble_sensing(pat, cfg);
  Eigen::VectorXcd y_model = sys.Psi * h;
  Eigen::VectorXcd y_chain = chain_measurement(pat, cfg, ps, cfg.N_cp - 1,
                                               nullptr);
  double rel = (y_chain - y_model).norm() / y_chain.norm();
  CHECK(rel < 0.30);   // truncation + off-grid phase model error (~0.2 typical)
  CHECK(rel > 1e-6);   // and it is genuinely a model error, not zero
}

TEST_CASE("data cells cannot reach the pilot observations (guards hold)") {
  OtfsConfig cfg;
  const int N_t = 4;
  PilotPattern pat = desk_pattern(N_t, 61);
  ChannelGenParams par;
  par.N_p = 3;
  par.N_s = 4;
  par.v = 100.0;
  par.tau_max = 6.25e-6;
  par.on_grid_delay = par.on_grid_doppler = par.on_grid_angle = true;
  PathSet ps = generate_path_set(par, cfg, N_t, 91);

  std::mt19937_64 g(5);
  std::normal_distribution<double> nd;
  std::vector<Eigen::MatrixXcd> data_a(N_t), data_b(N_t);
  for (int p = 0; p < N_t; ++p) {
    data_a[p].resize(cfg.M, cfg.N);
    data_b[p].resize(cfg.M, cfg.N);
    for (int l = 0; l < cfg.M; ++l)
      for (int j = 0; j < cfg.N; ++j) {
        data_a[p](l, j) = cd(nd(g), nd(g));
        data_b[p](l, j) = cd(nd(g), nd(g));
      }
  }
  Eigen::VectorXcd ya = chain_measurement(pat, cfg, ps, cfg.N_cp - 1, &data_a);
  Eigen::VectorXcd yb = chain_measurement(pat, cfg, ps, cfg.N_cp - 1, &data_b);
  CHECK((ya - yb).norm() < 1e-10 * ya.norm());

  // negative control: a channel whose delay spread exceeds the guard leaks
  PathSet far;
  far.rolloff = 0.3;
  Path p;
  p.tau = 10.0 * cfg.T_s();  // beyond M_g = 8
  p.subpaths.push_back({cd(1.0, 0.0), 0.0, 0.0});
  far.paths.push_back(p);
  Eigen::VectorXcd fa = chain_measurement(pat, cfg, far, cfg.N_cp - 1, &data_a);
  Eigen::VectorXcd fb = chain_measurement(pat, cfg, far, cfg.N_cp - 1, &data_b);
  CHECK((fa - fb).norm() > 1e-6 * fa.norm());
}

TEST_CASE("binary dumps carry the header and row-major complex payload") {
  Eigen::MatrixXcd m(2, 3);
  m << cd(1, 2), cd(3, 4), cd(5, 6), cd(7, 8), cd(9, 10), cd(11, 12);
  const std::string path = "/tmp/otfs_dump_test.bin";
  dump_matrix_binary(path, m);

  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  uint64_t rows = 0, cols = 0;
  f.read(reinterpret_cast<char*>(&rows), 8);
  f.read(reinterpret_cast<char*>(&cols), 8);
  CHECK(rows == 2);
  CHECK(cols == 3);
  std::vector<double> payload(2 * 3 * 2);
  f.read(reinterpret_cast<char*>(payload.data()), payload.size() * 8);
  REQUIRE(f.gcount() == std::streamsize(payload.size() * 8));
  // row-major: (0,0) (0,1) (0,2) (1,0) ...
  CHECK(payload[0] == 1.0);
  CHECK(payload[1] == 2.0);
  CHECK(payload[2] == 3.0);
  CHECK(payload[3] == 4.0);
  CHECK(payload[6] == 7.0);
  CHECK(payload[7] == 8.0);
  std::remove(path.c_str());

  Eigen::VectorXcd v(2);
  v << cd(-1, 0.5), cd(2, -3);
  dump_vector_binary(path, v);
  std::ifstream g(path, std::ios::binary);
  g.read(reinterpret_cast<char*>(&rows), 8);
  g.read(reinterpret_cast<char*>(&cols), 8);
  CHECK(rows == 2);
  CHECK(cols == 1);
  double re = 0, im = 0;
  g.read(reinterpret_cast<char*>(&re), 8);
  g.read(reinterpret_cast<char*>(&im), 8);
  CHECK(re == -1.0);
  CHECK(im == 0.5);
  std::remove(path.c_str());
}
