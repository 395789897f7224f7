#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace otfs {

using cd = std::complex<double>;

/*
 * Index conventions, used uniformly by every module:
 *   delay   ell in [0, M-1]          stored at offset ell
 *   Doppler k   in [-N/2, N/2-1]     stored at offset k + N/2
 *   angle   r   in [-Nt/2, Nt/2-1]   stored at offset r + Nt/2
 * Delay-Doppler matrices are M x N with rows = delay, cols = Doppler offset.
 */
inline int dopp_off(int k, int N) { return k + N / 2; }
inline int off_dopp(int off, int N) { return off - N / 2; }
inline int ang_off(int r, int Nt) { return r + Nt / 2; }
inline int off_ang(int off, int Nt) { return off - Nt / 2; }

// Euclidean mod: wrap(-1, M) == M-1.
inline int wrap(int i, int n) {
  int m = i % n;
  return m < 0 ? m + n : m;
}

// Dense rank-3 complex tensor, last index fastest. Used for the
// delay-Doppler-spatial and delay-Doppler-angle channel tensors (M x N x Nt)
// and for pilot tensors (M_tau x N_nu x Nt).
struct Tensor3 {
  int n0 = 0, n1 = 0, n2 = 0;
  std::vector<cd> v;

  Tensor3() = default;
  Tensor3(int a, int b, int c)
      : n0(a), n1(b), n2(c), v(static_cast<size_t>(a) * b * c) {}

  cd& operator()(int i, int j, int k) {
    return v[(static_cast<size_t>(i) * n1 + j) * n2 + k];
  }
  const cd& operator()(int i, int j, int k) const {
    return v[(static_cast<size_t>(i) * n1 + j) * n2 + k];
  }

  size_t size() const { return v.size(); }
  bool same_dims(const Tensor3& o) const {
    return n0 == o.n0 && n1 == o.n1 && n2 == o.n2;
  }

  double squared_norm() const {
    double s = 0;
    for (const cd& x : v) s += std::norm(x);
    return s;
  }
};

// || a - b ||^2 / || b ||^2 over full tensors (b is the reference).
double rel_sq_error(const Tensor3& a, const Tensor3& b);

}  // namespace otfs
