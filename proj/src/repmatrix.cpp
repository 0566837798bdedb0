#include "hv/repmatrix.hpp"

#include <cmath>
#include <cstddef>

#include "hv/errors.hpp"
#include "hv/threads.hpp"

namespace hv {

namespace {

constexpr int kMaxBasisIndex = 4096;

void check_basis_size(int K) {
  if (K < 1 || K > 1024) throw config_error("basis size must lie in [1, 1024]");
}

// t_j = sqrt((j+n-1)! / j!), the column scaling that turns the raw expansion
// coefficients into matrix entries of a unitary.
std::vector<double> t_table(int n, int K) {
  std::vector<double> t(static_cast<size_t>(K));
  double t0 = 1.0;
  for (int m = 1; m <= n - 1; ++m) t0 *= static_cast<double>(m);
  t[0] = std::sqrt(t0);
  for (int j = 1; j < K; ++j)
    t[static_cast<size_t>(j)] =
        t[static_cast<size_t>(j - 1)] *
        std::sqrt(static_cast<double>(j + n - 1) / static_cast<double>(j));
  return t;
}

}  // namespace

double bergman_basis_norm(int n, int k) {
  check_weight(n);
  if (k < 0 || k > kMaxBasisIndex) throw config_error("basis index out of range");
  // bhat_k^2 = 4^(n-1) (k+n-1)! / (pi k! (n-2)!), built up multiplicatively.
  double sq = (n - 1) / std::acos(-1.0);
  for (int m = 1; m < n; ++m) sq *= 4.0;
  for (int j = 1; j <= k; ++j) sq *= static_cast<double>(j + n - 1) / static_cast<double>(j);
  return std::sqrt(sq);
}

cplx bergman_basis_eval(int n, int k, const HPoint& z) {
  check_weight(n);
  if (k < 0 || k > kMaxBasisIndex) throw config_error("basis index out of range");
  if (!(z.y > 0.0)) throw config_error("evaluation point must have positive height");
  const cplx zi = z.z() + cplx{0.0, 1.0};
  const cplx w = (z.z() - cplx{0.0, 1.0}) / zi;
  return bergman_basis_norm(n, k) * cpow_int(w, k) * cpow_int(zi, -n);
}

Eigen::MatrixXcd rep_matrix(int n, const PElement& g, int K) {
  check_weight(n);
  check_basis_size(K);
  const auto co = inverse_coeffs(g);
  const double a = co[0], b = co[1], c = co[2], d = co[3];

  // In the disc model the normalized inverse acts by the SU(1,1) matrix
  // (1/2i) [[-conj(mu), -conj(nu)], [nu, mu]] with |mu|^2 - |nu|^2 = 4.
  const cplx mu{b - c, a + d};
  const cplx nu{-(b + c), a - d};

  // Column k of the matrix comes from the Taylor coefficients of
  //   G_k(w) = (conj(mu) w + conj(nu))^k (nu w + mu)^(-n-k)
  // and consecutive columns satisfy a first order recurrence, so the whole
  // block costs O(K^2).
  std::vector<cplx> col(static_cast<size_t>(K)), next(static_cast<size_t>(K));
  const cplx ratio = -nu / mu;
  col[0] = cpow_int(mu, -n);
  for (int j = 1; j < K; ++j)
    col[static_cast<size_t>(j)] = col[static_cast<size_t>(j - 1)] * ratio *
                                  (static_cast<double>(n + j - 1) / static_cast<double>(j));

  const std::vector<double> t = t_table(n, K);
  const cplx phase = cpow_int(cplx{0.0, 2.0}, n);
  Eigen::MatrixXcd R(K, K);
  double sign = 1.0;
  for (int k = 0;; ++k) {
    for (int j = 0; j < K; ++j)
      R(j, k) = phase * sign * (t[static_cast<size_t>(k)] / t[static_cast<size_t>(j)]) *
                col[static_cast<size_t>(j)];
    if (k + 1 == K) break;
    next[0] = std::conj(nu) * col[0] / mu;
    for (int j = 1; j < K; ++j)
      next[static_cast<size_t>(j)] =
          (std::conj(nu) * col[static_cast<size_t>(j)] +
           std::conj(mu) * col[static_cast<size_t>(j - 1)] -
           nu * next[static_cast<size_t>(j - 1)]) /
          mu;
    col.swap(next);
    sign = -sign;
  }
  return R;
}

Eigen::MatrixXcd rep_matrix_sum(int n, const std::vector<PElement>& gs, int K, int nthreads) {
  check_weight(n);
  check_basis_size(K);
  Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(K, K);
  if (gs.empty()) return total;
  // Fixed chunking keeps the reduction order a function of the list alone.
  constexpr long kChunk = 16;
  const long nchunks = (static_cast<long>(gs.size()) + kChunk - 1) / kChunk;
  std::function<Eigen::MatrixXcd(long)> fn = [&](long ci) {
    Eigen::MatrixXcd part = Eigen::MatrixXcd::Zero(K, K);
    const long lo = ci * kChunk;
    const long hi = std::min<long>(lo + kChunk, static_cast<long>(gs.size()));
    for (long i = lo; i < hi; ++i) part += rep_matrix(n, gs[static_cast<size_t>(i)], K);
    return part;
  };
  // Waves cap how many chunk partials are alive at once; the reduction still
  // walks chunks in ascending index, so the wave size never shows in the bits.
  const int workers = resolve_thread_count(nthreads);
  const long wave = 8L * workers;
  for (long base = 0; base < nchunks; base += wave) {
    const long count = std::min(wave, nchunks - base);
    const auto parts = parallel_map<Eigen::MatrixXcd>(
        count, workers, [&](long wi) { return fn(base + wi); });
    for (const auto& part : parts) total += part;
  }
  return total;
}

}  // namespace hv
