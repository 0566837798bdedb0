#include "hv/assembly.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>
#include <utility>
#include <vector>

#include "hv/cosets.hpp"
#include "hv/errors.hpp"
#include "hv/repmatrix.hpp"
#include "hv/summation.hpp"
#include "hv/threads.hpp"

namespace hv {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Disc modes carried through every sandwich; the half-count prefix feeds the
// truncation estimate, so kModes must stay even.
constexpr int kModes = 448;

// An off-diagonal class element is dropped from the rep sum once D times its
// entry bound falls below this; the bound itself is charged to err.
constexpr double kSkipTol = 1e-8;

// Flat charge covering the quadrature fuzz of the overlap matrix.
constexpr double kQuadFloor = 1e-8;

// Scalar traces are dropped below this, matching the coset summing in the
// kernel module.
constexpr double kScalarSkipFloor = 1e-12;

// Height of the Gamma ball scanned for elements commuting with sigma.
constexpr long kStabHeight = 16;

// Height cap of the conjugation ball used by the character cross-check.
constexpr long kConjHeight = 36;

// Signed shell sums of compressed operators keep shrinking by at least ~4x
// per height doubling, so the H/2 -> H step bounds the mass past H with
// this margin; same empirical footing as the kernel's shell-tail fits.
constexpr double kHeightFactor = 0.5;

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 64; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= m; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = m * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= m; ++j) {
      double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    double dp = m * (x * p1 - p0) / (x * x - 1.0);
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

// w(m) = int_F y^(-m-2) dx dy = (1/(m+1)) int_{-1/2}^{1/2} (1-x^2)^(-(m+1)/2) dx.
double w_domain(int m) {
  static std::mutex mx;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mx);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  std::vector<double> xs, ws;
  gauss_legendre(96, xs, ws);
  Neumaier acc;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double x = 0.5 * xs[i];
    acc.add(0.5 * ws[i] * std::pow(1.0 - x * x, -0.5 * (m + 1)));
  }
  const double v = acc.total() / (m + 1);
  cache.emplace(m, v);
  return v;
}

// Rigorous overestimate of any entry of the D-truncated compression of
// pi_n(theta), from the canonical integral entries alone.  Lower-left zero
// means a pure translate; those never get a finite bound here and are always
// summed in full.  Otherwise the kernel is damped either by the c entry
// uniformly or, once a diagonal entry dominates, by the element's distance
// from the identity; the smaller envelope wins.
double entry_bound(int n, const PElement& th) {
  const double inf = std::numeric_limits<double>::infinity();
  const double cc = std::abs(th.c().get_d());
  if (cc == 0.0) return inf;
  const double cn = (n - 1) / (4.0 * kPi);
  const double delta = std::abs(th.det().get_d());
  const double sd = std::sqrt(delta);
  double best = cn * w_domain(n) * std::pow(2.0 * sd / cc, n);
  const double big = std::max(std::abs(th.a().get_d()), std::abs(th.d().get_d()));
  if (big > 0.5 * cc) {
    const double damp = cc * (big - 0.5 * cc) / delta;
    best = std::min(best, cn * std::pow(2.0, n) * std::pow(damp, -0.5 * n) *
                              std::sqrt(kPi / 3.0 * w_domain(n)));
  }
  return best;
}

// Same two envelopes specialised to the diagonal kernel, as a skip bound for
// scalar traces; combined with the universal trace bound from the kernel
// module.  Conjugates gamma sigma gamma^-1 keep a constant trace, so only
// the entry-driven envelopes decay along conjugation balls.
double scalar_bound(int n, const PElement& th) {
  double best = trace_skip_bound(n, th);
  const double cc = std::abs(th.c().get_d());
  if (cc == 0.0) return best;
  const double cn = (n - 1) / (4.0 * kPi);
  const double delta = std::abs(th.det().get_d());
  const double sd = std::sqrt(delta);
  best = std::min(best, cn * w_domain(n) * std::pow(2.0 * sd / cc, n));
  const double big = std::max(std::abs(th.a().get_d()), std::abs(th.d().get_d()));
  if (big > 0.5 * cc) {
    const double damp = cc * (big - 0.5 * cc) / delta;
    best = std::min(best, cn * std::pow(2.0, n) * std::pow(damp, -0.5 * n) *
                              w_domain(n / 2));
  }
  return best;
}

// Overlap matrices are deterministic functions of (n, D, y_max), so bases
// built from equal parameters share one cached copy.
const Eigen::MatrixXcd& mode_overlaps(const GalerkinBasis& basis) {
  static std::mutex mx;
  static std::map<std::tuple<int, int, std::uint64_t>, Eigen::MatrixXcd> cache;
  std::lock_guard<std::mutex> lock(mx);
  const auto key = std::make_tuple(basis.n, basis.D, std::bit_cast<std::uint64_t>(basis.y_max));
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, basis_disc_overlaps(basis, kModes)).first;
  return it->second;
}

struct Sandwich {
  Eigen::MatrixXcd mat;
  double trunc = 0.0;
};

// X^dagger S X together with the same product over the leading half of the
// modes; the half block of S comes free, and the K/2 -> K step bounds what
// the mode cut still hides, with a doubling margin on the ~K^-2 decay.
Sandwich sandwich(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& S) {
  const long K = X.rows();
  const long Kh = K / 2;
  Sandwich out;
  out.mat = X.adjoint() * (S * X);
  const Eigen::MatrixXcd Mh =
      X.topRows(Kh).adjoint() * (S.topLeftCorner(Kh, Kh) * X.topRows(Kh));
  out.trunc = 2.0 / 3.0 * (out.mat - Mh).norm();
  return out;
}

// Splits a height-H ball: pure translates (c = 0) carry no useful entry
// bound and are always summed; other elements are summed or skipped against
// their bound, with skipped bounds charged.
struct BallSplit {
  std::vector<PElement> full;  // height-lex order, inherited from the ball
  double charged = 0.0;
};

BallSplit split_ball(int n, int D, const std::vector<PElement>& ball) {
  BallSplit out;
  Neumaier skip;
  for (const auto& th : ball) {
    if (th.c() != 0) {
      const double bd = D * entry_bound(n, th);
      if (bd <= kSkipTol) {
        skip.add(bd);
        continue;
      }
    }
    out.full.push_back(th);
  }
  out.charged = skip.total();
  return out;
}

// One assembled compression.  The rep matrices are accumulated first (the
// sandwich is linear) in two height pieces, so the H/2 prefix measures what
// the height cut leaves out, the same way the half-mode block measures the
// mode cut; err collects both, the skipped bounds, and the quadrature floor.
CompressedOp assemble(int n, const BallSplit& split, long H, const GalerkinBasis& basis,
                      int nthreads) {
  const Eigen::MatrixXcd& X = mode_overlaps(basis);
  const auto mid = std::find_if(split.full.begin(), split.full.end(),
                                [&](const PElement& g) { return g.height() > H / 2; });
  const std::vector<PElement> head(split.full.begin(), mid);
  const std::vector<PElement> rest(mid, split.full.end());
  const Eigen::MatrixXcd S_head = rep_matrix_sum(n, head, kModes, nthreads);
  const Eigen::MatrixXcd S_rest = rep_matrix_sum(n, rest, kModes, nthreads);
  Sandwich sw = sandwich(X, S_head + S_rest);
  const double height_err =
      kHeightFactor * (X.adjoint() * (S_rest * X)).norm();
  CompressedOp op;
  op.mat = std::move(sw.mat);
  op.err = split.charged + height_err + sw.trunc + kQuadFloor;
  return op;
}

CompressedOp assemble_ball(int n, const std::vector<PElement>& ball, long H,
                           const GalerkinBasis& basis, int nthreads) {
  return assemble(n, split_ball(n, basis.D, ball), H, basis, nthreads);
}

// Scalar trace sum over an explicit list with the kernel module's skip and
// shell bookkeeping, plus the conjugation-aware skip bounds from above.
// shell_key(i) names the truncation variable (usually the element height,
// but conjugation balls truncate in the height of the conjugator).
struct ScalarSum {
  TraceValue tv;
  std::vector<std::pair<long, double>> shells;
};

ScalarSum scalar_sum(int n, const std::vector<PElement>& ths, const TraceSpec& q,
                     int nthreads, const std::function<long(size_t)>& shell_key) {
  const long count = static_cast<long>(ths.size());
  std::vector<double> bounds(ths.size());
  for (size_t i = 0; i < ths.size(); ++i) bounds[i] = scalar_bound(n, ths[i]);
  const auto vals = parallel_map<TraceValue>(
      count, resolve_thread_count(nthreads), [&](long i) -> TraceValue {
        if (bounds[static_cast<size_t>(i)] <= kScalarSkipFloor) return {};
        return trace_PL_pi_PL(n, ths[static_cast<size_t>(i)], q);
      });
  ScalarSum out;
  NeumaierC total;
  Neumaier errs;
  std::map<long, NeumaierC> per_shell;
  for (size_t i = 0; i < ths.size(); ++i) {
    const bool skipped = bounds[i] <= kScalarSkipFloor;
    total.add(vals[i].value);
    errs.add(skipped ? bounds[i] : vals[i].err);
    per_shell[shell_key(i)].add(vals[i].value);
  }
  out.tv = {total.total(), errs.total()};
  for (const auto& [h, acc] : per_shell) out.shells.emplace_back(h, std::abs(acc.total()));
  return out;
}

ScalarSum scalar_sum(int n, const std::vector<PElement>& ths, const TraceSpec& q,
                     int nthreads) {
  return scalar_sum(n, ths, q, nthreads,
                    [&](size_t i) { return ths[i].height().get_si(); });
}

// Gamma sigma Gamma ball to the given height, as the disjoint union of the
// Gamma-coset balls of the class decomposition, re-sorted height-lex.
std::vector<PElement> class_ball(const PElement& sigma, long H) {
  const CongruenceLevel top = CongruenceLevel::gamma(sigma.p());
  const DoubleCosetDecomp dd = double_coset_decomp(sigma);
  std::vector<PElement> ball;
  for (const auto& rep : dd.reps) {
    auto part = enumerate_coset_elements(top, rep, H);
    ball.insert(ball.end(), part.begin(), part.end());
  }
  std::sort(ball.begin(), ball.end(), height_lex_less);
  return ball;
}

// Right transversal of the double coset Gamma0 sigma Gamma0: factors w_r
// with Gamma0 sigma Gamma0 = union of Gamma0 w_r.  The left multipliers run
// over (sigma^-1 Gamma0 sigma intersect Gamma0) \ Gamma0, recovered from the
// ambient transversal by keeping the representatives that land in Gamma0.
std::vector<PElement> double_coset_factors(const CongruenceLevel& level,
                                           const PElement& sigma) {
  const CongruenceLevel h = gamma_sigma(level, sigma.inverse());
  std::vector<PElement> factors;
  for (const auto& v : right_coset_reps(h))
    if (level.contains(v)) factors.push_back(sigma * v);
  const long long expect = h.index() / level.index();
  if (static_cast<long long>(factors.size()) != expect)
    throw verification_failure("double coset transversal came out the wrong size");
  return factors;
}

bool in_level_double_coset(const CongruenceLevel& level, const PElement& x,
                           const std::vector<PElement>& factor_invs) {
  for (const auto& winv : factor_invs)
    if (level.contains(x * winv)) return true;
  return false;
}

void check_pair(const CongruenceLevel& level, const PElement& sigma) {
  if (level.p() != sigma.p()) throw config_error("prime contexts differ");
  if (sigma.det_sign() < 0)
    throw config_error("sigma has no determinant-positive representative");
}

// Fixed-modulus matrix arithmetic for the character's membership counting.
// Everything needed is decided modulo p^(k+m): divisibility of the integer
// product x adj(w) by det w = p^m, and the residue of the quotient mod p^k.
struct ModMat {
  std::array<std::uint64_t, 4> e;
};

ModMat mod_reduce(const PElement& g, std::uint64_t q) {
  ModMat out;
  for (int i = 0; i < 4; ++i)
    out.e[static_cast<size_t>(i)] = mpz_fdiv_ui(g.entry(i).get_mpz_t(), q);
  return out;
}

ModMat mod_adjugate(const PElement& g, std::uint64_t q) {
  ModMat out;
  out.e[0] = mpz_fdiv_ui(g.d().get_mpz_t(), q);
  mpz_class nb = -g.b(), nc = -g.c();
  out.e[1] = mpz_fdiv_ui(nb.get_mpz_t(), q);
  out.e[2] = mpz_fdiv_ui(nc.get_mpz_t(), q);
  out.e[3] = mpz_fdiv_ui(g.a().get_mpz_t(), q);
  return out;
}

ModMat mod_mul(const ModMat& x, const ModMat& y, std::uint64_t q) {
  ModMat out;
  out.e[0] = (x.e[0] * y.e[0] + x.e[1] * y.e[2]) % q;
  out.e[1] = (x.e[0] * y.e[1] + x.e[1] * y.e[3]) % q;
  out.e[2] = (x.e[2] * y.e[0] + x.e[3] * y.e[2]) % q;
  out.e[3] = (x.e[2] * y.e[1] + x.e[3] * y.e[3]) % q;
  return out;
}

}  // namespace

CompressedOp CompressedOp::operator+(const CompressedOp& o) const {
  if (mat.rows() != o.mat.rows() || mat.cols() != o.mat.cols())
    throw config_error("compressed operators have different sizes");
  return {mat + o.mat, err + o.err};
}

Eigen::MatrixXcd BlockHeckeMatrix::full() const {
  const long R = static_cast<long>(reps.size());
  const long D = blocks.empty() ? 0 : blocks[0][0].mat.rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(R * D, R * D);
  for (long i = 0; i < R; ++i)
    for (long j = 0; j < R; ++j)
      out.block(i * D, j * D, D, D) = blocks[static_cast<size_t>(i)][static_cast<size_t>(j)].mat;
  return out;
}

double BlockHeckeMatrix::total_err() const {
  Neumaier acc;
  for (const auto& row : blocks)
    for (const auto& b : row) acc.add(b.err);
  return acc.total();
}

CompressedOp compress_op(int n, const PElement& theta, const GalerkinBasis& basis,
                         const TraceSpec& q) {
  (void)q;
  check_weight(n);
  if (basis.n != n) throw config_error("basis weight does not match n");
  if (theta.det_sign() < 0)
    throw config_error("theta has no determinant-positive representative");
  const Eigen::MatrixXcd& X = mode_overlaps(basis);
  const Eigen::MatrixXcd R = rep_matrix(n, theta, kModes);
  Sandwich sw = sandwich(X, R);
  CompressedOp op;
  op.mat = std::move(sw.mat);
  op.err = sw.trunc + kQuadFloor;
  return op;
}

CompressedOp phi_map(const CongruenceLevel& level, const PElement& left,
                     const PElement& right, long H, const GalerkinBasis& basis,
                     const TraceSpec& q, int nthreads) {
  (void)q;
  check_weight(basis.n);
  if (level.p() != left.p() || level.p() != right.p())
    throw config_error("prime contexts differ");
  if (left.det_sign() * right.det_sign() < 0)
    throw config_error("translated coset has no determinant-positive representative");
  if (H < 1) throw config_error("height bound must be >= 1");
  const auto ball = enumerate_translated_elements(level, left, right, H);
  return assemble_ball(basis.n, ball, H, basis, nthreads);
}

PhiMultReport verify_phi_multiplicativity(const PElement& s1, const PElement& s2, long H,
                                          const GalerkinBasis& basis, const TraceSpec& q,
                                          int nthreads) {
  if (s1.p() != s2.p()) throw config_error("prime contexts differ");
  const CongruenceLevel top = CongruenceLevel::gamma(s1.p());
  const PElement e = PElement::identity(s1.p());
  const CompressedOp a = phi_map(top, s1, e, H, basis, q, nthreads);
  const CompressedOp b = phi_map(top, e, s2, H, basis, q, nthreads);
  const CompressedOp ab = phi_map(top, s1, s2, H, basis, q, nthreads);
  PhiMultReport rep;
  rep.residual = (a.mat * b.mat - ab.mat).norm();
  rep.bound = a.err * (b.mat.norm() + b.err) + a.mat.norm() * b.err + ab.err;
  return rep;
}

BlockHeckeMatrix hecke_block_matrix(const CongruenceLevel& level, const PElement& sigma,
                                    long H, const GalerkinBasis& basis, const TraceSpec& q,
                                    int nthreads) {
  (void)q;
  check_weight(basis.n);
  check_pair(level, sigma);
  if (H < 1) throw config_error("height bound must be >= 1");
  const int n = basis.n;

  BlockHeckeMatrix out{level, right_coset_reps(level), {}, "", 1, 0};
  const long R = static_cast<long>(out.reps.size());
  const auto factors = double_coset_factors(level, sigma);
  std::vector<PElement> factor_invs;
  for (const auto& w : factors) factor_invs.push_back(w.inverse());
  out.normalization = static_cast<long>(gamma_sigma(level, sigma).index() / level.index());
  out.sigma_label = "T(" + sigma.det().get_str() + ")";

  std::vector<PElement> rep_invs;
  for (const auto& s : out.reps) rep_invs.push_back(s.inverse());

  // Element theta lands in block (i, j) iff s_i theta s_j^-1 falls in the
  // level double coset; the ball is walked once and routed.
  const auto ball = class_ball(sigma, H);
  std::vector<std::vector<std::vector<PElement>>> routed(
      static_cast<size_t>(R),
      std::vector<std::vector<PElement>>(static_cast<size_t>(R)));
  for (const auto& th : ball) {
    for (long i = 0; i < R; ++i) {
      const PElement ti = out.reps[static_cast<size_t>(i)] * th;
      for (long j = 0; j < R; ++j) {
        const PElement x = ti * rep_invs[static_cast<size_t>(j)];
        if (in_level_double_coset(level, x, factor_invs))
          routed[static_cast<size_t>(i)][static_cast<size_t>(j)].push_back(th);
      }
    }
  }

  out.blocks.resize(static_cast<size_t>(R));
  for (long i = 0; i < R; ++i) {
    out.blocks[static_cast<size_t>(i)].resize(static_cast<size_t>(R));
    for (long j = 0; j < R; ++j) {
      out.blocks[static_cast<size_t>(i)][static_cast<size_t>(j)] = assemble_ball(
          n, routed[static_cast<size_t>(i)][static_cast<size_t>(j)], H, basis, nthreads);
    }
  }

  out.det_exponent = static_cast<int>(sigma.det_exponent());
  const double w = std::pow(static_cast<double>(level.p()), -0.5 * out.det_exponent);
  for (auto& row : out.blocks)
    for (auto& b : row) {
      b.mat *= w;
      b.err *= w;
    }
  return out;
}

TraceValue hecke_trace(const CongruenceLevel& level, const PElement& sigma, long H, int n,
                       const TraceSpec& q, int nthreads) {
  check_weight(n);
  check_pair(level, sigma);
  if (H < 1) throw config_error("height bound must be >= 1");
  const auto reps = right_coset_reps(level);
  const auto factors = double_coset_factors(level, sigma);
  std::vector<PElement> factor_invs;
  for (const auto& w : factors) factor_invs.push_back(w.inverse());
  const auto ball = class_ball(sigma, H);

  NeumaierC total;
  Neumaier errs;
  for (const auto& s : reps) {
    const PElement sinv = s.inverse();
    std::vector<PElement> subset;
    for (const auto& th : ball)
      if (in_level_double_coset(level, s * th * sinv, factor_invs)) subset.push_back(th);
    ScalarSum part = scalar_sum(n, subset, q, nthreads);
    total.add(part.tv.value);
    errs.add(part.tv.err);
    errs.add(shell_tail_estimate(part.shells, n));
  }
  const double w =
      std::pow(static_cast<double>(level.p()), -0.5 * static_cast<double>(sigma.det_exponent()));
  return {w * total.total(), w * errs.total()};
}

CharacterEstimate character_estimate(const PElement& sigma, int k_max, int n, long H,
                                     const TraceSpec& q, int nthreads) {
  check_weight(n);
  if (sigma.det_sign() < 0)
    throw config_error("sigma has no determinant-positive representative");
  if (k_max < 1 || k_max > 6) throw config_error("k_max out of range [1, 6]");
  if (H < 1) throw config_error("height bound must be >= 1");
  const int p = sigma.p();
  const PElement e = PElement::identity(p);

  // The conjugation orbit must be free: any commuting ball element of the
  // modular group (the identity aside) voids the estimate.
  for (const auto& g : enumerate_coset_elements(p, 0, +1, kStabHeight)) {
    if (g == e) continue;
    if (g * sigma == sigma * g)
      throw config_error("sigma has a nontrivial stabilizer in the modular group");
  }

  CharacterEstimate out{sigma, {}, {}, {}, {}, false, {}, {}};
  const auto ball = class_ball(sigma, H);
  // Per-element values are computed once and shared across levels.
  std::vector<TraceValue> vals(ball.size());
  std::vector<double> bounds(ball.size());
  {
    const auto raw = parallel_map<TraceValue>(
        static_cast<long>(ball.size()), resolve_thread_count(nthreads),
        [&](long i) -> TraceValue {
          const double bd = scalar_bound(n, ball[static_cast<size_t>(i)]);
          if (bd <= kScalarSkipFloor) return {};
          return trace_PL_pi_PL(n, ball[static_cast<size_t>(i)], q);
        });
    for (size_t i = 0; i < ball.size(); ++i) {
      vals[i] = raw[i];
      bounds[i] = scalar_bound(n, ball[i]);
    }
  }

  const int m = sigma.det_exponent();
  std::uint64_t qmod = 1;
  for (int i = 0; i < k_max + m; ++i) qmod *= static_cast<std::uint64_t>(p);
  std::uint64_t pm = 1;
  for (int i = 0; i < m; ++i) pm *= static_cast<std::uint64_t>(p);

  for (int k = 1; k <= k_max; ++k) {
    const CongruenceLevel lvl = CongruenceLevel::principal(p, k);
    out.levels.push_back(lvl);
    out.prefactors.push_back(
        static_cast<long>(gamma_sigma(lvl, sigma).index() / lvl.index()));

    const auto reps = right_coset_reps(lvl);
    const auto factors = double_coset_factors(lvl, sigma);
    std::uint64_t pk = 1;
    for (int i = 0; i < k; ++i) pk *= static_cast<std::uint64_t>(p);

    // All membership tests s_i theta s_i^-1 in Gamma0 sigma Gamma0 reduce to
    // arithmetic mod p^(k+m): the integer product x adj(w_r) must vanish mod
    // det w_r = p^m and its quotient must be +-1 mod p^k.
    std::vector<ModMat> s_mod, sadj_mod, wadj_mod;
    for (const auto& s : reps) {
      s_mod.push_back(mod_reduce(s, qmod));
      sadj_mod.push_back(mod_adjugate(s, qmod));
    }
    for (const auto& w : factors) wadj_mod.push_back(mod_adjugate(w, qmod));

    NeumaierC level_sum;
    Neumaier level_err;
    std::map<long, NeumaierC> level_shells;
    for (size_t t = 0; t < ball.size(); ++t) {
      const ModMat th_mod = mod_reduce(ball[t], qmod);
      long mult = 0;
      for (size_t i = 0; i < reps.size(); ++i) {
        const ModMat x = mod_mul(mod_mul(s_mod[i], th_mod, qmod), sadj_mod[i], qmod);
        for (const auto& wa : wadj_mod) {
          const ModMat z = mod_mul(x, wa, qmod);
          bool ok = true;
          for (int c = 0; c < 4; ++c)
            if (z.e[static_cast<size_t>(c)] % pm != 0) {
              ok = false;
              break;
            }
          if (!ok) continue;
          const std::uint64_t u0 = (z.e[0] / pm) % pk;
          const std::uint64_t u1 = (z.e[1] / pm) % pk;
          const std::uint64_t u2 = (z.e[2] / pm) % pk;
          const std::uint64_t u3 = (z.e[3] / pm) % pk;
          const bool plus = u0 == 1 && u3 == 1 && u1 == 0 && u2 == 0;
          const bool minus = u0 == pk - 1 && u3 == pk - 1 && u1 == 0 && u2 == 0;
          if (plus || minus) {
            ++mult;
            break;
          }
        }
      }
      if (mult == 0) continue;
      const bool skipped = bounds[t] <= kScalarSkipFloor;
      level_sum.add(static_cast<double>(mult) * vals[t].value);
      level_err.add(static_cast<double>(mult) * (skipped ? bounds[t] : vals[t].err));
      level_shells[ball[t].height().get_si()].add(static_cast<double>(mult) * vals[t].value);
    }
    std::vector<std::pair<long, double>> shells;
    for (const auto& [h, acc] : level_shells) shells.emplace_back(h, std::abs(acc.total()));
    out.values.push_back({level_sum.total(), level_err.total() + shell_tail_estimate(shells, n)});
  }

  // Normalized per-level estimates; the last two decide stabilization.
  const size_t last = out.values.size() - 1;
  const cplx va = out.values[last].value / static_cast<double>(out.prefactors[last]);
  const double ea = out.values[last].err / static_cast<double>(out.prefactors[last]);
  if (out.values.size() >= 2) {
    const cplx vb = out.values[last - 1].value / static_cast<double>(out.prefactors[last - 1]);
    const double eb = out.values[last - 1].err / static_cast<double>(out.prefactors[last - 1]);
    const double diff = std::abs(va - vb);
    const double scale = std::max({std::abs(va), std::abs(vb), 1e-6});
    out.stabilized = diff <= ea + eb + 0.02 * scale;
    out.extrapolated = {va, ea + diff};
  } else {
    out.stabilized = false;
    out.extrapolated = {va, ea};
  }

  // Conjugation-ball cross-check: the same value as a plain sum over
  // gamma sigma gamma^-1, truncated in the height of the conjugator.
  {
    const auto conjugators = enumerate_coset_elements(p, 0, +1, std::min(H, kConjHeight));
    std::vector<PElement> conjugates;
    std::vector<long> keys;
    for (const auto& g : conjugators) {
      conjugates.push_back(g * sigma * g.inverse());
      keys.push_back(g.height().get_si());
    }
    ScalarSum cs = scalar_sum(n, conjugates, q, nthreads,
                              [&](size_t i) { return keys[i]; });
    out.ball_check = {cs.tv.value, cs.tv.err + shell_tail_estimate(cs.shells, n)};
  }

  // Independent symbol route; only hyperbolic classes have one.
  const mpz_class tr = sigma.a() + sigma.d();
  if (tr * tr > 4 * sigma.det())
    out.symbol_check = symbol_integral_over_H(n, sigma, q);
  else
    out.symbol_check = {cplx{0.0, 0.0}, std::numeric_limits<double>::infinity()};
  return out;
}

cplx invariant_scalar_product(const Eigen::VectorXcd& h1, const Eigen::VectorXcd& h2,
                              const CongruenceLevel& level, long H,
                              const GalerkinBasis& basis, const TraceSpec& q,
                              int nthreads) {
  if (h1.size() != basis.D || h2.size() != basis.D)
    throw config_error("coefficient vectors do not match the basis size");
  const PElement e = PElement::identity(level.p());
  const CompressedOp proj = phi_map(level, e, e, H, basis, q, nthreads);
  return (h1.adjoint() * proj.mat.adjoint() * h2)(0);
}

std::vector<double> range_eigenvalues(const CompressedOp& op, const CompressedOp& proj,
                                      double cutoff) {
  if (op.mat.rows() != proj.mat.rows())
    throw config_error("compressed operators have different sizes");
  const Eigen::MatrixXcd ph = 0.5 * (proj.mat + proj.mat.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ph);
  std::vector<long> keep;
  for (long i = 0; i < ph.rows(); ++i)
    if (es.eigenvalues()(i) > cutoff) keep.push_back(i);
  std::vector<double> out;
  if (keep.empty()) return out;
  Eigen::MatrixXcd W(ph.rows(), static_cast<long>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i) W.col(static_cast<long>(i)) = es.eigenvectors().col(keep[i]);
  const Eigen::MatrixXcd b = W.adjoint() * op.mat * W;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es2(0.5 * (b + b.adjoint()));
  for (long i = 0; i < es2.eigenvalues().size(); ++i) out.push_back(es2.eigenvalues()(i));
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

}  // namespace hv
