#include "hv/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "hv/basis.hpp"
#include "hv/congruence.hpp"
#include "hv/cosets.hpp"
#include "hv/errors.hpp"
#include "hv/kernel.hpp"
#include "hv/pelement.hpp"

using namespace hv;

namespace {

PElement elem(int p, long a, long b, long c, long d) {
  return PElement(p, mpz_class(a), mpz_class(b), mpz_class(c), mpz_class(d));
}

const GalerkinBasis& shared_basis() {
  static GalerkinBasis basis = build_basis(12, 64);
  return basis;
}

// The heavy fixtures are shared across cases; each is a deterministic
// function of its arguments, so sharing cannot couple the assertions.
const CompressedOp& shared_proj120() {
  static CompressedOp proj =
      phi_map(CongruenceLevel::gamma(2), PElement::identity(2), PElement::identity(2), 120,
              shared_basis());
  return proj;
}

const BlockHeckeMatrix& shared_tp120() {
  static BlockHeckeMatrix bm =
      hecke_block_matrix(CongruenceLevel::gamma(2), PElement::diag(2, 1, 2), 120, shared_basis());
  return bm;
}

struct GlGrid {
  std::vector<double> node, weight;
};

// Gauss-Legendre nodes by Newton iteration on the Legendre recurrence.
GlGrid gl_grid(int m, double lo, double hi) {
  GlGrid g;
  g.node.resize(static_cast<size_t>(m));
  g.weight.resize(static_cast<size_t>(m));
  const double pi = std::acos(-1.0);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(pi * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = m * (x * p1 - p0) / (x * x - 1.0);
      double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= m; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = m * (x * p1 - p0) / (x * x - 1.0);
    g.node[static_cast<size_t>(i)] = lo + (hi - lo) * 0.5 * (1.0 + x);
    g.weight[static_cast<size_t>(i)] = (hi - lo) / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

// Quadrature points over the truncated fundamental domain with the
// y^(n-2) dx dy measure folded into the weights, plus the basis values.
struct DomainSample {
  std::vector<HPoint> pts;
  std::vector<double> w;
  std::vector<std::vector<double>> fvals;  // [point][b]
};

DomainSample sample_domain(const GalerkinBasis& basis, int mx, int mu) {
  DomainSample s;
  const GlGrid gx = gl_grid(mx, -0.5, 0.5);
  for (int a = 0; a < mx; ++a) {
    const double x = gx.node[static_cast<size_t>(a)];
    const double u_hi = 1.0 / std::sqrt(1.0 - x * x);
    const GlGrid gu = gl_grid(mu, 1.0 / basis.y_max, u_hi);
    for (int b = 0; b < mu; ++b) {
      const double u = gu.node[static_cast<size_t>(b)];
      HPoint z{x, 1.0 / u};
      s.pts.push_back(z);
      s.w.push_back(gx.weight[static_cast<size_t>(a)] * gu.weight[static_cast<size_t>(b)] *
                    std::pow(u, -basis.n));
      std::vector<double> f(static_cast<size_t>(basis.D));
      basis.eval_all(z, f.data());
      s.fvals.push_back(std::move(f));
    }
  }
  return s;
}

// <pi_n(theta) P_hol f_j, f_i> by direct double quadrature over the domain,
// through the reproducing kernel.  Shares no code with rep_matrix or the
// overlap build.
Eigen::MatrixXcd quadrature_compression(int n, const PElement& theta, const GalerkinBasis& basis,
                                        const DomainSample& s) {
  const auto co = inverse_coeffs(theta);
  const size_t m = s.pts.size();
  const int D = basis.D;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(D, D);
  for (size_t a = 0; a < m; ++a) {
    const cplx z = s.pts[a].z();
    const cplx denom = co[2] * z + co[3];
    const cplx zeta = (co[0] * z + co[1]) / denom;
    const cplx jfac = cpow_int(denom, -n) * s.w[a];
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(D);
    for (size_t c = 0; c < m; ++c) {
      const cplx k =
          jfac * bergman_kernel(n, HPoint{zeta.real(), zeta.imag()}, s.pts[c]) * s.w[c];
      for (int j = 0; j < D; ++j) col(j) += k * s.fvals[c][static_cast<size_t>(j)];
    }
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) out(i, j) += s.fvals[a][static_cast<size_t>(i)] * col(j);
  }
  return out;
}

}  // namespace

TEST_CASE("compressed operators match a double quadrature oracle") {
  const int n = 12;
  const GalerkinBasis basis = build_basis(n, 6);
  const DomainSample coarse = sample_domain(basis, 20, 20);
  const DomainSample fine = sample_domain(basis, 28, 28);

  // The oracle must first agree with itself across grids.
  const Eigen::MatrixXcd self_a = quadrature_compression(n, PElement::identity(2), basis, coarse);
  const Eigen::MatrixXcd self_b = quadrature_compression(n, PElement::identity(2), basis, fine);
  CHECK((self_a - self_b).norm() < 1e-8);

  for (const PElement& th : {PElement::identity(2), PElement::gen_s(2), PElement::gen_t(2),
                             PElement::diag(2, 1, 2)}) {
    const CompressedOp op = compress_op(n, th, basis);
    const Eigen::MatrixXcd oracle = quadrature_compression(n, th, basis, fine);
    CHECK((op.mat - oracle).norm() < std::max(3.0 * op.err, 1e-3));
  }
}

TEST_CASE("compression respects the group adjoint") {
  const GalerkinBasis& basis = shared_basis();
  for (const PElement& th :
       {PElement::gen_t(2), PElement::diag(2, 1, 2), elem(2, 2, 1, 1, 1)}) {
    const CompressedOp a = compress_op(12, th, basis);
    const CompressedOp b = compress_op(12, th.inverse(), basis);
    CHECK((b.mat - a.mat.adjoint()).norm() < 1e-8 * (1.0 + a.mat.norm()));
  }
}

TEST_CASE("identity compression reproduces the dimension constant") {
  const CompressedOp id = compress_op(12, PElement::identity(2), shared_basis());
  CHECK(std::abs(id.mat.trace().real() - 11.0 / 12.0) < 2e-2);
  CHECK(std::abs(id.mat.trace().imag()) < 1e-10);
  CHECK((id.mat - id.mat.adjoint()).norm() < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(id.mat);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
  CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-10);
  CHECK(id.err < 5e-3);
}

TEST_CASE("a small ball sums element by element") {
  const GalerkinBasis& basis = shared_basis();
  const CongruenceLevel top = CongruenceLevel::gamma(2);
  const PElement e = PElement::identity(2);
  const CompressedOp whole = phi_map(top, e, e, 4, basis);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(basis.D, basis.D);
  double errs = 0.0;
  for (const auto& g : enumerate_coset_elements(2, 0, +1, 4)) {
    const CompressedOp one = compress_op(12, g, basis);
    acc += one.mat;
    errs += one.err;
  }
  CHECK((whole.mat - acc).norm() < 1e-10 * (1.0 + acc.norm()));
  CHECK(whole.err < errs + 1.0);  // one sandwich, not one per element
}

TEST_CASE("the invariant projection is idempotent within its error") {
  const CompressedOp proj =
      phi_map(CongruenceLevel::gamma(2), PElement::identity(2), PElement::identity(2), 60,
              shared_basis());
  CHECK((proj.mat - proj.mat.adjoint()).norm() < 1e-9 * (1.0 + proj.mat.norm()));
  CHECK((proj.mat * proj.mat - proj.mat).norm() / proj.mat.norm() < 0.1);
  CHECK(std::abs(proj.mat.trace().real() - 1.0) < proj.err + 0.05);
  CHECK(proj.err < 0.3);
}

TEST_CASE("the top-level block matrix is the projection itself") {
  const GalerkinBasis& basis = shared_basis();
  const CongruenceLevel top = CongruenceLevel::gamma(2);
  const PElement e = PElement::identity(2);
  const BlockHeckeMatrix bm = hecke_block_matrix(top, e, 20, basis);
  REQUIRE(bm.reps.size() == 1);
  CHECK(bm.normalization == 1);
  CHECK(bm.det_exponent == 0);
  CHECK(bm.sigma_label == "T(1)");
  const CompressedOp proj = phi_map(top, e, e, 20, basis);
  CHECK((bm.blocks[0][0].mat - proj.mat).norm() == 0.0);
  CHECK(bm.blocks[0][0].err == proj.err);
  CHECK(bm.full().rows() == basis.D);
}

TEST_CASE("hecke blocks at the prime level pair into adjoints") {
  const GalerkinBasis& basis = shared_basis();
  const CongruenceLevel level = CongruenceLevel::gamma0(2, 1);
  const PElement sig = PElement::diag(2, 1, 2);
  const BlockHeckeMatrix A = hecke_block_matrix(level, sig, 24, basis);
  const BlockHeckeMatrix B = hecke_block_matrix(level, sig.inverse(), 24, basis);
  REQUIRE(A.reps.size() == 3);
  REQUIRE(B.reps.size() == 3);
  CHECK(A.det_exponent == 1);
  CHECK(B.det_exponent == 1);
  CHECK(A.normalization == B.normalization);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) {
      const auto& a = A.blocks[i][j];
      const auto& b = B.blocks[j][i];
      CHECK((a.mat - b.mat.adjoint()).norm() < a.err + b.err + 1e-6);
    }
  CHECK(A.full().rows() == 3 * basis.D);
  CHECK(A.total_err() > 0.0);
}

TEST_CASE("matrix and scalar traces of the hecke operator agree") {
  const GalerkinBasis& basis = shared_basis();
  const CongruenceLevel level = CongruenceLevel::gamma0(2, 1);
  const PElement sig = PElement::diag(2, 1, 2);
  const long H = 16;
  const BlockHeckeMatrix bm = hecke_block_matrix(level, sig, H, basis);
  cplx block_trace = 0.0;
  for (size_t i = 0; i < bm.blocks.size(); ++i) block_trace += bm.blocks[i][i].mat.trace();
  const TraceValue t = hecke_trace(level, sig, H, 12);
  CHECK(std::abs(block_trace - t.value) < bm.total_err() + t.err + 1e-9);
}

TEST_CASE("the scalar trace route reduces to the plain ball sum at sigma = e") {
  const CongruenceLevel top = CongruenceLevel::gamma(2);
  const PElement e = PElement::identity(2);
  const TraceValue a = hecke_trace(top, e, 14, 12);
  const TraceValue b = sum_over_coset(12, top, e, 14);
  CHECK(std::abs(a.value - b.value) < 1e-8);
  CHECK(a.err < 1.0);
}

TEST_CASE("the hecke eigenvalue sits on the projected range") {
  const CompressedOp& proj = shared_proj120();
  const BlockHeckeMatrix& bm = shared_tp120();
  REQUIRE(bm.blocks.size() == 1);
  CHECK(bm.normalization == 3);
  const auto evs = range_eigenvalues(bm.blocks[0][0], proj, 0.3);
  REQUIRE(evs.size() == 1);
  // tau(2) * 2^(-11/2) from the q-expansion of the weight-12 cusp form.
  CHECK(std::abs(evs[0] - (-0.530330)) < 3e-2);
}

TEST_CASE("the projection tightens and has numerical rank one") {
  const CompressedOp& proj = shared_proj120();
  CHECK((proj.mat * proj.mat - proj.mat).norm() / proj.mat.norm() < 2.5e-2);
  CHECK(proj.err < 0.1);
  const auto evs = range_eigenvalues(proj, proj, 10.0 * proj.err);
  CHECK(evs.size() == 1);
  CHECK(evs[0] > 0.8);
  CHECK(evs[0] < 1.1);
}

TEST_CASE("translated cosets multiply like the group") {
  const PElement sig = PElement::diag(2, 1, 2);
  const PhiMultReport rep = verify_phi_multiplicativity(sig, sig, 40, shared_basis());
  CHECK(rep.residual < 3.0 * rep.bound);
  CHECK(rep.bound < 2.0);
}

TEST_CASE("invariant products are positive and hermitian") {
  const GalerkinBasis& basis = shared_basis();
  const CongruenceLevel top = CongruenceLevel::gamma(2);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(basis.D);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(basis.D);
  u(0) = 1.0;
  v(1) = cplx{0.5, 0.5};
  const long H = 30;
  const cplx uu = invariant_scalar_product(u, u, top, H, basis);
  const cplx uv = invariant_scalar_product(u, v, top, H, basis);
  const cplx vu = invariant_scalar_product(v, u, top, H, basis);
  const CompressedOp proj = phi_map(top, PElement::identity(2), PElement::identity(2), H, basis);
  CHECK(std::abs(uu.imag()) < 1e-10);
  CHECK(uu.real() > -proj.err);
  CHECK(std::abs(uv - std::conj(vu)) < 1e-10);
}

TEST_CASE("character estimates pin exact prefactors and cross checks") {
  const PElement sig = PElement::diag(2, 1, 2);
  const CharacterEstimate ce = character_estimate(sig, 3, 12, 16);
  REQUIRE(ce.values.size() == 3);
  REQUIRE(ce.prefactors.size() == 3);
  for (long pf : ce.prefactors) CHECK(pf == 2);
  REQUIRE(ce.levels.size() == 3);
  CHECK(ce.levels[0].index() == CongruenceLevel::principal(2, 1).index());
  CHECK(ce.symbol_check.err < 1e30);  // hyperbolic, so the integral exists
  CHECK(ce.ball_check.err < 1e30);

  // Conjugating sigma inside the modular group must not move the estimate.
  const PElement t = PElement::gen_t(2);
  const PElement sig2 = t * sig * t.inverse();
  REQUIRE(sig2 != sig);
  const CharacterEstimate ce2 = character_estimate(sig2, 1, 12, 16);
  CHECK(std::abs(ce.values[0].value - ce2.values[0].value) <
        ce.values[0].err + ce2.values[0].err + 1e-3);
}

TEST_CASE("character level sums agree with an all-integer membership recount") {
  const int n = 12, p = 2;
  const PElement sig = PElement::diag(p, 1, p);
  const long H = 10;
  const CharacterEstimate ce = character_estimate(sig, 2, n, H);

  for (int k = 1; k <= 2; ++k) {
    const CongruenceLevel level = CongruenceLevel::principal(p, k);
    const auto decomp = double_coset_decomp(sig);
    std::vector<PElement> ball;
    for (const auto& r : decomp.reps)
      for (const auto& g : enumerate_coset_elements(level.p(), r, H))
        ball.push_back(g);
    std::sort(ball.begin(), ball.end(), height_lex_less);

    const auto reps = right_coset_reps(level);
    const auto factors = double_coset_factors(level, sig);
    cplx acc = 0.0;
    double slack = 0.0;
    for (const auto& s : reps) {
      const PElement sinv = s.inverse();
      for (const auto& th : ball) {
        const PElement x = s * th * sinv;
        long mult = 0;
        for (const auto& w : factors)
          if (level.contains(x * w.inverse())) ++mult;
        if (mult == 0) continue;
        const TraceValue tv = trace_PL_pi_PL(n, th);
        acc += static_cast<double>(mult) * tv.value;
        slack += 1e-10;
      }
    }
    const double pref = static_cast<double>(ce.prefactors[static_cast<size_t>(k - 1)]);
    CHECK(std::abs(pref * acc - ce.values[static_cast<size_t>(k - 1)].value) < 1e-6 + slack);
  }
}

TEST_CASE("assembled sums are identical across thread counts") {
  const GalerkinBasis& basis = shared_basis();
  const CongruenceLevel top = CongruenceLevel::gamma(2);
  const PElement e = PElement::identity(2);
  const CompressedOp a = phi_map(top, e, e, 24, basis, {}, 1);
  const CompressedOp b = phi_map(top, e, e, 24, basis, {}, 3);
  REQUIRE(a.mat.size() == b.mat.size());
  CHECK(std::memcmp(a.mat.data(), b.mat.data(),
                    sizeof(cplx) * static_cast<size_t>(a.mat.size())) == 0);
  CHECK(a.err == b.err);

  const TraceValue t1 = hecke_trace(CongruenceLevel::gamma0(2, 1), PElement::diag(2, 1, 2), 10,
                                    12, {}, 1);
  const TraceValue t2 = hecke_trace(CongruenceLevel::gamma0(2, 1), PElement::diag(2, 1, 2), 10,
                                    12, {}, 2);
  CHECK(t1.value.real() == t2.value.real());
  CHECK(t1.value.imag() == t2.value.imag());
  CHECK(t1.err == t2.err);
}

TEST_CASE("assembly rejects inconsistent requests") {
  const GalerkinBasis& basis = shared_basis();
  const CongruenceLevel top = CongruenceLevel::gamma(2);
  const PElement e = PElement::identity(2);

  CHECK_THROWS_AS(compress_op(12, elem(2, 1, 0, 0, -2), basis), config_error);
  CHECK_THROWS_AS(compress_op(10, e, basis), config_error);
  CHECK_THROWS_AS(phi_map(top, PElement::identity(3), e, 10, basis), config_error);
  CHECK_THROWS_AS(phi_map(top, e, e, 0, basis), config_error);
  CHECK_THROWS_AS(hecke_block_matrix(top, PElement::diag(3, 1, 3), 10, basis), config_error);
  CHECK_THROWS_AS(hecke_block_matrix(top, e, 0, basis), config_error);
  CHECK_THROWS_AS(hecke_trace(top, elem(2, 1, 0, 0, -2), 10, 12), config_error);
  CHECK_THROWS_AS(character_estimate(PElement::diag(2, 1, 2), 0, 12, 10), config_error);
  CHECK_THROWS_AS(character_estimate(PElement::diag(2, 1, 2), 7, 12, 10), config_error);
  CHECK_THROWS_AS(character_estimate(e, 1, 12, 10), config_error);
  CHECK_THROWS_AS(character_estimate(PElement::gen_t(2), 1, 12, 10), config_error);

  Eigen::VectorXcd bad = Eigen::VectorXcd::Zero(basis.D + 1);
  Eigen::VectorXcd good = Eigen::VectorXcd::Zero(basis.D);
  CHECK_THROWS_AS(invariant_scalar_product(bad, good, top, 10, basis), config_error);

  CompressedOp small;
  small.mat = Eigen::MatrixXcd::Zero(3, 3);
  CompressedOp large;
  large.mat = Eigen::MatrixXcd::Zero(4, 4);
  CHECK_THROWS_AS(small + large, config_error);
  CHECK_THROWS_AS(range_eigenvalues(small, large, 0.5), config_error);
}
