#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hv/basis.hpp"
#include "hv/congruence.hpp"
#include "hv/kernel.hpp"
#include "hv/pelement.hpp"

namespace hv {

// D x D compression of P_L pi_n(theta) P_L onto a Galerkin frame.  err
// covers quadrature, the finite count of disc modes carried through the
// sandwich, and any elements skipped under a rigorous size bound; it adds
// under operator+ and is propagated multiplicatively by callers that form
// products.
struct CompressedOp {
  Eigen::MatrixXcd mat;
  double err = 0.0;

  CompressedOp operator+(const CompressedOp& o) const;
};

// Block matrix of a double coset [Gamma0 sigma Gamma0] over the coset
// decomposition Gamma = ⊔ Gamma0 s_i; block (i,j) sums the compressions
// over s_i^{-1} Gamma0 sigma Gamma0 s_j.  normalization is the exact index
// [Gamma0 : (Gamma0)_sigma].  The blocks carry one scalar p^(-e/2) per
// coset, where e = det_exponent is the determinant exponent of sigma (a
// constant across the coset); this is the normalization under which the
// eigenvalues line up with classical Hecke eigenvalue tables.  Multiplying
// the blocks by p^(e/2) recovers the plain operator sum.
struct BlockHeckeMatrix {
  CongruenceLevel level;
  std::vector<PElement> reps;
  std::vector<std::vector<CompressedOp>> blocks;
  std::string sigma_label;
  long normalization = 1;
  int det_exponent = 0;

  Eigen::MatrixXcd full() const;
  double total_err() const;
};

// Character data along the principal-level chain Gamma(p^k), k = 1..k_max:
// exact prefactors, the per-level double sums, the extrapolated value (only
// meaningful when stabilized is set), and the two independent cross-checks,
// a conjugation ball sum and the symbol integral.
struct CharacterEstimate {
  PElement sigma;
  std::vector<CongruenceLevel> levels;
  std::vector<TraceValue> values;
  std::vector<long> prefactors;
  TraceValue extrapolated;
  bool stabilized = false;
  TraceValue ball_check;
  TraceValue symbol_check;
};

struct PhiMultReport {
  double residual = 0.0;
  double bound = 0.0;
};

// P_L pi_n(theta) P_L in the frame: the sandwich X^dagger R(theta) X with X
// the disc-mode overlaps of the basis and R the representation matrix.  The
// truncation part of err is measured by re-running the sandwich on the
// half-size mode prefix and extrapolating the difference.
CompressedOp compress_op(int n, const PElement& theta, const GalerkinBasis& basis,
                         const TraceSpec& q = {});

// Sum of compress_op over {theta in left * level * right, height <= H} in
// deterministic order.  Far elements are dropped under a rigorous entry
// bound whose total is charged to err; err also carries the measured
// height-halving difference, which stands in for the mass beyond H.
CompressedOp phi_map(const CongruenceLevel& level, const PElement& left, const PElement& right,
                     long H, const GalerkinBasis& basis, const TraceSpec& q = {}, int nthreads = 1);

// Frobenius residual of Phi(chi_{s1 K}) Phi(chi_{K s2}) - Phi(chi_{s1 K s2})
// together with the error-propagation bound.  Reports, never throws on a
// large residual.
PhiMultReport verify_phi_multiplicativity(const PElement& s1, const PElement& s2, long H,
                                          const GalerkinBasis& basis, const TraceSpec& q = {},
                                          int nthreads = 1);

BlockHeckeMatrix hecke_block_matrix(const CongruenceLevel& level, const PElement& sigma, long H,
                                    const GalerkinBasis& basis, const TraceSpec& q = {},
                                    int nthreads = 1);

// Scalar-trace route to the same number: sum of Tr(P_L pi_n(theta) P_L)
// over ⊔_i s_i Gamma0 sigma Gamma0 s_i^{-1}, no Galerkin compression.
// Carries the same p^(-e/2) scalar as the block matrix.
TraceValue hecke_trace(const CongruenceLevel& level, const PElement& sigma, long H, int n,
                       const TraceSpec& q = {}, int nthreads = 1);

// Character of the extended representation at sigma along Gamma(p^k),
// k = 1..k_max, with the conjugation-ball and symbol-integral cross-checks.
// Throws nontrivial_stabilizer when a nonidentity element of Gamma commutes
// with sigma.
CharacterEstimate character_estimate(const PElement& sigma, int k_max, int n, long H,
                                     const TraceSpec& q = {}, int nthreads = 1);

// <P h1, h2> where P is the compressed invariant-vector projection at the
// level; positive semidefinite within err by construction.
cplx invariant_scalar_product(const Eigen::VectorXcd& h1, const Eigen::VectorXcd& h2,
                              const CongruenceLevel& level, long H, const GalerkinBasis& basis,
                              const TraceSpec& q = {}, int nthreads = 1);

// Eigenvalues of op restricted to the numerical range of proj: the span of
// proj's eigenvectors with eigenvalue above cutoff.
std::vector<double> range_eigenvalues(const CompressedOp& op, const CompressedOp& proj,
                                      double cutoff);

}  // namespace hv
