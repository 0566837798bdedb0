#pragma once

#include <Eigen/Dense>

#include "hv/kernel.hpp"
#include "hv/pelement.hpp"

namespace hv {

// Orthonormal frame for L^2(F, y^(n-2) dx dy) cut off at y_max.  Dictionary
// entry m is u^(n/2) T_a(2x) T_b(2u/u_top - 1) with u = 1/y, ordered by the
// weighted degree 3a+b and then by descending a, so a longer basis extends a
// shorter one without touching the shared prefix.  The u^(n/2) factor makes
// the pairing of two dictionary polynomials plain Lebesgue measure in (x, u).
struct GalerkinBasis {
  int n = 0;
  int D = 0;
  double y_max = 0.0;
  Eigen::MatrixXd coeff;  // D x D, column b holds f_b over the dictionary
  double gram_residual = 0.0;

  double eval(int b, const HPoint& z) const;
  // all D values at once; out must hold D doubles
  void eval_all(const HPoint& z, double* out) const;
};

GalerkinBasis build_basis(int n, int D, const TraceSpec& q = {});

// Overlaps X[k][b] = <e_k, f_b> against y^(n-2) dx dy on the truncated F,
// with e_k the disc-model orthonormal basis.  Columns near unit norm mean
// the frame is nearly holomorphic; the defect of column b is the part of
// f_b that projects outside the first K disc modes.
Eigen::MatrixXcd basis_disc_overlaps(const GalerkinBasis& basis, int K);

}  // namespace hv
