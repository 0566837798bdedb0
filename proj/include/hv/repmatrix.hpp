#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hv/kernel.hpp"
#include "hv/pelement.hpp"

namespace hv {

// Orthonormal basis of the weight-n space indexed through the disc model:
//   e_k(z) = bhat_k w(z)^k (z+i)^(-n),   w(z) = (z-i)/(z+i),
// so that sum_k e_k(z) conj(e_k(w)) reproduces bergman_kernel.
double bergman_basis_norm(int n, int k);
cplx bergman_basis_eval(int n, int k, const HPoint& z);

// K x K matrix of pi_n(g) in that basis; column k holds the coefficients of
// pi_n(g) e_k.  The full operator is unitary; the finite block drops the
// coefficients past K, so columns near the right edge lose mass.
Eigen::MatrixXcd rep_matrix(int n, const PElement& g, int K);

// Sum of rep_matrix over a list.  Work may be split across threads but the
// accumulation is chunked with a fixed chunk size and reduced in list order,
// so the bits never depend on the thread count.
Eigen::MatrixXcd rep_matrix_sum(int n, const std::vector<PElement>& gs, int K, int nthreads = 1);

}  // namespace hv
