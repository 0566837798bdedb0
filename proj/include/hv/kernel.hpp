#pragma once

#include <complex>
#include <vector>

#include "hv/congruence.hpp"
#include "hv/pelement.hpp"
#include "hv/quadrature.hpp"

namespace hv {

// Holomorphic discrete series of weight n on the upper half plane, acting on
// holomorphic functions square-integrable against y^(n-2) dx dy.  The weight
// must be even (the center acts trivially) and at least 4 so that every tail
// estimate below converges.
void check_weight(int n);

// Normalization (n - 1) / (4 pi): the diagonal of the reproducing kernel is
// cn(n) * y^(-n).
double cn(int n);

// Reproducing kernel K(z, conj(w)) of the weight-n space.
cplx bergman_kernel(int n, const HPoint& z, const HPoint& w);

// Integer exponent power by squaring; exp may be negative.
cplx cpow_int(cplx base, int exp);

// The det-1 normalized inverse of theta as doubles (adjugate over sqrt det);
// throws negative_determinant unless det > 0.
std::array<double, 4> inverse_coeffs(const PElement& theta);

struct TraceSpec {
  double rel_tol = 1e-7;
  double y_max = 1e7;      // cusp truncation height; beyond it a bound is used
  int order = 5;
  int max_depth = 24;
  long long max_cells = 40000000;
};

struct TraceValue {
  cplx value{0.0, 0.0};
  double err = 0.0;
};

// Trace of (restrict to F) pi_n(theta) (restrict to F): the integral of the
// diagonal kernel of pi_n(theta) over the standard fundamental domain.
TraceValue trace_PL_pi_PL(int n, const PElement& theta, const TraceSpec& spec = {});

// Sum of trace_PL_pi_PL over a list, computed with nthreads workers but
// reduced sequentially in list order, so the result does not depend on the
// thread count.
TraceValue sum_over_coset(int n, const std::vector<PElement>& thetas,
                          const TraceSpec& spec = {}, int nthreads = 1);

// The same diagonal kernel integrated over the whole upper half plane, in the
// sense of exhaustion by unions of translated fundamental domains.  Requires
// theta hyperbolic (tr^2 > 4 det); elsewhere the integral diverges.  The value
// depends only on the eigenvalue ratio of theta.
TraceValue symbol_integral_over_H(int n, const PElement& theta, const TraceSpec& spec = {});

// Sum of trace_PL_pi_PL over the coset (level subgroup) * g cut to the
// height ball, reduced in height-lex order.  Elements whose universal bound
// cn (pi/3) (2 sqrt|det| / |tr|)^n is below a fixed floor are skipped with
// the bound charged to err, and a trailing-shell envelope fit is charged as
// well, so err also covers what the ball cut off.
// Rigorous overestimate of |trace_PL_pi_PL| from the normalized trace of
// theta alone; +inf when no cheap bound applies.  Cheap enough to test on
// every element of a large ball before deciding to run quadrature.
double trace_skip_bound(int n, const PElement& theta);

TraceValue sum_over_coset(int n, const CongruenceLevel& level, const PElement& g,
                          long height_bound, const TraceSpec& spec = {}, int nthreads = 1);

// Envelope bound on the mass beyond the height ball: per-height signed sums
// are fitted to C h^(2-n) over a band of trailing shells and integrated past
// height_bound.  The band is pinned below a fixed height, so for cutoffs
// past it the bound is monotone nonincreasing in height_bound.
double tail_bound(int n, const CongruenceLevel& level, const PElement& g, long height_bound);

// Conservative estimate of the height tail sum_{h > H} of shell masses, from
// a fit of the last computed shells to C * h^(2-n).  shells holds ascending
// (height, |signed sum of traces at that height|); shells must stay
// inverse-closed, since only the pairing makes the per-shell sums decay.
double shell_tail_estimate(const std::vector<std::pair<long, double>>& shells, int n);

}  // namespace hv
