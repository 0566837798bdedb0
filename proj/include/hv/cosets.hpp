#pragma once

#include <map>
#include <vector>

#include "hv/congruence.hpp"
#include "hv/pelement.hpp"

namespace hv {

// Orders group elements by height first, then by entries; every coset and
// ball enumeration in the library emits this order so that downstream sums
// are reproducible bit for bit.
bool height_lex_less(const PElement& a, const PElement& b);

// The upper-triangular representative of Gamma * theta: [[A, b], [0, D]]
// with A > 0, 0 <= b < |D|, and the sign of det carried by D.
PElement canonical_hnf(const PElement& theta);

// Representatives of level \ Gamma: the identity for the trivial coset,
// otherwise the lowest-height lift (ties broken by entry order).  Throws
// budget_exceeded if lifts would need entries beyond an internal search cap.
std::vector<PElement> right_coset_reps(const CongruenceLevel& level);

// Gamma sigma Gamma = disjoint union of Gamma theta_i; the theta_i are the
// primitive triangular forms of the right degree, one per left coset.
struct DoubleCosetDecomp {
  PElement sigma;
  std::vector<PElement> reps;
};
DoubleCosetDecomp double_coset_decomp(const PElement& sigma);

// Degree-class of theta: the exponent m with |det| = p^m for the canonical
// representative.  Elements of Gamma diag(1, p^m) Gamma all land on m.
int classify(const PElement& theta);

// Number of left cosets in the double coset of class m (and matching sign).
long long coset_degree(int p, int m);

// Product in the Hecke algebra: class m1 times class m2 as a map from
// exponent m to its integer coefficient.
std::map<int, long long> hecke_product(int p, int m1, int m2);

// All canonical elements theta with det = sign * p^m and height <= bound,
// in height-lex order.  max_count guards the output size.
std::vector<PElement> enumerate_coset_elements(int p, int m, int sign, long height_bound,
                                               long long max_count = 200000000);

// All theta in (level subgroup) * g with height(theta) <= bound, in
// height-lex order.  The level and g must share the same prime.
std::vector<PElement> enumerate_coset_elements(const CongruenceLevel& level, const PElement& g,
                                               long height_bound);

// All theta in left * (level subgroup) * right with height(theta) <= bound,
// in height-lex order.  Covers left cosets, right cosets, and two-sided
// translates with one filter.
std::vector<PElement> enumerate_translated_elements(const CongruenceLevel& level,
                                                    const PElement& left, const PElement& right,
                                                    long height_bound);

// Two-sided decompositions of the same double coset:
//   Gamma sigma Gamma = ⊔ Gamma sigma s_i = ⊔ r_j sigma Gamma.
// Both factor lists are walked to exhaustion through the coset actions of
// the generators and checked label by label against double_coset_decomp;
// any mismatch throws verification_failure.
struct CosetIdentityReport {
  PElement sigma;
  std::vector<PElement> right_factors;
  std::vector<PElement> left_factors;
};
CosetIdentityReport coset_identity_check(const PElement& sigma);

}  // namespace hv
