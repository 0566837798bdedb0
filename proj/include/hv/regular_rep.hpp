#pragma once

#include <map>
#include <vector>

#include "hv/cosets.hpp"
#include "hv/pelement.hpp"

namespace hv {

// Finite window on the coset space Gamma \ G: all right cosets whose class
// exponent is at most radius, labelled by their triangular forms.  For a
// fixed det sign the picture is the ball of that radius in the rooted
// (p+1)-regular tree.
class RegularBall {
 public:
  RegularBall(int p, int radius, int sign = 1);

  int p() const { return p_; }
  int radius() const { return radius_; }
  int sign() const { return sign_; }
  int size() const { return static_cast<int>(vertices_.size()); }
  const std::vector<PElement>& vertices() const { return vertices_; }
  int depth(int i) const { return depths_[i]; }
  // index of the coset of theta, or -1 when it falls outside the ball
  int find(const PElement& theta) const;

 private:
  int p_, radius_, sign_;
  std::vector<PElement> vertices_;
  std::vector<int> depths_;
  std::map<PElement, int> index_;
};

// Matrix of the class-m operator on the ball: vertex v is sent to the sum of
// the cosets of tau * theta_v over the class representatives tau, which is
// the index-p^m sublattice correspondence in the lattice picture (the sum is
// independent of the lift theta_v, unlike right translation).  Entries
// landing outside the ball are dropped, so only rows with
// depth(v) + m <= radius are faithful.
std::vector<std::vector<long long>> regular_rep_matrix(const RegularBall& ball, int m);

// Rows on which a product of operators of total class weight w is faithful.
std::vector<int> interior_rows(const RegularBall& ball, int w);

}  // namespace hv
