#pragma once

#include <gmpxx.h>

#include <array>
#include <complex>
#include <string>
#include <utility>

#include "hv/errors.hpp"

namespace hv {

using cplx = std::complex<double>;

// Point in the open upper half plane.
struct HPoint {
  double x = 0.0;
  double y = 1.0;
  HPoint() = default;
  HPoint(double x_, double y_);
  cplx z() const { return cplx{x, y}; }
};

// p-adic valuation of a nonzero integer.
int valuation(const mpz_class& v, int p);

// Element of PGL(2, Z[1/p]) held as its canonical integral representative:
// the entry content carries no factor of p, the first nonzero entry in
// row-major order is positive, and det = +-p^e.  PSL(2, Z) is exactly the
// det = 1 part.
class PElement {
 public:
  explicit PElement(int p);  // identity
  PElement(int p, const mpz_class& a, const mpz_class& b, const mpz_class& c,
           const mpz_class& d);
  PElement(int p, long a, long b, long c, long d);

  // Rational entries; denominators must be powers of p.
  static PElement from_rational(int p, const std::array<mpq_class, 4>& m);

  static PElement identity(int p) { return PElement(p); }
  static PElement gen_t(int p) { return PElement(p, 1, 1, 0, 1); }
  static PElement gen_s(int p) { return PElement(p, 0, -1, 1, 0); }
  static PElement diag(int p, const mpz_class& a, const mpz_class& d);

  int p() const { return p_; }
  const mpz_class& a() const { return m_[0]; }
  const mpz_class& b() const { return m_[1]; }
  const mpz_class& c() const { return m_[2]; }
  const mpz_class& d() const { return m_[3]; }
  const mpz_class& entry(int i) const { return m_[i]; }

  mpz_class det() const;
  int det_exponent() const;  // e with |det| = p^e
  int det_sign() const;
  bool in_gamma() const;     // det(canonical form) == 1
  mpz_class height() const;  // max |entry|

  PElement inverse() const;
  friend PElement operator*(const PElement& lhs, const PElement& rhs);
  bool operator==(const PElement& o) const;
  bool operator!=(const PElement& o) const { return !(*this == o); }
  bool operator<(const PElement& o) const;  // total order, for containers

  std::string str() const;

 private:
  void canonicalize_();
  int p_;
  mpz_class m_[4];
};

// Action z -> (az+b)/(cz+d) of the canonical representative, which must have
// positive determinant; returns the image and the automorphy factor cz + d of
// that representative.  Im(gz) = det * Im(z) / |cz+d|^2.
std::pair<HPoint, cplx> moebius(const PElement& g, const HPoint& z);

// Translate z into the standard fundamental domain F = {|Re z| <= 1/2,
// |z| >= 1} of PSL(2,Z); returns (z', gamma) with z' = gamma z in F.
// Boundary convention: Re in [-1/2, 1/2), and on |z| = 1 the representative
// with Re <= 0.
std::pair<HPoint, PElement> reduce_to_F(int p, const HPoint& z);

}  // namespace hv
