#include "hv/pelement.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hv {

namespace {

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

void check_prime(int p) {
  if (!is_prime(p)) throw config_error("p must be prime, got " + std::to_string(p));
}

}  // namespace

HPoint::HPoint(double x_, double y_) : x(x_), y(y_) {
  if (!std::isfinite(x) || !std::isfinite(y) || y <= 0.0)
    throw config_error("point not in the upper half plane");
}

int valuation(const mpz_class& v, int p) {
  mpz_class rest;
  return static_cast<int>(mpz_remove(rest.get_mpz_t(), v.get_mpz_t(), mpz_class(p).get_mpz_t()));
}

PElement::PElement(int p) : p_(p), m_{1, 0, 0, 1} { check_prime(p); }

PElement::PElement(int p, const mpz_class& a, const mpz_class& b, const mpz_class& c,
                   const mpz_class& d)
    : p_(p), m_{a, b, c, d} {
  check_prime(p);
  canonicalize_();
}

PElement::PElement(int p, long a, long b, long c, long d)
    : PElement(p, mpz_class(a), mpz_class(b), mpz_class(c), mpz_class(d)) {}

PElement PElement::diag(int p, const mpz_class& a, const mpz_class& d) {
  return PElement(p, a, mpz_class(0), mpz_class(0), d);
}

PElement PElement::from_rational(int p, const std::array<mpq_class, 4>& m) {
  check_prime(p);
  mpz_class scale = 1;
  for (const auto& q : m) {
    mpz_class den = q.get_den();  // canonical, > 0
    if (den == 1) continue;
    mpz_class rest;
    mpz_remove(rest.get_mpz_t(), den.get_mpz_t(), mpz_class(p).get_mpz_t());
    if (rest != 1) throw bad_denominator("denominator is not a power of p: " + den.get_str());
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), scale.get_mpz_t(), den.get_mpz_t());
    scale = scale / g * den;  // lcm of p-powers
  }
  std::array<mpz_class, 4> e;
  for (int i = 0; i < 4; ++i) {
    mpq_class scaled = m[i] * mpq_class(scale);
    e[i] = scaled.get_num();  // exact: scale clears every denominator
  }
  return PElement(p, e[0], e[1], e[2], e[3]);
}

void PElement::canonicalize_() {
  mpz_class dt = m_[0] * m_[3] - m_[1] * m_[2];
  if (dt == 0) throw singular_matrix("matrix is singular: " + str());

  int v = std::numeric_limits<int>::max();
  for (const auto& e : m_)
    if (e != 0) v = std::min(v, valuation(e, p_));
  if (v > 0) {
    mpz_class pv;
    mpz_ui_pow_ui(pv.get_mpz_t(), static_cast<unsigned long>(p_), static_cast<unsigned long>(v));
    for (auto& e : m_) e /= pv;
    dt = m_[0] * m_[3] - m_[1] * m_[2];
  }

  mpz_class rest;
  mpz_class adt = abs(dt);
  mpz_remove(rest.get_mpz_t(), adt.get_mpz_t(), mpz_class(p_).get_mpz_t());
  if (rest != 1)
    throw not_in_group("det " + dt.get_str() + " is not a power of p after clearing p-content");

  for (const auto& e : m_) {
    if (e == 0) continue;
    if (e < 0)
      for (auto& f : m_) f = -f;
    break;
  }
}

mpz_class PElement::det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }

int PElement::det_exponent() const {
  mpz_class adt = abs(det());
  if (adt == 1) return 0;
  return valuation(adt, p_);
}

int PElement::det_sign() const { return det() > 0 ? 1 : -1; }

bool PElement::in_gamma() const { return det() == 1; }

mpz_class PElement::height() const {
  mpz_class h = 0;
  for (const auto& e : m_) h = std::max(h, mpz_class(abs(e)));
  return h;
}

PElement PElement::inverse() const {
  return PElement(p_, m_[3], -m_[1], -m_[2], m_[0]);  // adjugate = projective inverse
}

PElement operator*(const PElement& lhs, const PElement& rhs) {
  if (lhs.p_ != rhs.p_) throw config_error("prime contexts differ");
  return PElement(lhs.p_, lhs.m_[0] * rhs.m_[0] + lhs.m_[1] * rhs.m_[2],
                  lhs.m_[0] * rhs.m_[1] + lhs.m_[1] * rhs.m_[3],
                  lhs.m_[2] * rhs.m_[0] + lhs.m_[3] * rhs.m_[2],
                  lhs.m_[2] * rhs.m_[1] + lhs.m_[3] * rhs.m_[3]);
}

bool PElement::operator==(const PElement& o) const {
  return p_ == o.p_ && m_[0] == o.m_[0] && m_[1] == o.m_[1] && m_[2] == o.m_[2] &&
         m_[3] == o.m_[3];
}

bool PElement::operator<(const PElement& o) const {
  if (p_ != o.p_) return p_ < o.p_;
  for (int i = 0; i < 4; ++i) {
    int c = cmp(m_[i], o.m_[i]);
    if (c != 0) return c < 0;
  }
  return false;
}

std::string PElement::str() const {
  std::ostringstream os;
  os << "[[" << m_[0].get_str() << "," << m_[1].get_str() << "],[" << m_[2].get_str() << ","
     << m_[3].get_str() << "]]";
  return os.str();
}

std::pair<HPoint, cplx> moebius(const PElement& g, const HPoint& z) {
  if (g.det_sign() < 0)
    throw negative_determinant("no positive-determinant representative for " + g.str());
  cplx zz = z.z();
  cplx num = g.a().get_d() * zz + cplx(g.b().get_d());
  cplx den = g.c().get_d() * zz + cplx(g.d().get_d());
  cplx w = num / den;
  if (!std::isfinite(w.real()) || !(w.imag() > 0.0))
    throw numeric_error("moebius action left the upper half plane at z = " + std::to_string(z.x) +
                        " + " + std::to_string(z.y) + "i");
  return {HPoint(w.real(), w.imag()), den};
}

std::pair<HPoint, PElement> reduce_to_F(int p, const HPoint& z0) {
  double x = z0.x, y = z0.y;
  PElement gamma(p);
  const PElement s = PElement::gen_s(p);
  for (int it = 0; it < 100000; ++it) {
    double m = std::floor(x + 0.5);
    if (m != 0.0) {
      x -= m;
      gamma = PElement(p, 1, mpz_class(-m), 0, 1) * gamma;
    }
    double r2 = x * x + y * y;
    if (r2 < 1.0) {
      x = -x / r2;
      y = y / r2;
      gamma = s * gamma;
      continue;
    }
    if (r2 == 1.0 && x > 0.0) {
      x = -x;
      gamma = s * gamma;
    }
    return {HPoint(x, y), gamma};
  }
  throw non_convergence("fundamental domain reduction did not terminate");
}

}  // namespace hv
