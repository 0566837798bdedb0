#include "hv/cosets.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "hv/errors.hpp"

namespace hv {

namespace {

using i128 = __int128;

long long egcd_ll(long long a, long long b, long long& x, long long& y) {
  if (b == 0) {
    if (a < 0) {
      x = -1;
      y = 0;
      return -a;
    }
    x = 1;
    y = 0;
    return a;
  }
  long long x1, y1;
  long long g = egcd_ll(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

i128 floor_div_i128(i128 num, i128 den) {
  i128 q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

i128 ceil_div_i128(i128 num, i128 den) {
  i128 q = num / den;
  if ((num % den != 0) && ((num < 0) == (den < 0))) ++q;
  return q;
}

long long pow_ll(long long base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > 2000000000000000ll / base)
      throw budget_exceeded("coset class exponent too large");
    r *= base;
  }
  return r;
}

// All canonical det-one elements whose entries peak exactly at h, ordered.
std::vector<PElement> unit_det_shell(int p, long h) {
  std::vector<PElement> out;
  for (long a = -h; a <= h; ++a) {
    for (long b = -h; b <= h; ++b) {
      for (long c = -h; c <= h; ++c) {
        if (a == 0) {
          if (b * c != -1) continue;
          for (long d = -h; d <= h; ++d) {
            long top = std::max({std::labs(b), std::labs(c), std::labs(d)});
            if (top != h) continue;
            if (b < 0) continue;  // canonical sign: first nonzero entry positive
            out.emplace_back(p, a, b, c, d);
          }
          continue;
        }
        long long num = 1 + (long long)b * c;
        if (num % a != 0) continue;
        long long d = num / a;
        if (std::llabs(d) > h) continue;
        long top = std::max({std::labs(a), std::labs(b), std::labs(c), (long)std::llabs(d)});
        if (top != h) continue;
        if (a < 0) continue;
        out.emplace_back(p, a, b, c, d);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

bool height_lex_less(const PElement& a, const PElement& b) {
  mpz_class ha = a.height(), hb = b.height();
  if (ha != hb) return ha < hb;
  return a < b;
}

PElement canonical_hnf(const PElement& theta) {
  mpz_class a = theta.a(), b = theta.b(), c = theta.c(), d = theta.d();
  mpz_class det = theta.det();
  mpz_class g, x, y;
  mpz_gcdext(g.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t(), a.get_mpz_t(), c.get_mpz_t());
  mpz_class top = x * b + y * d;
  mpz_class bot = det / g;
  mpz_class absbot = abs(bot);
  mpz_class r = top % absbot;
  if (r < 0) r += absbot;
  return PElement(theta.p(), g, r, mpz_class(0), bot);
}

std::vector<PElement> right_coset_reps(const CongruenceLevel& level) {
  const FiniteQuotient& fq = level.quotient();
  const auto& mem = level.members();

  auto coset_key = [&](uint64_t g) {
    uint64_t best = ~0ull;
    for (uint64_t h : mem) best = std::min(best, fq.mul(h, g));
    return best;
  };

  std::unordered_set<uint64_t> keys;
  for (uint64_t g : fq.all()) keys.insert(coset_key(g));
  size_t want = keys.size();

  std::vector<PElement> reps;
  std::unordered_set<uint64_t> found;
  PElement id = PElement::identity(level.p());
  found.insert(coset_key(fq.reduce(id)));
  reps.push_back(id);
  for (long h = 1; h <= 256 && found.size() < want; ++h) {
    for (const PElement& g : unit_det_shell(level.p(), h)) {
      uint64_t key = coset_key(fq.reduce(g));
      if (found.insert(key).second) reps.push_back(g);
      if (found.size() == want) break;
    }
  }
  if (found.size() < want)
    throw budget_exceeded("coset lifts exceed the height search cap");
  return reps;
}

DoubleCosetDecomp double_coset_decomp(const PElement& sigma) {
  int p = sigma.p();
  int m = sigma.det_exponent();
  int s = sigma.det_sign();
  DoubleCosetDecomp out{sigma, {}};
  if (m == 0) {
    out.reps.emplace_back(p, 1, 0, 0, s);
    return out;
  }
  for (int i = m; i >= 0; --i) {
    long long A = pow_ll(p, i);
    long long D = pow_ll(p, m - i);
    for (long long b = 0; b < D; ++b) {
      if (i >= 1 && i <= m - 1 && b % p == 0) continue;  // p would divide everything
      out.reps.emplace_back(p, A, b, 0ll, s * D);
    }
  }
  std::sort(out.reps.begin(), out.reps.end(), height_lex_less);
  if ((long long)out.reps.size() != coset_degree(p, m))
    throw verification_failure("double coset decomposition has the wrong degree");
  return out;
}

int classify(const PElement& theta) { return theta.det_exponent(); }

long long coset_degree(int p, int m) {
  if (m < 0) throw config_error("negative class exponent");
  if (m == 0) return 1;
  return pow_ll(p, m - 1) * (p + 1);
}

std::map<int, long long> hecke_product(int p, int m1, int m2) {
  auto A = double_coset_decomp(PElement::diag(p, 1, mpz_class((long)pow_ll(p, m1))));
  auto B = double_coset_decomp(PElement::diag(p, 1, mpz_class((long)pow_ll(p, m2))));
  std::map<int, long long> coeff;
  std::map<int, PElement> target;
  for (const auto& a : A.reps) {
    for (const auto& b : B.reps) {
      PElement prod = a * b;
      int m = classify(prod);
      auto it = target.find(m);
      if (it == target.end())
        it = target.emplace(m, canonical_hnf(PElement::diag(p, 1, mpz_class((long)pow_ll(p, m))))).first;
      if (canonical_hnf(prod) == it->second) ++coeff[m];
    }
  }
  long long lhs = coset_degree(p, m1) * coset_degree(p, m2);
  long long rhs = 0;
  for (const auto& [m, c] : coeff) rhs += c * coset_degree(p, m);
  if (lhs != rhs)
    throw verification_failure("Hecke product coefficients fail the degree identity");
  return coeff;
}

std::vector<PElement> enumerate_coset_elements(int p, int m, int sign, long height_bound,
                                               long long max_count) {
  if (sign != 1 && sign != -1) throw config_error("det sign must be +1 or -1");
  if (height_bound < 1 || height_bound > 1000000)
    throw budget_exceeded("height bound outside the supported range");
  const long long N = sign * pow_ll(p, m);
  const long long H = height_bound;
  const bool strip_possible = (m >= 2);

  struct Row {
    long long a, b, c, d, h;
  };
  std::vector<Row> rows;

  for (long long c = -H; c <= H; ++c) {
    for (long long d = -H; d <= H; ++d) {
      if (c == 0 && d == 0) continue;
      long long x, y;
      long long g = egcd_ll(d, c, x, y);  // x d + y c = g
      if (N % g != 0) continue;
      long long mult = N / g;
      // a = x mult + t (c/g), b = -y mult + t (d/g) solves a d - b c = N
      i128 a0 = (i128)x * mult;
      i128 b0 = (i128)(-y) * mult;
      i128 sc = c / g, sd = d / g;
      i128 lo = std::numeric_limits<long long>::min();
      i128 hi = std::numeric_limits<long long>::max();
      bool empty = false;
      for (auto [base, step] : {std::pair<i128, i128>{a0, sc}, {b0, sd}}) {
        if (step == 0) {
          if (base < -H || base > H) empty = true;
          continue;
        }
        i128 l1, h1;
        if (step > 0) {
          l1 = ceil_div_i128(-H - base, step);
          h1 = floor_div_i128(H - base, step);
        } else {
          l1 = ceil_div_i128(H - base, step);
          h1 = floor_div_i128(-H - base, step);
        }
        lo = std::max(lo, l1);
        hi = std::min(hi, h1);
      }
      if (empty || lo > hi) continue;
      for (i128 t = lo; t <= hi; ++t) {
        long long a = (long long)(a0 + t * sc);
        long long b = (long long)(b0 + t * sd);
        // canonical sign: first nonzero of (a, b, c, d) positive
        long long lead = a ? a : (b ? b : (c ? c : d));
        if (lead < 0) continue;
        if (strip_possible && a % p == 0 && b % p == 0 && c % p == 0 && d % p == 0) continue;
        long long h = std::max({std::llabs(a), std::llabs(b), std::llabs(c), std::llabs(d)});
        rows.push_back({a, b, c, d, h});
        if ((long long)rows.size() > max_count)
          throw budget_exceeded("coset element enumeration exceeds max_count");
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& r, const Row& s) {
    if (r.h != s.h) return r.h < s.h;
    if (r.a != s.a) return r.a < s.a;
    if (r.b != s.b) return r.b < s.b;
    if (r.c != s.c) return r.c < s.c;
    return r.d < s.d;
  });
  std::vector<PElement> out;
  out.reserve(rows.size());
  for (const Row& r : rows) out.emplace_back(p, r.a, r.b, r.c, r.d);
  return out;
}

std::vector<PElement> enumerate_coset_elements(const CongruenceLevel& level, const PElement& g,
                                               long height_bound) {
  return enumerate_translated_elements(level, PElement::identity(g.p()), g, height_bound);
}

std::vector<PElement> enumerate_translated_elements(const CongruenceLevel& level,
                                                    const PElement& left, const PElement& right,
                                                    long height_bound) {
  if (level.p() != left.p() || level.p() != right.p())
    throw config_error("level and coset translates use different primes");
  const PElement linv = left.inverse();
  const PElement rinv = right.inverse();
  const PElement probe = left * right;
  std::vector<PElement> out;
  for (PElement& theta :
       enumerate_coset_elements(probe.p(), classify(probe), probe.det_sign(), height_bound)) {
    if (level.contains(linv * theta * rinv)) out.push_back(std::move(theta));
  }
  return out;
}

namespace {

std::string element_key(const PElement& g) {
  return g.a().get_str() + "," + g.b().get_str() + "," + g.c().get_str() + "," + g.d().get_str();
}

// Walk a coset action of Gamma to exhaustion: start labels the coset of
// sigma itself, apply(s, gen) extends the walk, and label(s) names the coset
// reached.  Returns the first factor reaching each label, in height-lex
// order.  expect is the full label set the walk must visit.
template <class Label, class Apply>
std::vector<PElement> walk_cosets(int p, const Label& label, const Apply& apply,
                                  const std::set<std::string>& expect) {
  const PElement gens[3] = {PElement(p, 1, 1, 0, 1), PElement(p, 1, -1, 0, 1),
                            PElement(p, 0, -1, 1, 0)};
  std::map<std::string, PElement> seen;
  std::vector<PElement> queue;
  PElement e = PElement::identity(p);
  seen.emplace(label(e), e);
  queue.push_back(e);
  for (size_t head = 0; head < queue.size(); ++head) {
    PElement cur = queue[head];
    for (const PElement& gen : gens) {
      PElement nxt = apply(cur, gen);
      std::string key = label(nxt);
      if (seen.count(key)) continue;
      if (seen.size() > expect.size() + 8)
        throw verification_failure("coset walk escapes the double coset");
      seen.emplace(key, nxt);
      queue.push_back(nxt);
    }
  }
  std::set<std::string> visited;
  std::vector<PElement> factors;
  for (auto& [key, s] : seen) {
    visited.insert(key);
    factors.push_back(s);
  }
  if (visited != expect)
    throw verification_failure("coset walk does not reproduce the canonical decomposition");
  std::sort(factors.begin(), factors.end(), height_lex_less);
  return factors;
}

}  // namespace

CosetIdentityReport coset_identity_check(const PElement& sigma) {
  const int p = sigma.p();
  const DoubleCosetDecomp decomp = double_coset_decomp(sigma);
  std::set<std::string> expect;
  for (const PElement& rep : decomp.reps) expect.insert(element_key(rep));

  // Gamma sigma s and Gamma sigma s' coincide exactly when their triangular
  // forms do, so the right walk is checked against the same label set as the
  // canonical left-coset list.  For the left factors the labels come from
  // inverses: r sigma Gamma determines Gamma (r sigma)^{-1} and the class is
  // closed under inversion, so the expected label set is again the same.
  CosetIdentityReport report{sigma, {}, {}};
  report.right_factors = walk_cosets(
      p, [&](const PElement& s) { return element_key(canonical_hnf(sigma * s)); },
      [](const PElement& s, const PElement& gen) { return s * gen; }, expect);
  report.left_factors = walk_cosets(
      p, [&](const PElement& r) { return element_key(canonical_hnf((r * sigma).inverse())); },
      [](const PElement& r, const PElement& gen) { return gen * r; }, expect);
  return report;
}

}  // namespace hv
