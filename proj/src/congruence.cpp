#include "hv/congruence.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "hv/errors.hpp"

namespace hv {

namespace {

// Largest modulus we are willing to enumerate; p^{3k} candidate triples.
constexpr uint32_t kMaxModulus = 256;

uint64_t egcd(int64_t a, int64_t b, int64_t& x, int64_t& y) {
  if (b == 0) {
    x = 1;
    y = 0;
    return static_cast<uint64_t>(a);
  }
  int64_t x1, y1;
  uint64_t g = egcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

uint32_t pow_u32(uint32_t base, int exp) {
  uint32_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

std::map<std::pair<int, int>, std::shared_ptr<const FiniteQuotient>>& registry() {
  static std::map<std::pair<int, int>, std::shared_ptr<const FiniteQuotient>> reg;
  return reg;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

uint64_t FiniteQuotient::pack(uint32_t a, uint32_t b, uint32_t c, uint32_t d) const {
  a %= q_;
  b %= q_;
  c %= q_;
  d %= q_;
  uint64_t plus = (uint64_t(a) << 48) | (uint64_t(b) << 32) | (uint64_t(c) << 16) | uint64_t(d);
  uint32_t na = (q_ - a) % q_, nb = (q_ - b) % q_, nc = (q_ - c) % q_, nd = (q_ - d) % q_;
  uint64_t minus = (uint64_t(na) << 48) | (uint64_t(nb) << 32) | (uint64_t(nc) << 16) | uint64_t(nd);
  return std::min(plus, minus);
}

std::array<uint32_t, 4> FiniteQuotient::unpack(uint64_t e) const {
  return {uint32_t(e >> 48) & 0xffffu, uint32_t(e >> 32) & 0xffffu,
          uint32_t(e >> 16) & 0xffffu, uint32_t(e) & 0xffffu};
}

uint64_t FiniteQuotient::mul(uint64_t x, uint64_t y) const {
  auto [a, b, c, d] = unpack(x);
  auto [e, f, g, h] = unpack(y);
  uint64_t m = q_;
  return pack(uint32_t((a * uint64_t(e) + b * uint64_t(g)) % m),
              uint32_t((a * uint64_t(f) + b * uint64_t(h)) % m),
              uint32_t((c * uint64_t(e) + d * uint64_t(g)) % m),
              uint32_t((c * uint64_t(f) + d * uint64_t(h)) % m));
}

uint64_t FiniteQuotient::reduce(const PElement& g) const {
  if (!g.in_gamma())
    throw config_error("reduction mod p^k needs a determinant-one element");
  mpz_class m = q_;
  uint32_t r[4];
  for (int i = 0; i < 4; ++i) {
    mpz_class e = g.entry(i) % m;
    if (e < 0) e += m;
    r[i] = static_cast<uint32_t>(e.get_ui());
  }
  return pack(r[0], r[1], r[2], r[3]);
}

FiniteQuotient::FiniteQuotient(int p, int k) : p_(p), k_(k), q_(pow_u32(uint32_t(p), k)) {
  uint64_t q3 = uint64_t(q_) * q_ * q_;
  all_.reserve(q_ == 1 ? 1 : q3 / 2 + 1);
  uint64_t m = q_;
  for (uint32_t a = 0; a < q_; ++a) {
    for (uint32_t b = 0; b < q_; ++b) {
      for (uint32_t c = 0; c < q_; ++c) {
        // a d = 1 + b c (mod q)
        uint64_t rhs = (1 + uint64_t(b) * c) % m;
        int64_t x, y;
        uint64_t g = egcd(int64_t(a), int64_t(m), x, y);
        if (g == 0) g = m;  // a == 0
        if (rhs % g != 0) continue;
        uint64_t step = m / g;
        uint64_t d0;
        if (a == 0) {
          d0 = 0;  // any d works; step is 1
          step = 1;
          g = m;
        } else {
          int64_t sol = (x % int64_t(m) + int64_t(m)) % int64_t(m);
          d0 = (uint64_t(sol) * (rhs / g)) % m;
          d0 %= step;
        }
        for (uint64_t t = 0; t < g; ++t) {
          uint64_t d = d0 + t * step;
          all_.push_back(pack(a, b, c, uint32_t(d)));
        }
      }
    }
  }
  std::sort(all_.begin(), all_.end());
  all_.erase(std::unique(all_.begin(), all_.end()), all_.end());
}

std::shared_ptr<const FiniteQuotient> FiniteQuotient::get(int p, int k) {
  if (k < 0) throw config_error("negative congruence level");
  uint32_t q = 1;
  for (int i = 0; i < k; ++i) {
    q *= uint32_t(p);
    if (q > kMaxModulus)
      throw budget_exceeded("congruence modulus p^k exceeds the enumeration cap");
  }
  std::lock_guard<std::mutex> lock(registry_mutex());
  auto& reg = registry();
  auto it = reg.find({p, k});
  if (it != reg.end()) return it->second;
  auto ptr = std::shared_ptr<const FiniteQuotient>(new FiniteQuotient(p, k));
  reg.emplace(std::make_pair(p, k), ptr);
  return ptr;
}

CongruenceLevel CongruenceLevel::gamma(int p) {
  CongruenceLevel lvl;
  lvl.p_ = p;
  lvl.def_k_ = 0;
  lvl.quot_ = FiniteQuotient::get(p, 0);
  lvl.members_ = lvl.quot_->all();
  lvl.label_ = "gamma";
  return lvl;
}

CongruenceLevel CongruenceLevel::gamma0(int p, int k) {
  if (k < 1) throw config_error("gamma0 level wants k >= 1");
  CongruenceLevel lvl;
  lvl.p_ = p;
  lvl.def_k_ = k;
  lvl.quot_ = FiniteQuotient::get(p, k);
  for (uint64_t x : lvl.quot_->all()) {
    auto e = lvl.quot_->unpack(x);
    if (e[2] == 0) lvl.members_.push_back(x);
  }
  std::ostringstream os;
  os << "gamma0:" << p << "^" << k;
  lvl.label_ = os.str();
  return lvl;
}

CongruenceLevel CongruenceLevel::principal(int p, int k) {
  if (k < 1) throw config_error("principal level wants k >= 1");
  CongruenceLevel lvl;
  lvl.p_ = p;
  lvl.def_k_ = k;
  lvl.quot_ = FiniteQuotient::get(p, k);
  lvl.members_.push_back(lvl.quot_->pack(1, 0, 0, 1));
  std::ostringstream os;
  os << "principal:" << p << "^" << k;
  lvl.label_ = os.str();
  return lvl;
}

CongruenceLevel CongruenceLevel::parse(int p, const std::string& label) {
  if (label == "gamma") return gamma(p);
  auto colon = label.find(':');
  if (colon == std::string::npos)
    throw config_error("unknown level label: " + label);
  std::string kind = label.substr(0, colon);
  std::string mod = label.substr(colon + 1);
  long base = 0, exp = 1;
  auto caret = mod.find('^');
  try {
    if (caret == std::string::npos) {
      base = std::stol(mod);
    } else {
      base = std::stol(mod.substr(0, caret));
      exp = std::stol(mod.substr(caret + 1));
    }
  } catch (const std::exception&) {
    throw config_error("bad modulus in level label: " + label);
  }
  if (base != p)
    throw config_error("level modulus must be a power of the working prime");
  if (exp < 1 || exp > 60)
    throw config_error("bad exponent in level label: " + label);
  if (kind == "gamma0") return gamma0(p, int(exp));
  if (kind == "principal") return principal(p, int(exp));
  throw config_error("unknown level label: " + label);
}

long long CongruenceLevel::index() const {
  long long full = quot_->order();
  long long part = static_cast<long long>(members_.size());
  if (part == 0 || full % part != 0)
    throw verification_failure("level member count does not divide the quotient order");
  return full / part;
}

bool CongruenceLevel::contains(const PElement& g) const {
  if (!g.in_gamma()) return false;
  uint64_t x = quot_->reduce(g);
  return std::binary_search(members_.begin(), members_.end(), x);
}

CongruenceLevel gamma_sigma(const CongruenceLevel& base, const PElement& sigma) {
  int p = base.p();
  if (sigma.p() != p) throw config_error("prime contexts differ");
  int e = sigma.det_exponent();
  int kb = base.quotient_k();
  int kk = kb + 2 * e;
  auto amb = FiniteQuotient::get(p, kk);

  mpz_class pe = 1, pkb = 1;
  for (int i = 0; i < e; ++i) pe *= p;
  for (int i = 0; i < kb; ++i) pkb *= p;
  // sigma^{-1} gamma sigma up to scalars is adj(sigma) gamma sigma / p^e;
  // membership in base needs exact divisibility by p^e, then reduction
  // mod p^kb.  Everything is well defined from gamma mod p^kk.
  const mpz_class sa = sigma.a(), sb = sigma.b(), sc = sigma.c(), sd = sigma.d();

  CongruenceLevel out;
  out.p_ = p;
  out.def_k_ = kk;
  out.quot_ = amb;
  out.label_ = "(" + base.label() + ")_sigma";

  const auto& bq = base.quotient();
  for (uint64_t x : amb->all()) {
    auto [a, b, c, d] = amb->unpack(x);
    // base membership of gamma itself
    uint64_t rx = bq.pack(uint32_t(a % bq.q()), uint32_t(b % bq.q()),
                          uint32_t(c % bq.q()), uint32_t(d % bq.q()));
    if (!std::binary_search(base.members().begin(), base.members().end(), rx)) continue;

    // A = adj(sigma) * gamma * sigma
    mpz_class ga = a, gb = b, gc = c, gd = d;
    mpz_class A0 = sd * (ga * sa + gb * sc) - sb * (gc * sa + gd * sc);
    mpz_class A1 = sd * (ga * sb + gb * sd) - sb * (gc * sb + gd * sd);
    mpz_class A2 = -sc * (ga * sa + gb * sc) + sa * (gc * sa + gd * sc);
    mpz_class A3 = -sc * (ga * sb + gb * sd) + sa * (gc * sb + gd * sd);
    if (!mpz_divisible_p(A0.get_mpz_t(), pe.get_mpz_t()) ||
        !mpz_divisible_p(A1.get_mpz_t(), pe.get_mpz_t()) ||
        !mpz_divisible_p(A2.get_mpz_t(), pe.get_mpz_t()) ||
        !mpz_divisible_p(A3.get_mpz_t(), pe.get_mpz_t()))
      continue;
    A0 /= pe;
    A1 /= pe;
    A2 /= pe;
    A3 /= pe;
    uint32_t r[4];
    mpz_class v;
    const mpz_class* As[4] = {&A0, &A1, &A2, &A3};
    for (int i = 0; i < 4; ++i) {
      v = *As[i] % pkb;
      if (v < 0) v += pkb;
      r[i] = static_cast<uint32_t>(v.get_ui());
    }
    uint64_t ry = bq.pack(r[0], r[1], r[2], r[3]);
    if (!std::binary_search(base.members().begin(), base.members().end(), ry)) continue;
    out.members_.push_back(x);
  }
  return out;
}

}  // namespace hv
