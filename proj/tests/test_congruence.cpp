#include "doctest.h"

#include <algorithm>
#include <random>

#include "hv/congruence.hpp"
#include "hv/errors.hpp"
#include "hv/pelement.hpp"

using namespace hv;

namespace {

// |SL(2, Z/p^k)| = p^{3k} (1 - p^-2) for k >= 1, then identify +-1
// (a genuine identification only when the modulus exceeds 2).
long long expected_order(long long p, int k) {
  if (k == 0) return 1;
  long long q = 1;
  for (int i = 0; i < k; ++i) q *= p;
  long long sl2 = q * q * q / (p * p) * (p * p - 1);
  return (q > 2) ? sl2 / 2 : sl2;
}

PElement gamma_word(int p, std::mt19937& rng, int len) {
  PElement g = PElement::identity(p);
  PElement t = PElement::gen_t(p), s = PElement::gen_s(p);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int i = 0; i < len; ++i) {
    switch (pick(rng)) {
      case 0: g = g * t; break;
      case 1: g = g * t.inverse(); break;
      default: g = g * s; break;
    }
  }
  return g;
}

}  // namespace

TEST_CASE("quotient orders match the closed formula") {
  for (auto [p, k] : {std::pair{2, 1}, {2, 2}, {2, 3}, {2, 6},
                      {3, 1}, {3, 2}, {5, 1}, {7, 1}}) {
    auto fq = FiniteQuotient::get(p, k);
    CHECK(fq->order() == expected_order(p, k));
  }
  CHECK(FiniteQuotient::get(2, 0)->order() == 1);
}

TEST_CASE("quotient is closed under product and inverse") {
  auto fq = FiniteQuotient::get(3, 2);
  const auto& all = fq->all();
  CHECK(std::is_sorted(all.begin(), all.end()));
  CHECK(std::binary_search(all.begin(), all.end(), fq->pack(1, 0, 0, 1)));
  std::mt19937 rng(7);
  std::uniform_int_distribution<size_t> pick(0, all.size() - 1);
  for (int i = 0; i < 200; ++i) {
    uint64_t x = all[pick(rng)], y = all[pick(rng)];
    CHECK(std::binary_search(all.begin(), all.end(), fq->mul(x, y)));
    auto [a, b, c, d] = fq->unpack(x);
    uint32_t q = fq->q();
    uint64_t inv = fq->pack(d, (q - b) % q, (q - c) % q, a);
    CHECK(std::binary_search(all.begin(), all.end(), inv));
    CHECK(fq->mul(x, inv) == fq->pack(1, 0, 0, 1));
  }
}

TEST_CASE("reduction is a homomorphism on group words") {
  auto fq = FiniteQuotient::get(2, 3);
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    PElement g1 = gamma_word(2, rng, 8), g2 = gamma_word(2, rng, 8);
    CHECK(fq->mul(fq->reduce(g1), fq->reduce(g2)) == fq->reduce(g1 * g2));
  }
  CHECK_THROWS_AS((void)fq->reduce(PElement::diag(2, 1, 2)), config_error);
}

TEST_CASE("gamma0 and principal indices") {
  CHECK(CongruenceLevel::gamma(2).index() == 1);
  for (auto [p, k, want] : {std::tuple{2, 1, 3ll}, {2, 2, 6ll}, {2, 3, 12ll},
                            {3, 1, 4ll}, {3, 2, 12ll}, {5, 1, 6ll}, {7, 1, 8ll}}) {
    CHECK(CongruenceLevel::gamma0(p, k).index() == want);
  }
  for (auto [p, k] : {std::pair{2, 1}, {2, 2}, {2, 4}, {3, 1}, {3, 2}, {5, 1}}) {
    CHECK(CongruenceLevel::principal(p, k).index() == expected_order(p, k));
  }
}

TEST_CASE("membership agrees with the defining congruences") {
  auto g0 = CongruenceLevel::gamma0(2, 1);
  CHECK(g0.contains(PElement::gen_t(2)));
  CHECK_FALSE(g0.contains(PElement::gen_s(2)));
  CHECK(g0.contains(PElement(2, -1, 0, 0, -1)));
  CHECK_FALSE(g0.contains(PElement::diag(2, 1, 2)));

  auto pr = CongruenceLevel::principal(2, 2);
  CHECK(pr.contains(PElement(2, 1, 4, 4, 17)));
  CHECK(pr.contains(PElement(2, -1, -4, -8, -33)));
  CHECK_FALSE(pr.contains(PElement(2, 1, 2, 0, 1)));
  CHECK(CongruenceLevel::principal(2, 1).contains(PElement(2, 1, 2, 0, 1)));

  std::mt19937 rng(3);
  auto g09 = CongruenceLevel::gamma0(3, 2);
  for (int i = 0; i < 200; ++i) {
    PElement g = gamma_word(3, rng, 10);
    bool want = mpz_divisible_ui_p(g.c().get_mpz_t(), 9) != 0;
    CHECK(g09.contains(g) == want);
  }
}

TEST_CASE("level labels parse and round back") {
  CHECK(CongruenceLevel::parse(2, "gamma").index() == 1);
  CHECK(CongruenceLevel::parse(2, "gamma0:2^1").index() == 3);
  CHECK(CongruenceLevel::parse(3, "gamma0:3^2").index() == 12);
  CHECK(CongruenceLevel::parse(2, "principal:2^2").index() == 24);
  CHECK(CongruenceLevel::parse(2, "principal:2^2").label() == "principal:2^2");
  CHECK_THROWS_AS(CongruenceLevel::parse(2, "gamma0:3^1"), config_error);
  CHECK_THROWS_AS(CongruenceLevel::parse(2, "borel:2^1"), config_error);
  CHECK_THROWS_AS(CongruenceLevel::parse(2, "gamma0:x"), config_error);
}

TEST_CASE("sigma intersection at full level matches the closed form") {
  // sigma = diag(1, p): conjugation sends [[a,b],[c,d]] to [[a, pb],[c/p, d]],
  // so the intersection with Gamma is exactly gamma0(p).  Same for the
  // det-p antidiagonal element.
  std::mt19937 rng(17);
  for (int p : {2, 3, 5}) {
    auto base = CongruenceLevel::gamma(p);
    auto gs = gamma_sigma(base, PElement::diag(p, 1, p));
    CHECK(gs.index() == p + 1);
    auto g0 = CongruenceLevel::gamma0(p, 1);
    for (int i = 0; i < 100; ++i) {
      PElement g = gamma_word(p, rng, 9);
      CHECK(gs.contains(g) == g0.contains(g));
    }
    auto fricke = gamma_sigma(base, PElement(p, 0, -1, p, 0));
    CHECK(fricke.index() == p + 1);
    for (int i = 0; i < 50; ++i) {
      PElement g = gamma_word(p, rng, 9);
      CHECK(fricke.contains(g) == g0.contains(g));
    }
  }
  for (int p : {2, 3}) {
    auto gs2 = gamma_sigma(CongruenceLevel::gamma(p), PElement::diag(p, 1, p * p));
    CHECK(gs2.index() == p * (p + 1));
    auto g02 = CongruenceLevel::gamma0(p, 2);
    for (int i = 0; i < 100; ++i) {
      PElement g = gamma_word(p, rng, 10);
      CHECK(gs2.contains(g) == g02.contains(g));
    }
  }
}

TEST_CASE("sigma intersection below gamma0 deepens the congruence") {
  auto base = CongruenceLevel::gamma0(2, 1);
  auto gs = gamma_sigma(base, PElement::diag(2, 1, 2));
  CHECK(gs.index() == 6);  // = [Gamma : gamma0(2^2)]
  auto g04 = CongruenceLevel::gamma0(2, 2);
  std::mt19937 rng(23);
  for (int i = 0; i < 150; ++i) {
    PElement g = gamma_word(2, rng, 10);
    CHECK(gs.contains(g) == g04.contains(g));
  }
  // nesting: intersecting once more reaches gamma0(2^2) relative to gamma
  auto gs2 = gamma_sigma(gs, PElement::diag(2, 1, 2));
  CHECK(gs2.index() == 12);  // = [Gamma : gamma0(2^3)]
}

TEST_CASE("principal-level sigma intersections stabilize") {
  // [Gamma(p^k) : Gamma(p^k)_sigma] = p for every k >= 1 once sigma = diag(1,p):
  // the only extra condition is one more power of p on the lower-left entry.
  for (int k = 1; k <= 4; ++k) {
    auto base = CongruenceLevel::principal(2, k);
    auto gs = gamma_sigma(base, PElement::diag(2, 1, 2));
    CHECK(gs.index() % base.index() == 0);
    CHECK(gs.index() / base.index() == 2);
  }
  for (int k = 1; k <= 2; ++k) {
    auto base = CongruenceLevel::principal(3, k);
    auto gs = gamma_sigma(base, PElement::diag(3, 1, 3));
    CHECK(gs.index() / base.index() == 3);
  }
}

TEST_CASE("sigma intersection members really form a group") {
  auto gs = gamma_sigma(CongruenceLevel::gamma0(2, 1), PElement::diag(2, 1, 2));
  const auto& fq = gs.quotient();
  const auto& mem = gs.members();
  CHECK(std::is_sorted(mem.begin(), mem.end()));
  std::mt19937 rng(29);
  std::uniform_int_distribution<size_t> pick(0, mem.size() - 1);
  for (int i = 0; i < 300; ++i) {
    uint64_t prod = fq.mul(mem[pick(rng)], mem[pick(rng)]);
    CHECK(std::binary_search(mem.begin(), mem.end(), prod));
  }
}

TEST_CASE("modulus cap reports a budget error") {
  CHECK_THROWS_AS(FiniteQuotient::get(2, 16), budget_exceeded);
  CHECK_THROWS_AS(CongruenceLevel::gamma0(257, 2), budget_exceeded);
}
