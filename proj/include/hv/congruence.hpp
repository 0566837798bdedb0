#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hv/pelement.hpp"

namespace hv {

// SL(2, Z/p^k)/{+-1} with an explicit, sorted element table.  An element is
// four residues packed 16 bits apiece into a u64, canonicalized under the
// global sign.  Tables are cached per (p, k); construction walks p^{3k}
// candidate triples, so the modulus is capped (budget_exceeded beyond it).
class FiniteQuotient {
 public:
  static std::shared_ptr<const FiniteQuotient> get(int p, int k);

  int p() const { return p_; }
  int k() const { return k_; }
  uint32_t q() const { return q_; }  // p^k
  const std::vector<uint64_t>& all() const { return all_; }
  long long order() const { return static_cast<long long>(all_.size()); }

  uint64_t pack(uint32_t a, uint32_t b, uint32_t c, uint32_t d) const;
  std::array<uint32_t, 4> unpack(uint64_t e) const;
  uint64_t mul(uint64_t x, uint64_t y) const;
  uint64_t reduce(const PElement& g) const;  // g must have det 1

 private:
  FiniteQuotient(int p, int k);
  int p_, k_;
  uint32_t q_;
  std::vector<uint64_t> all_;
};

// A finite-index subgroup of Gamma = PSL(2, Z) cut out by congruence
// conditions at p.  Membership is decided in the ambient quotient
// SL(2, Z/p^qk)/{+-1} where qk >= the defining modulus exponent; the
// sigma-intersection below needs the extra room.
class CongruenceLevel {
 public:
  static CongruenceLevel gamma(int p);
  static CongruenceLevel gamma0(int p, int k);
  static CongruenceLevel principal(int p, int k);
  // "gamma" | "gamma0:p^k" | "principal:p^k"
  static CongruenceLevel parse(int p, const std::string& label);

  int p() const { return p_; }
  int def_k() const { return def_k_; }
  int quotient_k() const { return quot_->k(); }
  const FiniteQuotient& quotient() const { return *quot_; }
  const std::vector<uint64_t>& members() const { return members_; }
  long long index() const;  // [Gamma : this]
  bool contains(const PElement& g) const;
  const std::string& label() const { return label_; }

  friend CongruenceLevel gamma_sigma(const CongruenceLevel& base, const PElement& sigma);

 private:
  CongruenceLevel() = default;
  int p_ = 2;
  int def_k_ = 0;
  std::shared_ptr<const FiniteQuotient> quot_;
  std::vector<uint64_t> members_;  // sorted
  std::string label_;
};

// base intersected with sigma * base * sigma^{-1}, described in the quotient
// modulo p^(quotient_k(base) + 2 e) where e is the det exponent of sigma.
CongruenceLevel gamma_sigma(const CongruenceLevel& base, const PElement& sigma);

}  // namespace hv
