#include "hv/regular_rep.hpp"

#include "hv/errors.hpp"

namespace hv {

namespace {

long long pow_ll(long long base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

RegularBall::RegularBall(int p, int radius, int sign) : p_(p), radius_(radius), sign_(sign) {
  if (radius < 0 || radius > 12) throw config_error("ball radius outside the supported range");
  if (sign != 1 && sign != -1) throw config_error("det sign must be +1 or -1");
  for (int m = 0; m <= radius; ++m) {
    auto dec = double_coset_decomp(PElement::diag(p, 1, mpz_class(sign * (long)pow_ll(p, m))));
    for (const auto& r : dec.reps) {
      index_.emplace(r, static_cast<int>(vertices_.size()));
      vertices_.push_back(r);
      depths_.push_back(m);
    }
  }
}

int RegularBall::find(const PElement& theta) const {
  auto it = index_.find(canonical_hnf(theta));
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::vector<long long>> regular_rep_matrix(const RegularBall& ball, int m) {
  auto dec = double_coset_decomp(PElement::diag(ball.p(), 1, mpz_class((long)pow_ll(ball.p(), m))));
  int n = ball.size();
  std::vector<std::vector<long long>> A(n, std::vector<long long>(n, 0));
  for (int v = 0; v < n; ++v) {
    for (const auto& tau : dec.reps) {
      int w = ball.find(tau * ball.vertices()[v]);
      if (w >= 0) ++A[v][w];
    }
  }
  return A;
}

std::vector<int> interior_rows(const RegularBall& ball, int w) {
  std::vector<int> rows;
  for (int v = 0; v < ball.size(); ++v)
    if (ball.depth(v) + w <= ball.radius()) rows.push_back(v);
  return rows;
}

}  // namespace hv
