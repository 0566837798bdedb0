#include "hv/quadrature.hpp"

#include <map>
#include <mutex>

namespace hv {

namespace {

std::pair<double, double> legendre_and_deriv(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  double d = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, d};
}

std::vector<std::pair<double, double>> build_rule(int n) {
  std::vector<std::pair<double, double>> out(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, d] = legendre_and_deriv(n, x);
      double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    auto [p, d] = legendre_and_deriv(n, x);
    (void)p;
    double w = 2.0 / ((1.0 - x * x) * d * d);
    out[i] = {-std::abs(x), w};
    out[n - 1 - i] = {std::abs(x), w};
  }
  if (n % 2 == 1) {
    auto [p, d] = legendre_and_deriv(n, 0.0);
    (void)p;
    out[n / 2] = {0.0, 2.0 / (d * d)};
  }
  return out;
}

}  // namespace

const std::vector<std::pair<double, double>>& gauss_legendre(int n) {
  if (n < 1 || n > 64) throw config_error("rule order outside the supported range");
  static std::mutex mu;
  static std::map<int, std::vector<std::pair<double, double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

}  // namespace hv
