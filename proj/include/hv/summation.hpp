#pragma once

#include <complex>

namespace hv {

// Neumaier's compensated sum: robust to terms larger than the running total.
class Neumaier {
 public:
  void add(double x) {
    double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  double total() const { return s_ + c_; }

 private:
  double s_ = 0.0, c_ = 0.0;
};

class NeumaierC {
 public:
  void add(std::complex<double> z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  std::complex<double> total() const { return {re_.total(), im_.total()}; }

 private:
  Neumaier re_, im_;
};

}  // namespace hv
