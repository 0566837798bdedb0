#include "hv/basis.hpp"

#include <cmath>
#include <vector>

#include "hv/errors.hpp"
#include "hv/repmatrix.hpp"

namespace hv {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kUTop = 1.1547005383792517;  // 2/sqrt(3), max of 1/y on F

struct DictIndex {
  int a, b;  // T_a in x times T_b in u, total degree a+b
};

// ordered by the weighted degree 3a+b, a descending inside a diagonal, so
// index m is the same entry for every dictionary length of at least m+1;
// the weight favors 1/y resolution, which is where the holomorphic modes
// concentrate their structure
std::vector<DictIndex> dictionary(int D) {
  std::vector<DictIndex> idx;
  idx.reserve(static_cast<size_t>(D));
  for (int d = 0; static_cast<int>(idx.size()) < D; ++d)
    for (int a = d / 3; a >= 0 && static_cast<int>(idx.size()) < D; --a)
      idx.push_back({a, d - 3 * a});
  return idx;
}

// all dictionary polynomial values at (x, u): Chebyshev in 2x and in the
// shifted u variable, combined per index; the u^(n/2) weight is separate
void dict_poly_values(const std::vector<DictIndex>& idx, double x, double u, double* out) {
  int deg = 0;
  for (const DictIndex& di : idx) deg = std::max({deg, di.a, di.b});
  double tx[64], tu[64];
  double xi = 2.0 * x, su = 2.0 * u / kUTop - 1.0;
  tx[0] = 1.0;
  tu[0] = 1.0;
  if (deg >= 1) {
    tx[1] = xi;
    tu[1] = su;
  }
  for (int j = 2; j <= deg; ++j) {
    tx[j] = 2.0 * xi * tx[j - 1] - tx[j - 2];
    tu[j] = 2.0 * su * tu[j - 1] - tu[j - 2];
  }
  for (size_t m = 0; m < idx.size(); ++m) out[m] = tx[idx[m].a] * tu[idx[m].b];
}

// Gauss-Legendre rule on [-1, 1]
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<size_t>(m), 0.0);
  weights.assign(static_cast<size_t>(m), 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 64; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
      }
      pp = m * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<size_t>(i)] = -x;
    nodes[static_cast<size_t>(m - 1 - i)] = x;
    weights[static_cast<size_t>(i)] = weights[static_cast<size_t>(m - 1 - i)] =
        2.0 / ((1.0 - x * x) * pp * pp);
  }
}

double u_upper(double x) { return 1.0 / std::sqrt(1.0 - x * x); }

// Gram matrix of the dictionary polynomials against dx du over the truncated
// fundamental domain, on an nx-by-nt tensor rule.  The u^(n/2) weights of a
// pair of dictionary entries cancel the y^(n-2) dx dy measure exactly, so
// the weight never appears here.
Eigen::MatrixXd dict_gram(const std::vector<DictIndex>& idx, double u_min, int nx, int nt) {
  const int D = static_cast<int>(idx.size());
  std::vector<double> xn, xw, tn, tw;
  gauss_legendre(nx, xn, xw);
  gauss_legendre(nt, tn, tw);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(D, D);
  std::vector<double> vals(static_cast<size_t>(D));
  for (int i = 0; i < nx; ++i) {
    double x = 0.5 * xn[static_cast<size_t>(i)];
    double span = u_upper(x) - u_min;
    for (int j = 0; j < nt; ++j) {
      double t = 0.5 * (tn[static_cast<size_t>(j)] + 1.0);
      double u = u_min + t * span;
      double w = 0.25 * xw[static_cast<size_t>(i)] * tw[static_cast<size_t>(j)] * span;
      dict_poly_values(idx, x, u, vals.data());
      for (int a = 0; a < D; ++a)
        for (int b = a; b < D; ++b)
          G(a, b) += w * vals[static_cast<size_t>(a)] * vals[static_cast<size_t>(b)];
    }
  }
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < a; ++b) G(a, b) = G(b, a);
  return G;
}

}  // namespace

GalerkinBasis build_basis(int n, int D, const TraceSpec& q) {
  check_weight(n);
  if (D < 1 || D > 256) throw config_error("basis dimension must lie in [1, 256]");
  if (!(q.y_max >= 2.0)) throw config_error("y_max must be at least 2");
  const double u_min = 1.0 / q.y_max;
  const auto idx = dictionary(D);

  Eigen::MatrixXd G = dict_gram(idx, u_min, 96, 96);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kConditionLimit)
    throw ill_conditioned("dictionary Gram matrix is numerically singular");

  GalerkinBasis basis;
  basis.n = n;
  basis.D = D;
  basis.y_max = q.y_max;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  basis.coeff = llt.matrixL().transpose().solve(Eigen::MatrixXd::Identity(D, D));

  // re-integrate the Gram of the finished frame on a different rule
  Eigen::MatrixXd H = dict_gram(idx, u_min, 117, 123);
  Eigen::MatrixXd R = basis.coeff.transpose() * H * basis.coeff;
  basis.gram_residual = (R - Eigen::MatrixXd::Identity(D, D)).norm();
  return basis;
}

double GalerkinBasis::eval(int b, const HPoint& z) const {
  if (b < 0 || b >= D) throw config_error("basis index out of range");
  std::vector<double> out(static_cast<size_t>(D));
  eval_all(z, out.data());
  return out[static_cast<size_t>(b)];
}

void GalerkinBasis::eval_all(const HPoint& z, double* out) const {
  if (!(z.y > 0.0)) throw config_error("evaluation point must have positive height");
  const auto idx = dictionary(D);
  const double u = 1.0 / z.y;
  std::vector<double> vals(static_cast<size_t>(D));
  dict_poly_values(idx, z.x, u, vals.data());
  double weight = std::pow(u, n / 2);
  for (int b = 0; b < D; ++b) {
    double acc = 0.0;
    for (int m = 0; m <= b; ++m) acc += coeff(m, b) * vals[static_cast<size_t>(m)];
    out[b] = weight * acc;
  }
}

Eigen::MatrixXcd basis_disc_overlaps(const GalerkinBasis& basis, int K) {
  check_weight(basis.n);
  if (K < 1 || K > 1024) throw config_error("mode count must lie in [1, 1024]");
  const int n = basis.n, D = basis.D;
  const auto idx = dictionary(D);
  const double u_min = 1.0 / basis.y_max;

  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(K, D);
  std::vector<double> dict(static_cast<size_t>(D)), fvals(static_cast<size_t>(D));
  std::vector<cplx> ek(static_cast<size_t>(K));
  std::vector<double> bhat(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) bhat[static_cast<size_t>(k)] = bergman_basis_norm(n, k);

  // shared accumulation for one chart node at (x, u) carrying weight w
  auto accumulate = [&](double x, double u, double w) {
    const double y = 1.0 / u;
    const cplx zi{x, y + 1.0};
    const cplx wdisc = cplx{x, y - 1.0} / zi;
    const cplx base = cpow_int(zi, -n);
    cplx wk{1.0, 0.0};
    for (int k = 0; k < K; ++k) {
      ek[static_cast<size_t>(k)] = bhat[static_cast<size_t>(k)] * wk * base;
      wk *= wdisc;
    }
    dict_poly_values(idx, x, u, dict.data());
    for (int b = 0; b < D; ++b) {
      double acc = 0.0;
      for (int m = 0; m <= b; ++m) acc += basis.coeff(m, b) * dict[static_cast<size_t>(m)];
      fvals[static_cast<size_t>(b)] = acc;
    }
    // the integrand against y^(n-2) dx dy becomes conj(e_k) f_b u^(n/2-n) du dx
    // once f_b's u^(n/2) weight is split off; fold the measure into e_k here
    const double meas = w * std::pow(u, n / 2 - n);
    for (int k = 0; k < K; ++k) {
      const cplx ekw = std::conj(ek[static_cast<size_t>(k)]) * meas;
      for (int b = 0; b < D; ++b) X(k, b) += ekw * fvals[static_cast<size_t>(b)];
    }
  };

  // bulk chart: u in [split, u_upper(x)], polynomial-smooth
  const double split = std::min(0.2, 0.5 * kUTop);
  std::vector<double> xn, xw, tn, tw, sn, sw;
  gauss_legendre(140, xn, xw);
  gauss_legendre(140, tn, tw);
  for (size_t i = 0; i < xn.size(); ++i) {
    double x = 0.5 * xn[i];
    double span = u_upper(x) - split;
    for (size_t j = 0; j < tn.size(); ++j) {
      double t = 0.5 * (tn[j] + 1.0);
      accumulate(x, split + t * span, 0.25 * xw[i] * tw[j] * span);
    }
  }
  // cusp chart in s = log u: the disc modes form layers at u ~ 1/k, all of
  // width O(1) in s
  if (u_min < split) {
    gauss_legendre(140, sn, sw);
    const double s_lo = std::log(u_min), s_hi = std::log(split);
    for (size_t i = 0; i < xn.size(); ++i) {
      double x = 0.5 * xn[i];
      for (size_t j = 0; j < sn.size(); ++j) {
        double s = s_lo + 0.5 * (sn[j] + 1.0) * (s_hi - s_lo);
        double u = std::exp(s);
        accumulate(x, u, 0.25 * xw[i] * sw[j] * (s_hi - s_lo) * u);
      }
    }
  }
  return X;
}

}  // namespace hv
