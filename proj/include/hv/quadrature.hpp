#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "hv/errors.hpp"
#include "hv/summation.hpp"

namespace hv {

// Nodes and weights of the n-point rule on [-1, 1].  Cached per order.
const std::vector<std::pair<double, double>>& gauss_legendre(int n);

struct Quad2DOptions {
  int order = 5;           // points per axis on each cell
  double rel_tol = 1e-7;   // target for the whole rectangle
  double abs_tol = 0.0;    // absolute floor added to the target
  int max_depth = 24;
  long long max_cells = 40000000;
};

struct QuadResult {
  std::complex<double> value{0.0, 0.0};
  double err = 0.0;
  long long cells = 0;
};

namespace detail {

template <class F>
std::complex<double> cell_rule(const F& f, double x0, double x1, double y0, double y1,
                               const std::vector<std::pair<double, double>>& gl) {
  double cx = 0.5 * (x0 + x1), hx = 0.5 * (x1 - x0);
  double cy = 0.5 * (y0 + y1), hy = 0.5 * (y1 - y0);
  NeumaierC acc;
  for (const auto& [tx, wx] : gl) {
    double x = cx + hx * tx;
    for (const auto& [ty, wy] : gl) {
      double y = cy + hy * ty;
      acc.add((wx * wy) * f(x, y));
    }
  }
  std::complex<double> v = acc.total() * (hx * hy);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw quadrature_failure("integrand produced a non-finite value");
  return v;
}

template <class F>
void refine_cell(const F& f, double x0, double x1, double y0, double y1, double tol_cell,
                 int depth, const Quad2DOptions& opt,
                 const std::vector<std::pair<double, double>>& gl, NeumaierC& value,
                 Neumaier& err, long long& cells) {
  if (++cells > opt.max_cells)
    throw budget_exceeded("adaptive quadrature exceeded its cell budget");
  std::complex<double> coarse = cell_rule(f, x0, x1, y0, y1, gl);
  double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
  std::complex<double> s00 = cell_rule(f, x0, xm, y0, ym, gl);
  std::complex<double> s10 = cell_rule(f, xm, x1, y0, ym, gl);
  std::complex<double> s01 = cell_rule(f, x0, xm, ym, y1, gl);
  std::complex<double> s11 = cell_rule(f, xm, x1, ym, y1, gl);
  std::complex<double> fine = s00 + s10 + s01 + s11;
  double delta = std::abs(fine - coarse);
  if (delta <= tol_cell || depth >= opt.max_depth) {
    value.add(fine);
    err.add(delta);
    return;
  }
  double quarter = 0.25 * tol_cell;
  refine_cell(f, x0, xm, y0, ym, quarter, depth + 1, opt, gl, value, err, cells);
  refine_cell(f, xm, x1, y0, ym, quarter, depth + 1, opt, gl, value, err, cells);
  refine_cell(f, x0, xm, ym, y1, quarter, depth + 1, opt, gl, value, err, cells);
  refine_cell(f, xm, x1, ym, y1, quarter, depth + 1, opt, gl, value, err, cells);
}

template <class F>
std::complex<double> line_rule(const F& f, double x0, double x1,
                               const std::vector<std::pair<double, double>>& gl) {
  double cx = 0.5 * (x0 + x1), hx = 0.5 * (x1 - x0);
  NeumaierC acc;
  for (const auto& [tx, wx] : gl) acc.add(wx * f(cx + hx * tx));
  std::complex<double> v = acc.total() * hx;
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw quadrature_failure("integrand produced a non-finite value");
  return v;
}

template <class F>
void refine_interval(const F& f, double x0, double x1, double tol_cell, int depth,
                     const Quad2DOptions& opt, const std::vector<std::pair<double, double>>& gl,
                     NeumaierC& value, Neumaier& err, long long& cells) {
  if (++cells > opt.max_cells)
    throw budget_exceeded("adaptive quadrature exceeded its cell budget");
  std::complex<double> coarse = line_rule(f, x0, x1, gl);
  double xm = 0.5 * (x0 + x1);
  std::complex<double> fine = line_rule(f, x0, xm, gl) + line_rule(f, xm, x1, gl);
  double delta = std::abs(fine - coarse);
  if (delta <= tol_cell || depth >= opt.max_depth) {
    value.add(fine);
    err.add(delta);
    return;
  }
  double half = 0.5 * tol_cell;
  refine_interval(f, x0, xm, half, depth + 1, opt, gl, value, err, cells);
  refine_interval(f, xm, x1, half, depth + 1, opt, gl, value, err, cells);
}

}  // namespace detail

// One-dimensional counterpart of integrate_rect, sharing its options and its
// fixed subdivision order.
template <class F>
QuadResult integrate_interval(const F& f, double x0, double x1, const Quad2DOptions& opt = {}) {
  if (!(x1 > x0)) throw config_error("empty integration interval");
  const auto& gl = gauss_legendre(opt.order);
  std::complex<double> probe = detail::line_rule(f, x0, x1, gl);
  double tol = opt.abs_tol + opt.rel_tol * std::max(std::abs(probe), 1e-300);
  QuadResult out;
  NeumaierC value;
  Neumaier err;
  detail::refine_interval(f, x0, x1, tol, 0, opt, gl, value, err, out.cells);
  out.value = value.total();
  out.err = err.total();
  return out;
}

// Adaptive tensor-rule integration of f(x, y) over [x0,x1] x [y0,y1].
// Subdivision order is fixed, so results are reproducible bit for bit.
template <class F>
QuadResult integrate_rect(const F& f, double x0, double x1, double y0, double y1,
                          const Quad2DOptions& opt = {}) {
  if (!(x1 > x0) || !(y1 > y0)) throw config_error("empty integration rectangle");
  const auto& gl = gauss_legendre(opt.order);
  // one probe pass to scale the relative target
  std::complex<double> probe = detail::cell_rule(f, x0, x1, y0, y1, gl);
  double scale = std::abs(probe);
  double tol = opt.abs_tol + opt.rel_tol * std::max(scale, 1e-300);
  QuadResult out;
  NeumaierC value;
  Neumaier err;
  detail::refine_cell(f, x0, x1, y0, y1, tol, 0, opt, gl, value, err, out.cells);
  out.value = value.total();
  out.err = err.total();
  return out;
}

}  // namespace hv
