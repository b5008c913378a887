#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <complex>
#include <vector>

#include "pointdos/types.hpp"

namespace pointdos::quad {

/// Gauss-Legendre rule on [-1,1], nodes computed once per order and cached.
struct GLRule {
  std::vector<double> x;
  std::vector<double> w;
};

const GLRule& gauss_legendre(int n);

template <class F>
auto gl_integrate(F&& f, double a, double b, int n) -> decltype(f(0.0)) {
  const GLRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  decltype(f(0.0)) acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rule.w[i] * f(mid + half * rule.x[i]);
  return acc * half;
}

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-12) {
  namespace bq = boost::math::quadrature;
  double err = 0.0;
  double v = bq::gauss_kronrod<double, 31>::integrate(f, a, b, 14, tol, &err);
  return v;
}

template <class F>
Complex integrate_c(F&& f, double a, double b, double tol = 1e-12) {
  double re = integrate([&](double t) { return f(t).real(); }, a, b, tol);
  double im = integrate([&](double t) { return f(t).imag(); }, a, b, tol);
  return {re, im};
}

/// Integral over [a, inf).
template <class F>
double integrate_to_inf(F&& f, double a, double tol = 1e-12) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double t) { return f(a + t); }, tol);
}

}  // namespace pointdos::quad
