#include "kyle/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace kyle {

namespace {

double polish_root(double x, double a, double b, double c) {
  // Two Newton steps on the undepressed cubic; skipped near multiple roots.
  for (int it = 0; it < 2; ++it) {
    const double f = ((x + a) * x + b) * x + c;
    const double df = (3.0 * x + 2.0 * a) * x + b;
    if (df == 0.0 || !std::isfinite(df)) break;
    const double step = f / df;
    if (!std::isfinite(step)) break;
    const double next = x - step;
    const double fn = ((next + a) * next + b) * next + c;
    if (std::abs(fn) >= std::abs(f)) break;
    x = next;
  }
  return x;
}

}  // namespace

std::array<std::complex<double>, 3> cubic_roots(double a, double b, double c) {
  const double shift = a / 3.0;
  const double P = b - a * a / 3.0;
  const double Q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;

  std::array<std::complex<double>, 3> roots;
  if (P == 0.0 && Q == 0.0) {
    roots.fill(std::complex<double>(-shift, 0.0));
    return roots;
  }

  const double half_q = 0.5 * Q;
  const double third_p = P / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double A = -std::copysign(std::cbrt(std::abs(half_q) + sq), half_q);
    const double B = (A != 0.0) ? -P / (3.0 * A) : 0.0;
    const double t1 = A + B;
    const double re = -0.5 * t1 - shift;
    const double im = 0.5 * std::numbers::sqrt3 * (A - B);
    roots[0] = {polish_root(t1 - shift, a, b, c), 0.0};
    roots[1] = {re, std::abs(im)};
    roots[2] = {re, -std::abs(im)};
    return roots;
  }

  const double r = std::sqrt(-third_p);
  if (r == 0.0) {
    roots.fill(std::complex<double>(-shift, 0.0));
    return roots;
  }
  const double cos3 = std::clamp(-half_q / (r * r * r), -1.0, 1.0);
  const double phi = std::acos(cos3) / 3.0;
  std::array<double, 3> real{};
  for (int k = 0; k < 3; ++k) {
    const double t = 2.0 * r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
    real[k] = polish_root(t - shift, a, b, c);
  }
  std::sort(real.begin(), real.end(), std::greater<>());
  for (int k = 0; k < 3; ++k) roots[k] = {real[k], 0.0};
  return roots;
}

std::array<double, 3> symmetric_eigenvalues(const Mat3& m) {
  const double a00 = m(0, 0), a11 = m(1, 1), a22 = m(2, 2);
  const double a01 = m(0, 1), a02 = m(0, 2), a12 = m(1, 2);
  const double off = a01 * a01 + a02 * a02 + a12 * a12;

  std::array<double, 3> eig{};
  if (off == 0.0) {
    eig = {a00, a11, a22};
    std::sort(eig.begin(), eig.end());
    return eig;
  }

  const double q = (a00 + a11 + a22) / 3.0;
  const double d0 = a00 - q, d1 = a11 - q, d2 = a22 - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off;
  const double p = std::sqrt(p2 / 6.0);
  // det((m - qI) / p) / 2
  const double b00 = d0 / p, b11 = d1 / p, b22 = d2 / p;
  const double b01 = a01 / p, b02 = a02 / p, b12 = a12 / p;
  const double detb = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) +
                      b02 * (b01 * b12 - b11 * b02);
  const double r = std::clamp(0.5 * detb, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;

  const double hi = q + 2.0 * p * std::cos(phi);
  const double lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double mid = 3.0 * q - hi - lo;
  eig = {lo, mid, hi};
  std::sort(eig.begin(), eig.end());
  return eig;
}

std::array<std::complex<double>, 3> eigenvalues(const Mat3& m) {
  const double tr = m.trace();
  const double minors = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) -
                        m(0, 2) * m(2, 0) + m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double det = m.determinant();
  return cubic_roots(-tr, minors, -det);
}

double max_real_eigenvalue(const Mat3& m) {
  // Triangular matrices (including diagonal ones) have their spectrum on the
  // diagonal; reading it off avoids the cubic's conditioning at repeated roots.
  const bool upper = m(1, 0) == 0.0 && m(2, 0) == 0.0 && m(2, 1) == 0.0;
  const bool lower = m(0, 1) == 0.0 && m(0, 2) == 0.0 && m(1, 2) == 0.0;
  if (upper || lower) return m.diagonal().maxCoeff();

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& z : eigenvalues(m)) best = std::max(best, z.real());
  return best;
}

std::array<std::complex<double>, 2> eigenvalues(const Mat2& m) {
  const double half_tr = 0.5 * m.trace();
  const double det = m.determinant();
  const double disc = half_tr * half_tr - det;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    // Larger-magnitude root first, the other from det / root for accuracy.
    const double r1 = half_tr + std::copysign(sq, half_tr == 0.0 ? 1.0 : half_tr);
    const double r2 = (r1 != 0.0) ? det / r1 : half_tr - std::copysign(sq, half_tr);
    return {std::complex<double>(r1, 0.0), std::complex<double>(r2, 0.0)};
  }
  const double im = std::sqrt(-disc);
  return {std::complex<double>(half_tr, im), std::complex<double>(half_tr, -im)};
}

}  // namespace kyle
