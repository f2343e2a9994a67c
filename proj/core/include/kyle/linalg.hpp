#ifndef KYLE_LINALG_HPP
#define KYLE_LINALG_HPP

// Small fixed-size linear algebra used in the hot loops. Eigenvalues of 2x2
// and 3x3 matrices are computed in closed form rather than with iterative
// solvers.

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace kyle {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

/// Roots of x^3 + a x^2 + b x + c = 0. Real roots come first, sorted
/// descending; a complex-conjugate pair (if any) follows.
std::array<std::complex<double>, 3> cubic_roots(double a, double b, double c);

/// Eigenvalues of a symmetric 3x3 matrix (upper triangle is read), ascending.
std::array<double, 3> symmetric_eigenvalues(const Mat3& m);

/// Largest real part among the eigenvalues of a general 3x3 matrix.
double max_real_eigenvalue(const Mat3& m);

/// Eigenvalues of a general 3x3 matrix via the characteristic cubic.
std::array<std::complex<double>, 3> eigenvalues(const Mat3& m);

/// Eigenvalues of a general 2x2 matrix.
std::array<std::complex<double>, 2> eigenvalues(const Mat2& m);

}  // namespace kyle

#endif  // KYLE_LINALG_HPP
