#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wesd/errors.hpp"

namespace wesd::detail {

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi rotations.
/// `a` is row-major n*n and is destroyed. On return `values` holds the
/// eigenvalues sorted ascending and `vectors` the matching eigenvectors as
/// rows (row i is the eigenvector of values[i]). Off-diagonal Frobenius norm
/// is driven below `tol` times the matrix scale.
inline void jacobi_eigen(std::vector<double>& a, std::size_t n,
                         std::vector<double>& values,
                         std::vector<double>& vectors, double tol = 1e-12,
                         int max_sweeps = 60) {
  require(a.size() == n * n, ErrorCode::InvalidArgument,
          "jacobi: matrix size mismatch");
  vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;
  values.assign(n, 0.0);
  if (n == 1) {
    values[0] = a[0];
    return;
  }

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    scale = std::max(scale, std::abs(a[i * n + i]));
  for (std::size_t i = 0; i < n * n; ++i) scale = std::max(scale, std::abs(a[i]));
  if (scale == 0.0) scale = 1.0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (std::sqrt(2.0 * off) <= tol * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0)
                             ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                             : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors[p * n + k];
          const double vkq = vectors[q * n + k];
          vectors[p * n + k] = c * vkp - s * vkq;
          vectors[q * n + k] = s * vkp + c * vkq;
        }
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) values[i] = a[i * n + i];

  // Sort ascending, carrying eigenvector rows along.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return values[x] < values[y];
  });
  std::vector<double> sorted_values(n);
  std::vector<double> sorted_vectors(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted_values[i] = values[order[i]];
    for (std::size_t k = 0; k < n; ++k)
      sorted_vectors[i * n + k] = vectors[order[i] * n + k];
  }
  values.swap(sorted_values);
  vectors.swap(sorted_vectors);
}

}  // namespace wesd::detail
