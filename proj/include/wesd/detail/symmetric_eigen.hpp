#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wesd/errors.hpp"

namespace wesd::detail {

/// Full eigendecomposition of a dense symmetric matrix via Householder
/// tridiagonalization followed by implicit-shift QL. `a` is row-major n*n
/// and is destroyed. Output matches jacobi_eigen: ascending eigenvalues,
/// eigenvectors as rows. O(n^3) with a small constant; used for the
/// projected matrices inside the Lanczos engine.
inline void symmetric_eigen(std::vector<double>& a, std::size_t n,
                            std::vector<double>& values,
                            std::vector<double>& vectors) {
  require(a.size() == n * n, ErrorCode::InvalidArgument,
          "symmetric_eigen: matrix size mismatch");
  values.assign(n, 0.0);
  vectors.assign(n * n, 0.0);
  if (n == 0) return;
  if (n == 1) {
    values[0] = a[0];
    vectors[0] = 1.0;
    return;
  }

  std::vector<double> d(n, 0.0), e(n, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };

  // Householder reduction to tridiagonal form, transforms accumulated in a.
  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (std::size_t k = 0; k <= l; ++k) scale += std::abs(at(i, k));
      if (scale == 0.0) {
        e[i] = at(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          at(i, k) /= scale;
          h += at(i, k) * at(i, k);
        }
        double f = at(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        at(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          at(j, i) = at(i, j) / h;
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += at(j, k) * at(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += at(k, j) * at(i, k);
          e[j] = g / h;
          f += e[j] * at(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = at(i, j);
          e[j] = g = e[j] - hh * f;
          for (std::size_t k = 0; k <= j; ++k)
            at(j, k) -= f * e[k] + g * at(i, k);
        }
      }
    } else {
      e[i] = at(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      for (std::size_t j = 0; j < i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k < i; ++k) g += at(i, k) * at(k, j);
        for (std::size_t k = 0; k < i; ++k) at(k, j) -= g * at(k, i);
      }
    }
    d[i] = at(i, i);
    at(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) at(j, i) = at(i, j) = 0.0;
  }

  // Implicit-shift QL on the tridiagonal, rotating the accumulated columns.
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    int iterations = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= 1e-300 || std::abs(e[m]) <= 2.3e-16 * dd) break;
      }
      if (m != l) {
        require(iterations++ < 64, ErrorCode::NonConvergence,
                "symmetric_eigen: QL sweep limit reached");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (std::size_t i1 = m; i1-- > l;) {
          double f = s * e[i1];
          const double b = c * e[i1];
          r = std::hypot(f, g);
          e[i1 + 1] = r;
          if (r == 0.0) {
            d[i1 + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i1 + 1] - p;
          r = (d[i1] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i1 + 1] = g + p;
          g = c * r - b;
          for (std::size_t k = 0; k < n; ++k) {
            f = at(k, i1 + 1);
            at(k, i1 + 1) = s * at(k, i1) + c * f;
            at(k, i1) = c * at(k, i1) - s * f;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  // Sort ascending; emit eigenvectors as rows.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = d[order[i]];
    for (std::size_t k = 0; k < n; ++k)
      vectors[i * n + k] = at(k, order[i]);
  }
}

}  // namespace wesd::detail
