#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wesd/errors.hpp"
#include "wesd/geometry.hpp"

namespace wesd {

/// Discrete negative Dirichlet Laplacian of a BinaryDomain, restricted to the
/// foreground unknowns (background and grid exterior are eliminated as zero
/// boundary values). Symmetric positive definite, compressed-row storage,
/// rows ordered lexicographically by (z, y, x).
class SparseOperator {
 public:
  SparseOperator(std::size_t order, std::vector<std::size_t> row_offsets,
                 std::vector<std::uint32_t> cols, std::vector<double> vals,
                 std::vector<std::size_t> cell_of_row, int dim, double volume,
                 std::array<double, 3> spacing)
      : order_(order),
        row_offsets_(std::move(row_offsets)),
        cols_(std::move(cols)),
        vals_(std::move(vals)),
        cell_of_row_(std::move(cell_of_row)),
        dim_(dim),
        volume_(volume),
        spacing_(spacing) {}

  std::size_t order() const noexcept { return order_; }
  std::size_t nonzeros() const noexcept { return vals_.size(); }
  const std::vector<std::size_t>& row_offsets() const noexcept {
    return row_offsets_;
  }
  const std::vector<std::uint32_t>& cols() const noexcept { return cols_; }
  const std::vector<double>& values() const noexcept { return vals_; }
  const std::vector<std::size_t>& cell_of_row() const noexcept {
    return cell_of_row_;
  }

  // Provenance of the source domain, carried so spectra can record it.
  int dim() const noexcept { return dim_; }
  double domain_volume() const noexcept { return volume_; }
  const std::array<double, 3>& spacing() const noexcept { return spacing_; }

  double entry(std::size_t i, std::size_t j) const {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      if (cols_[k] == j) return vals_[k];
    return 0.0;
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < order_; ++i) {
      double acc = 0.0;
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        acc += vals_[k] * x[cols_[k]];
      y[i] = acc;
    }
  }

  /// Largest row sum of absolute values: a cheap upper bound on the spectrum.
  double gershgorin_upper() const {
    double best = 0.0;
    for (std::size_t i = 0; i < order_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        s += std::abs(vals_[k]);
      best = std::max(best, s);
    }
    return best;
  }

  /// Matrix Market coordinate dump (symmetric, lower triangle, 1-based).
  void write_matrix_market(std::ostream& out) const {
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    std::size_t lower = 0;
    for (std::size_t i = 0; i < order_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        if (cols_[k] <= i) ++lower;
    out << order_ << ' ' << order_ << ' ' << lower << '\n';
    char buf[64];
    for (std::size_t i = 0; i < order_; ++i) {
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        if (cols_[k] > i) continue;
        std::snprintf(buf, sizeof(buf), "%zu %u %.17g\n", i + 1, cols_[k] + 1,
                      vals_[k]);
        out << buf;
      }
    }
  }

 private:
  std::size_t order_;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;
  std::vector<std::size_t> cell_of_row_;
  int dim_;
  double volume_;
  std::array<double, 3> spacing_;
};

/// Assembles the 5-point (2D) / 7-point (3D) finite-difference stencil over
/// the foreground cells. Missing neighbours contribute nothing off-diagonal,
/// which is exactly the homogeneous Dirichlet condition.
inline SparseOperator assemble(const BinaryDomain& dom) {
  const auto& ext = dom.extents();
  const auto& h = dom.spacing();
  const int d = dom.dim();
  const std::size_t cells = dom.cell_count();

  constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);
  std::vector<std::size_t> row_of_cell(cells, kNoRow);
  std::vector<std::size_t> cell_of_row;
  cell_of_row.reserve(dom.foreground_count());
  for (std::size_t c = 0; c < cells; ++c) {
    if (dom.mask()[c]) {
      row_of_cell[c] = cell_of_row.size();
      cell_of_row.push_back(c);
    }
  }
  const std::size_t n = cell_of_row.size();
  require(n > 0, ErrorCode::EmptyForeground, "cannot assemble empty domain");
  require(n <= 0xffffffffu, ErrorCode::InvalidArgument,
          "foreground too large for 32-bit column indices");

  std::array<double, 3> inv_h2{};
  double diag = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    inv_h2[axis] = 1.0 / (h[axis] * h[axis]);
    diag += 2.0 * inv_h2[axis];
  }
  const std::array<long, 3> stride{
      1, static_cast<long>(ext[0]),
      static_cast<long>(ext[0]) * static_cast<long>(ext[1])};

  std::vector<std::size_t> row_offsets(n + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  cols.reserve(n * (2 * d + 1));
  vals.reserve(n * (2 * d + 1));

  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t c = cell_of_row[row];
    std::array<std::size_t, 3> p;
    p[0] = c % ext[0];
    p[1] = (c / ext[0]) % ext[1];
    p[2] = c / (ext[0] * ext[1]);

    // Columns emitted in ascending order: low neighbours, diagonal, high.
    for (int axis = d - 1; axis >= 0; --axis) {
      if (p[axis] > 0) {
        const std::size_t q = c - static_cast<std::size_t>(stride[axis]);
        if (row_of_cell[q] != kNoRow) {
          cols.push_back(static_cast<std::uint32_t>(row_of_cell[q]));
          vals.push_back(-inv_h2[axis]);
        }
      }
    }
    cols.push_back(static_cast<std::uint32_t>(row));
    vals.push_back(diag);
    for (int axis = 0; axis < d; ++axis) {
      if (p[axis] + 1 < ext[axis]) {
        const std::size_t q = c + static_cast<std::size_t>(stride[axis]);
        if (row_of_cell[q] != kNoRow) {
          cols.push_back(static_cast<std::uint32_t>(row_of_cell[q]));
          vals.push_back(-inv_h2[axis]);
        }
      }
    }
    row_offsets[row + 1] = cols.size();
  }

  return SparseOperator(n, std::move(row_offsets), std::move(cols),
                        std::move(vals), std::move(cell_of_row), d,
                        volume(dom), h);
}

}  // namespace wesd
