#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wesd/errors.hpp"

namespace wesd {

/// A d-dimensional binary voxel mask with physical spacing. Cells are stored
/// x-fastest, then y, then z; the third axis collapses to extent 1 in 2D.
/// Foreground cells form the object; everything outside the grid counts as
/// background (homogeneous Dirichlet exterior).
class BinaryDomain {
 public:
  BinaryDomain(int dim, std::array<std::size_t, 3> extents,
               std::array<double, 3> spacing, std::vector<std::uint8_t> mask,
               std::string identifier = {})
      : dim_(dim),
        extents_(extents),
        spacing_(spacing),
        mask_(std::move(mask)),
        identifier_(std::move(identifier)) {
    require(dim_ == 2 || dim_ == 3, ErrorCode::UnsupportedDimension,
            "domain dimension must be 2 or 3, got " + std::to_string(dim_));
    if (dim_ == 2) {
      extents_[2] = 1;
      spacing_[2] = 1.0;
    }
    std::size_t cells = 1;
    for (int axis = 0; axis < 3; ++axis) {
      require(extents_[axis] > 0, ErrorCode::InvalidArgument,
              "grid extent must be positive");
      cells *= extents_[axis];
    }
    require(mask_.size() == cells, ErrorCode::InvalidArgument,
            "mask length " + std::to_string(mask_.size()) +
                " does not match grid with " + std::to_string(cells) + " cells");
    for (int axis = 0; axis < dim_; ++axis) {
      require(std::isfinite(spacing_[axis]) && spacing_[axis] > 0.0,
              ErrorCode::InvalidArgument, "spacing must be positive and finite");
    }
    std::size_t count = 0;
    for (std::uint8_t v : mask_) count += (v != 0);
    require(count > 0, ErrorCode::EmptyForeground,
            "domain has no foreground cells");
    foreground_count_ = count;
  }

  int dim() const noexcept { return dim_; }
  const std::array<std::size_t, 3>& extents() const noexcept { return extents_; }
  const std::array<double, 3>& spacing() const noexcept { return spacing_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  const std::string& identifier() const noexcept { return identifier_; }
  std::size_t foreground_count() const noexcept { return foreground_count_; }
  std::size_t cell_count() const noexcept { return mask_.size(); }

  std::size_t linear_index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + extents_[0] * (y + extents_[1] * z);
  }

  bool foreground(std::size_t x, std::size_t y, std::size_t z) const {
    return mask_[linear_index(x, y, z)] != 0;
  }

  /// Geometric equality: same dimension, extents, spacing and mask bits.
  /// Identifiers are labels and do not participate.
  friend bool operator==(const BinaryDomain& a, const BinaryDomain& b) {
    return a.dim_ == b.dim_ && a.extents_ == b.extents_ &&
           a.spacing_ == b.spacing_ && a.mask_ == b.mask_;
  }

 private:
  int dim_;
  std::array<std::size_t, 3> extents_;
  std::array<double, 3> spacing_;
  std::vector<std::uint8_t> mask_;
  std::string identifier_;
  std::size_t foreground_count_ = 0;
};

/// Grid isometry: axis permutation, per-axis flips, integer translation.
/// New-grid axis i reads from source axis perm[i]; flips mirror within the
/// permuted extent; translation moves content afterwards. Round trips through
/// inverse() are bit-exact whenever the forward application needs no grid
/// enlargement (always true for pure symmetries and in-grid translations).
struct GridIsometry {
  std::array<int, 3> perm{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};
  std::array<long, 3> shift{0, 0, 0};

  static GridIsometry identity() { return {}; }

  /// 2D quarter-turn: axis swap followed by a flip of the new x axis.
  static GridIsometry rotation90_xy() {
    GridIsometry g;
    g.perm = {1, 0, 2};
    g.flip = {true, false, false};
    return g;
  }

  static GridIsometry flip_axis(int axis) {
    GridIsometry g;
    g.flip[axis] = true;
    return g;
  }

  static GridIsometry translation(long dx, long dy, long dz = 0) {
    GridIsometry g;
    g.shift = {dx, dy, dz};
    return g;
  }

  bool valid(int dim) const {
    std::array<bool, 3> seen{false, false, false};
    for (int i = 0; i < 3; ++i) {
      if (perm[i] < 0 || perm[i] > 2 || seen[perm[i]]) return false;
      seen[perm[i]] = true;
      if (i >= dim && (perm[i] != i || flip[i] || shift[i] != 0)) return false;
    }
    return true;
  }

  GridIsometry inverse() const {
    GridIsometry inv;
    for (int i = 0; i < 3; ++i) {
      inv.perm[perm[i]] = i;
      inv.flip[perm[i]] = flip[i];
      inv.shift[perm[i]] = -shift[i];
    }
    // Undoing "permute+flip then translate" needs the reverse translation
    // first; expressing it in the same order means carrying the shift through
    // the inverse permutation/flip, where a flipped axis reverses direction.
    for (int i = 0; i < 3; ++i) {
      if (flip[i]) inv.shift[perm[i]] = shift[i];
    }
    return inv;
  }
};

inline double volume(const BinaryDomain& dom) {
  double cell = 1.0;
  for (int axis = 0; axis < dom.dim(); ++axis) cell *= dom.spacing()[axis];
  return static_cast<double>(dom.foreground_count()) * cell;
}

/// Total measure of exposed foreground faces (perimeter in 2D, surface area
/// in 3D). Faces against the grid edge count as exposed.
inline double surface_measure(const BinaryDomain& dom) {
  const auto& ext = dom.extents();
  const auto& h = dom.spacing();
  const int d = dom.dim();
  std::array<double, 3> face_area;
  for (int axis = 0; axis < 3; ++axis) {
    double a = 1.0;
    for (int other = 0; other < d; ++other)
      if (other != axis) a *= h[other];
    face_area[axis] = a;
  }
  double total = 0.0;
  for (std::size_t z = 0; z < ext[2]; ++z) {
    for (std::size_t y = 0; y < ext[1]; ++y) {
      for (std::size_t x = 0; x < ext[0]; ++x) {
        if (!dom.foreground(x, y, z)) continue;
        const std::array<std::size_t, 3> p{x, y, z};
        for (int axis = 0; axis < d; ++axis) {
          for (int dir = -1; dir <= 1; dir += 2) {
            std::array<std::size_t, 3> q = p;
            bool outside = false;
            if (dir < 0) {
              if (q[axis] == 0) outside = true;
              else --q[axis];
            } else {
              if (q[axis] + 1 >= ext[axis]) outside = true;
              else ++q[axis];
            }
            if (outside || !dom.foreground(q[0], q[1], q[2]))
              total += face_area[axis];
          }
        }
      }
    }
  }
  return total;
}

inline BinaryDomain apply_isometry(const BinaryDomain& dom,
                                   const GridIsometry& iso) {
  require(iso.valid(dom.dim()), ErrorCode::InvalidArgument,
          "isometry is not a valid grid symmetry for this dimension");
  const auto& ext = dom.extents();

  std::array<std::size_t, 3> new_ext;
  std::array<double, 3> new_spacing;
  for (int i = 0; i < 3; ++i) {
    new_ext[i] = ext[iso.perm[i]];
    new_spacing[i] = dom.spacing()[iso.perm[i]];
  }

  // Pass 1: transformed foreground coordinates and their bounding range.
  std::array<long, 3> lo{0, 0, 0};
  std::array<long, 3> hi;
  for (int i = 0; i < 3; ++i) hi[i] = static_cast<long>(new_ext[i]) - 1;
  std::vector<std::array<long, 3>> cells;
  cells.reserve(dom.foreground_count());
  for (std::size_t z = 0; z < ext[2]; ++z) {
    for (std::size_t y = 0; y < ext[1]; ++y) {
      for (std::size_t x = 0; x < ext[0]; ++x) {
        if (!dom.foreground(x, y, z)) continue;
        const std::array<long, 3> src{static_cast<long>(x),
                                      static_cast<long>(y),
                                      static_cast<long>(z)};
        std::array<long, 3> dst;
        for (int i = 0; i < 3; ++i) {
          long c = src[iso.perm[i]];
          if (iso.flip[i]) c = static_cast<long>(new_ext[i]) - 1 - c;
          dst[i] = c + iso.shift[i];
          lo[i] = std::min(lo[i], dst[i]);
          hi[i] = std::max(hi[i], dst[i]);
        }
        cells.push_back(dst);
      }
    }
  }

  // Grid auto-enlarges to hold translated content; an anchor below zero
  // re-bases the frame (round-trip exactness is then not guaranteed).
  std::array<std::size_t, 3> out_ext;
  for (int i = 0; i < 3; ++i)
    out_ext[i] = static_cast<std::size_t>(hi[i] - lo[i] + 1);
  if (dom.dim() == 2) out_ext[2] = 1;

  std::vector<std::uint8_t> out_mask(out_ext[0] * out_ext[1] * out_ext[2], 0);
  for (const auto& c : cells) {
    const std::size_t x = static_cast<std::size_t>(c[0] - lo[0]);
    const std::size_t y = static_cast<std::size_t>(c[1] - lo[1]);
    const std::size_t z = static_cast<std::size_t>(c[2] - lo[2]);
    out_mask[x + out_ext[0] * (y + out_ext[1] * z)] = 1;
  }
  return BinaryDomain(dom.dim(), out_ext, new_spacing, std::move(out_mask),
                      dom.identifier());
}

inline double unit_ball_volume(int dim) {
  if (dim == 2) return std::numbers::pi;
  if (dim == 3) return 4.0 * std::numbers::pi / 3.0;
  fail(ErrorCode::UnsupportedDimension,
       "unit ball volume defined only for d=2,3, got " + std::to_string(dim));
}

enum class MaskFormat { Auto, Pgm, Pbm, Bvox };

namespace detail {

inline int pnm_next_token(std::istream& in, std::string& token) {
  token.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {  // comment runs to end of line
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) return 1;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token.empty() ? 0 : 1;
}

inline long pnm_next_int(std::istream& in, const char* what) {
  std::string tok;
  require(pnm_next_token(in, tok) == 1, ErrorCode::ParseError,
          std::string("unexpected end of header while reading ") + what);
  try {
    std::size_t pos = 0;
    long v = std::stol(tok, &pos);
    require(pos == tok.size(), ErrorCode::ParseError,
            std::string("malformed integer '") + tok + "' for " + what);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError,
         std::string("malformed integer '") + tok + "' for " + what);
  }
}

inline BinaryDomain load_pnm(std::istream& in, const std::string& magic,
                             int threshold, const std::string& identifier) {
  const long width = pnm_next_int(in, "width");
  const long height = pnm_next_int(in, "height");
  require(width > 0 && height > 0, ErrorCode::ParseError,
          "non-positive image extents");
  const std::size_t cells =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint8_t> mask(cells, 0);

  if (magic == "P1") {
    for (std::size_t i = 0; i < cells; ++i) {
      long v = pnm_next_int(in, "pixel");
      require(v == 0 || v == 1, ErrorCode::ParseError, "P1 pixel must be 0 or 1");
      mask[i] = static_cast<std::uint8_t>(v != 0);
    }
  } else if (magic == "P2") {
    const long maxval = pnm_next_int(in, "maxval");
    require(maxval > 0 && maxval < 65536, ErrorCode::ParseError,
            "invalid PGM maxval");
    for (std::size_t i = 0; i < cells; ++i) {
      long v = pnm_next_int(in, "pixel");
      require(v >= 0 && v <= maxval, ErrorCode::ParseError,
              "pixel value out of range");
      mask[i] = static_cast<std::uint8_t>(v > threshold);
    }
  } else if (magic == "P4") {
    // pnm_next_int consumed the single whitespace ending the header
    const std::size_t row_bytes = (static_cast<std::size_t>(width) + 7) / 8;
    std::vector<char> row(row_bytes);
    for (long y = 0; y < height; ++y) {
      in.read(row.data(), static_cast<std::streamsize>(row_bytes));
      require(static_cast<std::size_t>(in.gcount()) == row_bytes,
              ErrorCode::ParseError, "truncated P4 raster");
      for (long x = 0; x < width; ++x) {
        const unsigned byte = static_cast<unsigned char>(row[x / 8]);
        const bool bit = (byte >> (7 - (x % 8))) & 1u;
        mask[static_cast<std::size_t>(y) * width + x] =
            static_cast<std::uint8_t>(bit);
      }
    }
  } else if (magic == "P5") {
    const long maxval = pnm_next_int(in, "maxval");
    require(maxval > 0 && maxval < 65536, ErrorCode::ParseError,
            "invalid PGM maxval");
    const int bytes_per = maxval > 255 ? 2 : 1;
    std::vector<char> buf(cells * bytes_per);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    require(static_cast<std::size_t>(in.gcount()) == buf.size(),
            ErrorCode::ParseError, "truncated P5 raster");
    for (std::size_t i = 0; i < cells; ++i) {
      long v;
      if (bytes_per == 1) {
        v = static_cast<unsigned char>(buf[i]);
      } else {
        v = (static_cast<long>(static_cast<unsigned char>(buf[2 * i])) << 8) |
            static_cast<unsigned char>(buf[2 * i + 1]);
      }
      mask[i] = static_cast<std::uint8_t>(v > threshold);
    }
  } else {
    fail(ErrorCode::ParseError, "unsupported PNM magic '" + magic + "'");
  }

  return BinaryDomain(2, {static_cast<std::size_t>(width),
                          static_cast<std::size_t>(height), 1},
                      {1.0, 1.0, 1.0}, std::move(mask), identifier);
}

inline BinaryDomain load_bvox(std::istream& in, const std::string& identifier) {
  std::string header;
  require(static_cast<bool>(std::getline(in, header)), ErrorCode::ParseError,
          "missing bvox header line");
  std::istringstream hs(header);
  std::string magic;
  long nx = 0, ny = 0, nz = 0;
  double hx = 0, hy = 0, hz = 0;
  hs >> magic >> nx >> ny >> nz >> hx >> hy >> hz;
  require(!hs.fail() && magic == "BVOX", ErrorCode::ParseError,
          "malformed bvox header: '" + header + "'");
  require(nx > 0 && ny > 0 && nz > 0, ErrorCode::ParseError,
          "bvox extents must be positive");
  require(hx > 0 && hy > 0 && hz > 0, ErrorCode::ParseError,
          "bvox spacings must be positive");
  const std::size_t cells = static_cast<std::size_t>(nx) *
                            static_cast<std::size_t>(ny) *
                            static_cast<std::size_t>(nz);
  std::vector<char> buf(cells);
  in.read(buf.data(), static_cast<std::streamsize>(cells));
  require(static_cast<std::size_t>(in.gcount()) == cells, ErrorCode::ParseError,
          "truncated bvox payload");
  std::vector<std::uint8_t> mask(cells);
  for (std::size_t i = 0; i < cells; ++i)
    mask[i] = static_cast<std::uint8_t>(buf[i] != 0);
  return BinaryDomain(3, {static_cast<std::size_t>(nx),
                          static_cast<std::size_t>(ny),
                          static_cast<std::size_t>(nz)},
                      {hx, hy, hz}, std::move(mask), identifier);
}

}  // namespace detail

/// Reads a binary mask from PGM/PBM (2D) or bvox (3D). Grayscale values above
/// `threshold` count as foreground; PBM and bvox treat any nonzero sample as
/// foreground. Image formats default to unit spacing, bvox carries its own.
inline BinaryDomain load_domain(std::istream& in, MaskFormat format,
                                int threshold = 127,
                                const std::string& identifier = {}) {
  if (format == MaskFormat::Auto || format == MaskFormat::Bvox) {
    // Sniff the magic without consuming it.
    const auto pos = in.tellg();
    std::string magic;
    in >> magic;
    in.clear();
    in.seekg(pos);
    if (magic == "BVOX") return detail::load_bvox(in, identifier);
    require(format == MaskFormat::Auto, ErrorCode::ParseError,
            "expected bvox magic, found '" + magic + "'");
  }
  std::string magic;
  require(detail::pnm_next_token(in, magic) == 1, ErrorCode::ParseError,
          "empty input");
  if (format == MaskFormat::Pgm)
    require(magic == "P2" || magic == "P5", ErrorCode::ParseError,
            "expected PGM magic P2/P5, found '" + magic + "'");
  if (format == MaskFormat::Pbm)
    require(magic == "P1" || magic == "P4", ErrorCode::ParseError,
            "expected PBM magic P1/P4, found '" + magic + "'");
  return detail::load_pnm(in, magic, threshold, identifier);
}

inline BinaryDomain load_domain(const std::filesystem::path& path,
                                MaskFormat format = MaskFormat::Auto,
                                int threshold = 127) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return load_domain(in, format, threshold, path.stem().string());
}

}  // namespace wesd
