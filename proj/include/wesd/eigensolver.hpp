#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wesd/detail/symmetric_eigen.hpp"
#include "wesd/errors.hpp"
#include "wesd/geometry.hpp"
#include "wesd/laplacian.hpp"

namespace wesd {

enum class Normalisation { Raw, Volume, FirstEigenvalue };

inline const char* normalisation_name(Normalisation n) {
  switch (n) {
    case Normalisation::Raw: return "raw";
    case Normalisation::Volume: return "volume";
    case Normalisation::FirstEigenvalue: return "first-eigenvalue";
  }
  return "raw";
}

inline Normalisation normalisation_from_name(const std::string& s) {
  if (s == "raw") return Normalisation::Raw;
  if (s == "volume") return Normalisation::Volume;
  if (s == "first-eigenvalue") return Normalisation::FirstEigenvalue;
  fail(ErrorCode::ParseError, "unknown normalisation tag '" + s + "'");
}

struct SolverStats {
  int requested_modes = 0;
  double tol = 0.0;
  int iterations = 0;
};

constexpr int kDefaultModes = 200;
constexpr double kDefaultTol = 1e-8;
constexpr std::uint64_t kDefaultSeed = 0x5eed5eed5eedULL;

/// Ordered positive eigenvalue sequence with provenance: source dimension,
/// volume and spacing, plus the normalisation applied so far. Immutable.
class Spectrum {
 public:
  Spectrum(std::vector<double> values, int dim, double volume,
           std::vector<double> spacing = {},
           Normalisation tag = Normalisation::Raw, SolverStats solver = {})
      : values_(std::move(values)),
        dim_(dim),
        volume_(volume),
        spacing_(std::move(spacing)),
        tag_(tag),
        solver_(solver) {
    require(dim_ == 2 || dim_ == 3, ErrorCode::UnsupportedDimension,
            "spectrum dimension must be 2 or 3");
    require(!values_.empty(), ErrorCode::InvalidArgument,
            "spectrum must contain at least one eigenvalue");
    require(volume_ > 0.0 && std::isfinite(volume_), ErrorCode::InvalidArgument,
            "spectrum volume must be positive");
    double prev = 0.0;
    for (double v : values_) {
      require(std::isfinite(v) && v > 0.0, ErrorCode::InvalidArgument,
              "eigenvalues must be positive and finite");
      require(v >= prev, ErrorCode::InvalidArgument,
              "eigenvalues must be nondecreasing");
      prev = v;
    }
    if (tag_ == Normalisation::FirstEigenvalue)
      require(values_.front() == 1.0, ErrorCode::InvalidArgument,
              "first-eigenvalue normalised spectrum must start at 1");
    if (spacing_.empty()) spacing_.assign(static_cast<std::size_t>(dim_), 1.0);
    require(spacing_.size() == static_cast<std::size_t>(dim_),
            ErrorCode::InvalidArgument, "spacing must carry one value per axis");
  }

  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  int dim() const noexcept { return dim_; }
  double volume() const noexcept { return volume_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }
  Normalisation tag() const noexcept { return tag_; }
  const SolverStats& solver() const noexcept { return solver_; }

 private:
  std::vector<double> values_;
  int dim_;
  double volume_;
  std::vector<double> spacing_;
  Normalisation tag_;
  SolverStats solver_;
};

inline double weyl_asymptote(int n, int dim, double volume) {
  require(n >= 1, ErrorCode::InvalidArgument, "mode index must be >= 1");
  require(volume > 0.0, ErrorCode::InvalidArgument, "volume must be positive");
  const double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
  return four_pi_sq *
         std::pow(static_cast<double>(n) / (unit_ball_volume(dim) * volume),
                  2.0 / dim);
}

inline Spectrum normalize(const Spectrum& spec, Normalisation mode) {
  require(mode != Normalisation::Raw, ErrorCode::InvalidArgument,
          "cannot normalise to raw");
  require(spec.tag() == Normalisation::Raw, ErrorCode::InvalidArgument,
          "double normalisation: spectrum already carries tag '" +
              std::string(normalisation_name(spec.tag())) + "'");
  std::vector<double> out(spec.values());
  if (mode == Normalisation::Volume) {
    const double factor = std::pow(spec.volume(), 2.0 / spec.dim());
    for (double& v : out) v *= factor;
  } else {
    const double lambda1 = out.front();
    for (double& v : out) v /= lambda1;
    out.front() = 1.0;
  }
  return Spectrum(std::move(out), spec.dim(), spec.volume(), spec.spacing(),
                  mode, spec.solver());
}

namespace detail {

struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform_pm1() {
    return 2.0 * (static_cast<double>(next() >> 11) * 0x1.0p-53) - 1.0;
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

/// Scaled Chebyshev polynomial of the operator, damping [low, high] and
/// normalised to 1 at the origin. Turns the smallest eigenvalues of an SPD
/// operator into the dominant, well-separated ones.
struct ChebyshevFilter {
  const SparseOperator* op = nullptr;
  double low = 0.0, high = 0.0;
  int degree = 0;
  mutable std::vector<double> t0, t1, t2;

  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = op->order();
    const double e = 0.5 * (high - low);
    const double c = 0.5 * (high + low);
    t0.assign(x.begin(), x.end());
    t1.resize(n);
    t2.resize(n);
    // sigma recurrence keeps intermediate magnitudes bounded.
    double sigma = e / (0.0 - c);
    const double sigma1 = sigma;
    op->multiply(t0, t1);
    for (std::size_t i = 0; i < n; ++i)
      t1[i] = (t1[i] - c * t0[i]) * (sigma1 / e);
    for (int j = 2; j <= degree; ++j) {
      const double sigma_next = 1.0 / (2.0 / sigma1 - sigma);
      op->multiply(t1, t2);
      for (std::size_t i = 0; i < n; ++i)
        t2[i] = 2.0 * (sigma_next / e) * (t2[i] - c * t1[i]) -
                (sigma * sigma_next) * t0[i];
      t0.swap(t1);
      t1.swap(t2);
      sigma = sigma_next;
    }
    std::copy(t1.begin(), t1.end(), y.begin());
  }
};

/// Thick-restart Lanczos with full reorthogonalization. The recursion runs on
/// `filter` when one is set (the polynomial shares eigenvectors with the
/// operator), while Ritz values, residuals and convergence are always taken
/// against the operator itself.
class LanczosEngine {
 public:
  LanczosEngine(const SparseOperator& op, int nev, double tol,
                std::uint64_t seed, int budget)
      : op_(op), n_(op.order()), nev_(nev), tol_(tol), rng_(seed),
        budget_(budget) {}

  struct Result {
    std::vector<double> values;
    int iterations = 0;
  };

  Result run() {
    const bool full = n_ <= static_cast<std::size_t>(3 * nev_ + 40);
    if (!full) {
      probe();
      setup_filter();
    }
    m_max_ = full ? n_
                  : std::min(n_, static_cast<std::size_t>(
                                     std::max(2 * nev_ + 10, 60)));
    keep_ = static_cast<std::size_t>(nev_ + std::max(10, nev_ / 2));
    if (m_max_ > 6) keep_ = std::min(keep_, m_max_ - 5);
    keep_ = std::max(keep_, static_cast<std::size_t>(nev_));

    basis_.assign((m_max_ + 1) * n_, 0.0);
    t_.assign(m_max_ * m_max_, 0.0);
    m_ = 0;
    lead_.resize(n_);
    random_lead();

    while (true) {
      const bool grew = expand_step();
      const bool basis_full = m_ == m_max_ || !grew;
      const bool out_of_budget = steps_ >= budget_;
      if (!basis_full && !out_of_budget) continue;

      ritz();
      if (converged()) break;
      require(!out_of_budget, ErrorCode::NonConvergence,
              "eigensolver: " + std::to_string(nev_) +
                  " modes not converged within " + std::to_string(budget_) +
                  " Lanczos steps (worst residual " +
                  std::to_string(worst_residual_) + ", tol " +
                  std::to_string(tol_) + ")");
      if (!grew && m_ == n_) {
        // Full space spanned; Ritz values are exact, re-check with slack.
        require(converged(), ErrorCode::NonConvergence,
                "eigensolver: stagnated with exhausted basis");
        break;
      }
      restart();
    }

    Result r;
    r.values.assign(cand_values_.begin(), cand_values_.begin() + nev_);
    r.iterations = steps_;
    for (double v : r.values)
      require(v > 0.0, ErrorCode::InvalidArgument,
              "operator is not positive definite: nonpositive Ritz value");
    return r;
  }

 private:
  std::span<double> row(std::size_t i) { return {basis_.data() + i * n_, n_}; }
  std::span<const double> row(std::size_t i) const {
    return {basis_.data() + i * n_, n_};
  }

  void apply_operator(std::span<const double> x, std::span<double> y) {
    if (filter_.op != nullptr)
      filter_.apply(x, y);
    else
      op_.multiply(x, y);
  }

  void random_fill(std::span<double> v) {
    for (double& x : v) x = rng_.uniform_pm1();
  }

  // Two-pass classical Gram-Schmidt against rows [0, m); returns the
  // accumulated coefficients of the first `record` rows in `coeff`.
  void orthogonalize(std::span<double> w, std::vector<double>& coeff) {
    coeff.assign(m_, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < m_; ++j) {
        const double c = dot(row(j), w);
        coeff[j] += c;
        axpy(-c, row(j), w);
      }
    }
  }

  void random_lead() {
    std::vector<double> coeff;
    for (int attempt = 0; attempt < 64; ++attempt) {
      random_fill(lead_);
      orthogonalize(lead_, coeff);
      const double nrm = norm2(lead_);
      if (nrm > 1e-8 * std::sqrt(static_cast<double>(n_))) {
        for (double& x : lead_) x /= nrm;
        return;
      }
    }
    fail(ErrorCode::NonConvergence,
         "eigensolver: could not draw a new orthogonal direction");
  }

  // Appends the lead vector, applies the operator and orthogonalizes the
  // image, recording the projection coefficients as a new row/column of the
  // projected matrix. Returns false when the Krylov space is exhausted.
  bool expand_step() {
    std::copy(lead_.begin(), lead_.end(), row(m_).begin());
    ++m_;
    ++steps_;

    std::vector<double> w(n_);
    apply_operator(row(m_ - 1), w);
    const double image_norm = norm2(w);
    std::vector<double> coeff;
    orthogonalize(w, coeff);
    for (std::size_t j = 0; j < m_; ++j) {
      t_[(m_ - 1) * m_max_ + j] = coeff[j];
      t_[j * m_max_ + (m_ - 1)] = coeff[j];
    }
    beta_ = norm2(w);

    if (m_ == n_) return false;
    if (beta_ > 1e-13 * std::max(image_norm, 1e-300)) {
      for (std::size_t i = 0; i < n_; ++i) lead_[i] = w[i] / beta_;
    } else {
      beta_ = 0.0;  // invariant subspace: continue from a fresh direction
      random_lead();
    }
    return true;
  }

  // Rayleigh-Ritz on the projected matrix; candidates are re-measured
  // against the operator itself (Rayleigh quotient + explicit residual).
  void ritz() {
    std::vector<double> tm(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < m_; ++j) tm[i * m_ + j] = t_[i * m_max_ + j];
    symmetric_eigen(tm, m_, theta_, s_);

    // Order wanted-first: ascending for the plain operator, descending for
    // the filtered one (the filter maps smallest to largest).
    wanted_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i)
      wanted_[i] = filter_.op ? m_ - 1 - i : i;

    const std::size_t n_cand =
        std::min<std::size_t>(m_, static_cast<std::size_t>(nev_) +
                                      std::min<std::size_t>(10, m_));
    cand_values_.assign(n_cand, 0.0);
    cand_residuals_.assign(n_cand, 0.0);
    cand_vectors_.assign(n_cand * n_, 0.0);
    std::vector<double> ax(n_);
    for (std::size_t c = 0; c < n_cand; ++c) {
      const double* s_row = s_.data() + wanted_[c] * m_;
      double* x = cand_vectors_.data() + c * n_;
      for (std::size_t j = 0; j < m_; ++j)
        axpy(s_row[j], row(j), {x, n_});
      const double xn = norm2({x, n_});
      for (std::size_t i = 0; i < n_; ++i) x[i] /= xn;
      op_.multiply({x, n_}, ax);
      const double rq = dot({x, n_}, ax);
      axpy(-rq, {x, n_}, ax);
      cand_values_[c] = rq;
      cand_residuals_[c] = norm2(ax) / std::max(std::abs(rq), 1e-300);
    }

    // Sort candidates by operator Rayleigh quotient.
    std::vector<std::size_t> order(n_cand);
    for (std::size_t i = 0; i < n_cand; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cand_values_[a] < cand_values_[b];
    });
    std::vector<double> v2(n_cand), r2(n_cand), x2(n_cand * n_);
    for (std::size_t i = 0; i < n_cand; ++i) {
      v2[i] = cand_values_[order[i]];
      r2[i] = cand_residuals_[order[i]];
      std::copy_n(cand_vectors_.data() + order[i] * n_, n_, x2.data() + i * n_);
    }
    cand_values_.swap(v2);
    cand_residuals_.swap(r2);
    cand_vectors_.swap(x2);
  }

  bool converged() {
    if (cand_values_.size() < static_cast<std::size_t>(nev_)) return false;
    worst_residual_ = 0.0;
    for (int i = 0; i < nev_; ++i)
      worst_residual_ = std::max(worst_residual_, cand_residuals_[i]);
    return worst_residual_ <= tol_;
  }

  // Wu-Simon thick restart: keep the best Ritz vectors plus the current lead
  // direction; their couplings re-enter through the next orthogonalization.
  void restart() {
    const std::size_t k = std::min<std::size_t>(keep_, m_ > 2 ? m_ - 2 : m_);
    std::vector<double> fresh(k * n_, 0.0);
    std::vector<double> kept_theta(k);
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t idx = wanted_[c];
      kept_theta[c] = theta_[idx];
      const double* s_row = s_.data() + idx * m_;
      double* dst = fresh.data() + c * n_;
      for (std::size_t j = 0; j < m_; ++j)
        axpy(s_row[j], row(j), {dst, n_});
    }
    std::fill(t_.begin(), t_.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      double* dst = basis_.data() + c * n_;
      std::copy_n(fresh.data() + c * n_, n_, dst);
      // Light re-orthonormalization against the previous kept rows.
      for (std::size_t j = 0; j < c; ++j) {
        const double g = dot(row(j), row(c));
        axpy(-g, row(j), row(c));
      }
      const double nrm = norm2(row(c));
      for (std::size_t i = 0; i < n_; ++i) dst[i] /= nrm;
      t_[c * m_max_ + c] = kept_theta[c];
    }
    m_ = k;
    // The lead direction is already orthogonal to the kept span in exact
    // arithmetic; re-orthogonalize and renormalize to be safe.
    std::vector<double> coeff;
    orthogonalize(lead_, coeff);
    const double nrm = norm2(lead_);
    if (nrm > 1e-10) {
      for (double& x : lead_) x /= nrm;
    } else {
      random_lead();
    }
  }

  void probe() {
    const int budget_share = std::max(budget_ / 3, 15);
    const std::size_t steps = std::min(
        n_, static_cast<std::size_t>(
                std::min(std::max(2 * nev_ + 20, 40), budget_share)));
    m_max_ = steps;
    keep_ = steps;
    basis_.assign((steps + 1) * n_, 0.0);
    t_.assign(steps * steps, 0.0);
    m_ = 0;
    lead_.resize(n_);
    random_lead();
    for (std::size_t i = 0; i < steps; ++i)
      if (!expand_step()) break;
    std::vector<double> tm(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < m_; ++j) tm[i * m_ + j] = t_[i * m_max_ + j];
    std::vector<double> vec;
    symmetric_eigen(tm, m_, probe_theta_, vec);
  }

  void setup_filter() {
    const double upper = op_.gershgorin_upper() * (1.0 + 1e-12) + 1e-300;
    const std::size_t idx =
        std::min<std::size_t>(static_cast<std::size_t>(nev_) - 1,
                              probe_theta_.size() - 1);
    double cutoff = probe_theta_[idx] * 1.1;
    cutoff = std::min(cutoff, 0.9 * upper);
    cutoff = std::max(cutoff, 1e-8 * upper);
    if (cutoff >= 0.85 * upper) return;  // spectrum too tight to filter

    const double l0 = (upper + cutoff) / (upper - cutoff);
    const int q = static_cast<int>(
        std::ceil(std::acosh(1e8) / std::acosh(std::max(l0, 1.0 + 1e-12))));
    filter_.op = &op_;
    filter_.low = cutoff;
    filter_.high = upper;
    filter_.degree = std::clamp(q, 6, 300);
  }

  const SparseOperator& op_;
  std::size_t n_;
  int nev_;
  double tol_;
  SplitMix64 rng_;
  int budget_;

  ChebyshevFilter filter_{};
  std::size_t m_max_ = 0, keep_ = 0, m_ = 0;
  std::vector<double> basis_, t_, lead_;
  double beta_ = 0.0;
  int steps_ = 0;

  std::vector<double> probe_theta_;
  std::vector<double> theta_, s_;
  std::vector<std::size_t> wanted_;
  std::vector<double> cand_values_, cand_residuals_, cand_vectors_;
  double worst_residual_ = 0.0;
};

}  // namespace detail

/// Computes the N smallest eigenvalues of a symmetric positive definite
/// operator to the requested relative residual. Deterministic for a fixed
/// seed; the iteration budget is 50 steps per requested mode.
inline Spectrum smallest_eigenvalues(const SparseOperator& op, int n_modes,
                                     double tol = kDefaultTol,
                                     std::uint64_t seed = kDefaultSeed) {
  require(n_modes >= 1, ErrorCode::InvalidArgument,
          "at least one mode must be requested");
  require(static_cast<std::size_t>(n_modes) <= op.order(),
          ErrorCode::InvalidArgument,
          "requested " + std::to_string(n_modes) + " modes from operator of order " +
              std::to_string(op.order()));
  require(tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");

  detail::LanczosEngine engine(op, n_modes, tol, seed, 50 * n_modes);
  auto result = engine.run();
  std::sort(result.values.begin(), result.values.end());

  SolverStats stats{n_modes, tol, result.iterations};
  std::vector<double> spacing(op.spacing().begin(),
                              op.spacing().begin() + op.dim());
  return Spectrum(std::move(result.values), op.dim(), op.domain_volume(),
                  std::move(spacing), Normalisation::Raw, stats);
}

/// Spectrum cache file: UTF-8 text, all reals printed with 17 significant
/// digits so a round trip is lossless.
inline void save_spectrum(const Spectrum& spec, std::ostream& out) {
  char buf[64];
  out << "wesd spectrum cache v1\n";
  out << "dimension " << spec.dim() << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", spec.volume());
  out << "volume " << buf << "\n";
  out << "spacing";
  for (double h : spec.spacing()) {
    std::snprintf(buf, sizeof(buf), "%.17g", h);
    out << ' ' << buf;
  }
  out << "\n";
  out << "normalisation " << normalisation_name(spec.tag()) << "\n";
  out << "modes " << spec.solver().requested_modes << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", spec.solver().tol);
  out << "tol " << buf << "\n";
  out << "iterations " << spec.solver().iterations << "\n";
  out << "eigenvalues " << spec.size() << "\n";
  for (double v : spec.values()) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << "\n";
  }
}

inline void save_spectrum(const Spectrum& spec,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoError,
          "cannot open '" + path.string() + "' for writing");
  save_spectrum(spec, out);
  require(out.good(), ErrorCode::IoError, "write failed: " + path.string());
}

inline Spectrum load_spectrum(std::istream& in) {
  auto expect_key = [&](const char* key) -> std::string {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError,
            std::string("spectrum cache: missing '") + key + "' line");
    const std::string prefix = std::string(key) + " ";
    require(line.rfind(prefix, 0) == 0, ErrorCode::ParseError,
            std::string("spectrum cache: expected '") + key + "', got '" +
                line + "'");
    return line.substr(prefix.size());
  };

  std::string header;
  require(static_cast<bool>(std::getline(in, header)), ErrorCode::ParseError,
          "spectrum cache: empty file");
  require(header == "wesd spectrum cache v1", ErrorCode::ParseError,
          "spectrum cache: unrecognized header '" + header + "'");

  const int dim = std::stoi(expect_key("dimension"));
  const double volume = std::stod(expect_key("volume"));
  std::istringstream sp(expect_key("spacing"));
  std::vector<double> spacing;
  double h;
  while (sp >> h) spacing.push_back(h);
  const Normalisation tag = normalisation_from_name(expect_key("normalisation"));
  SolverStats stats;
  stats.requested_modes = std::stoi(expect_key("modes"));
  stats.tol = std::stod(expect_key("tol"));
  stats.iterations = std::stoi(expect_key("iterations"));
  const std::size_t count =
      static_cast<std::size_t>(std::stoul(expect_key("eigenvalues")));
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError,
            "spectrum cache: truncated eigenvalue list");
    values[i] = std::stod(line);
  }
  return Spectrum(std::move(values), dim, volume, std::move(spacing), tag,
                  stats);
}

inline Spectrum load_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return load_spectrum(in);
}

}  // namespace wesd
