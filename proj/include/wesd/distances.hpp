#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wesd/eigensolver.hpp"
#include "wesd/errors.hpp"
#include "wesd/geometry.hpp"

namespace wesd {

enum class Metric { Wesd, Nwesd, ShapeDna };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::Wesd: return "wesd";
    case Metric::Nwesd: return "nwesd";
    case Metric::ShapeDna: return "shapedna";
  }
  return "wesd";
}

inline Metric metric_from_name(const std::string& s) {
  if (s == "wesd") return Metric::Wesd;
  if (s == "nwesd") return Metric::Nwesd;
  if (s == "shapedna" || s == "shape-dna") return Metric::ShapeDna;
  fail(ErrorCode::ParseError, "unknown metric '" + s + "'");
}

/// Norm exponent used in the experiments: 1.5 in 2D, 2 in 3D.
inline double default_norm_exponent(int dim) { return dim == 2 ? 1.5 : 2.0; }

struct DistanceParams {
  double p = 2.0;
  int modes = kDefaultModes;
  Metric metric = Metric::Wesd;

  static DistanceParams for_dim(int dim, Metric metric = Metric::Wesd,
                                int modes = kDefaultModes) {
    return {default_norm_exponent(dim), modes, metric};
  }
};

/// Riemann zeta for real s > 1, via direct summation of the first 20 terms
/// and an Euler-Maclaurin tail correction. Absolute error below 1e-12 on the
/// admitted domain s >= 1 + 1e-6.
inline double riemann_zeta(double s) {
  constexpr double kEps = 1e-6;
  require(s > 1.0 + kEps, ErrorCode::InvalidArgument,
          "zeta requires s > 1 + 1e-6");
  constexpr int kDirect = 20;
  double sum = 0.0;
  for (int n = 1; n <= kDirect; ++n) sum += std::pow(n, -s);
  const double m = kDirect;
  sum += std::pow(m, 1.0 - s) / (s - 1.0);
  sum -= 0.5 * std::pow(m, -s);
  // Bernoulli corrections B2, B4, B6, B8, B10.
  static constexpr double kBernoulli[5] = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0,
                                           -1.0 / 30.0, 5.0 / 66.0};
  double rising = s;              // s (s+1) ... (s+2k-2)
  double factorial = 2.0;         // (2k)!
  double power = std::pow(m, -s - 1.0);
  for (int k = 1; k <= 5; ++k) {
    sum += kBernoulli[k - 1] / factorial * rising * power;
    rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
    factorial *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    power /= m * m;
  }
  return sum;
}

namespace detail {

/// zeta(s) - 1 - (1/2)^s: the tail sum over modes n >= 3.
inline double zeta_tail_from_three(double s) {
  return riemann_zeta(s) - 1.0 - std::pow(0.5, s);
}

/// Partial sum over n = 3..N of n^{-s}.
inline double partial_tail_sum(int n_modes, double s) {
  double sum = 0.0;
  for (int n = 3; n <= n_modes; ++n) sum += std::pow(n, -s);
  return sum;
}

inline double wesd_kernel(double lambda, double xi) {
  return std::abs(lambda - xi) / (lambda * xi);
}

}  // namespace detail

/// Influence of replacing the n-th mode on the m-th heat-trace derivative:
/// m = 0 recovers the WESD kernel |l-x|/(l x), m = 2 the shape-DNA kernel
/// |l - x|.
inline double mode_influence(double lambda, double xi, int m) {
  require(lambda > 0.0 && xi > 0.0, ErrorCode::InvalidArgument,
          "modes must be positive");
  if (m == 0) return detail::wesd_kernel(lambda, xi);
  return std::abs(std::pow(lambda, m - 1) - std::pow(xi, m - 1));
}

/// Shape-dependent coefficients of the convergence bound and the resulting
/// normalisation factor W.
struct BoundFactors {
  double c = 0.0;
  double k = 0.0;
  double v_hat = 0.0;
  double mu = 0.0;
  double w = 0.0;
};

namespace detail {

inline void check_pair(const Spectrum& a, const Spectrum& b, double p) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch,
          "spectra live in different dimensions");
  require(a.tag() == b.tag(), ErrorCode::NormalisationMismatch,
          std::string("normalisation mismatch: '") +
              normalisation_name(a.tag()) + "' vs '" +
              normalisation_name(b.tag()) + "'");
  require(p > a.dim() / 2.0, ErrorCode::InvalidArgument,
          "norm exponent must satisfy p > d/2");
}

inline BoundFactors bound_factors(const Spectrum& a, const Spectrum& b,
                                  double p) {
  const int d = a.dim();
  const double v_hat = a.tag() == Normalisation::Volume
                           ? 1.0
                           : std::max(a.volume(), b.volume());
  const double mu = std::max(a.values().front(), b.values().front());
  const double bd = unit_ball_volume(d);
  const double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
  const double lead = (d + 2.0) / (d * four_pi_sq);

  BoundFactors f;
  f.v_hat = v_hat;
  f.mu = mu;
  for (int i = 1; i <= 2; ++i) {
    const double bracket = lead * std::pow(bd * v_hat / i, 2.0 / d) -
                           (1.0 / mu) * std::pow(d / (d + 4.0), i - 1);
    require(bracket >= 0.0, ErrorCode::NegativeBoundBracket,
            "negative bracket in C (term " + std::to_string(i) +
                "): inputs are not consistent Dirichlet spectra of the "
                "declared volume");
    f.c += std::pow(bracket, p);
  }
  const double k_bracket =
      lead * std::pow(bd * v_hat, 2.0 / d) - (1.0 / mu) * d / (d + 2.64);
  require(k_bracket >= 0.0, ErrorCode::NegativeBoundBracket,
          "negative bracket in K: inputs are not consistent Dirichlet "
          "spectra of the declared volume");
  f.k = std::pow(k_bracket, p);
  f.w = std::pow(f.c + f.k * zeta_tail_from_three(2.0 * p / d), 1.0 / p);
  return f;
}

}  // namespace detail

inline BoundFactors normalisation_factor(const Spectrum& a, const Spectrum& b,
                                         double p) {
  detail::check_pair(a, b, p);
  return detail::bound_factors(a, b, p);
}

/// Shape-independent residual ratio R(N, p): an upper bound on the nWESD
/// truncation error that depends on nothing but N, p and d. Strictly
/// decreasing in N.
inline double residual_ratio(int n_modes, double p, int dim) {
  require(dim == 2 || dim == 3, ErrorCode::UnsupportedDimension,
          "residual ratio defined for d = 2, 3");
  require(n_modes >= 3, ErrorCode::InvalidArgument,
          "residual ratio requires N >= 3");
  require(p > dim / 2.0, ErrorCode::InvalidArgument,
          "norm exponent must satisfy p > d/2");
  const double s = 2.0 * p / dim;
  return 1.0 - std::pow(detail::partial_tail_sum(n_modes, s) /
                            detail::zeta_tail_from_three(s),
                        1.0 / p);
}

/// Smallest N >= 3 with R(N, p) <= target.
inline int select_truncation(double p, int dim, double target,
                             int n_cap = 10'000'000) {
  require(target > 0.0 && target < 1.0, ErrorCode::InvalidArgument,
          "target residual must lie in (0,1)");
  require(dim == 2 || dim == 3, ErrorCode::UnsupportedDimension,
          "truncation selection defined for d = 2, 3");
  require(p > dim / 2.0, ErrorCode::InvalidArgument,
          "norm exponent must satisfy p > d/2");
  const double s = 2.0 * p / dim;
  const double tail = detail::zeta_tail_from_three(s);
  double partial = 0.0;
  for (int n = 3; n <= n_cap; ++n) {
    partial += std::pow(n, -s);
    if (1.0 - std::pow(partial / tail, 1.0 / p) <= target) return n;
  }
  fail(ErrorCode::NonConvergence,
       "target residual " + std::to_string(target) +
           " not reachable within the N cap of " + std::to_string(n_cap));
}

struct TruncationBounds {
  double wesd = 0.0;
  double nwesd = 0.0;
};

namespace detail {

inline TruncationBounds truncation_from_factors(const BoundFactors& f,
                                                int n_modes, double p,
                                                int dim) {
  const double s = 2.0 * p / dim;
  const double tail = zeta_tail_from_three(s);
  const double partial = partial_tail_sum(n_modes, s);
  TruncationBounds out;
  out.wesd = std::pow(f.c + f.k * tail, 1.0 / p) -
             std::pow(f.c + f.k * partial, 1.0 / p);
  out.nwesd =
      1.0 - std::pow((f.c + f.k * partial) / (f.c + f.k * tail), 1.0 / p);
  return out;
}

}  // namespace detail

inline TruncationBounds truncation_bounds(const Spectrum& a, const Spectrum& b,
                                          const DistanceParams& params) {
  detail::check_pair(a, b, params.p);
  require(params.modes >= 3, ErrorCode::InvalidArgument,
          "truncation bounds require N >= 3");
  const auto f = detail::bound_factors(a, b, params.p);
  return detail::truncation_from_factors(f, params.modes, params.p, a.dim());
}

/// Distance value plus the bound and residual diagnostics for a shape pair.
struct DistanceReport {
  Metric metric = Metric::Wesd;
  double value = 0.0;
  double p = 0.0;
  int dim = 0;
  int effective_modes = 0;
  std::vector<double> mode_contributions;
  std::optional<BoundFactors> factors;
  std::optional<double> wesd_truncation_bound;
  std::optional<double> nwesd_truncation_bound;
  std::optional<double> residual_ratio_value;
};

namespace detail {

inline int effective_modes(const Spectrum& a, const Spectrum& b, int n_modes) {
  return static_cast<int>(
      std::min<std::size_t>({a.size(), b.size(),
                             static_cast<std::size_t>(n_modes)}));
}

inline void attach_bounds(DistanceReport& report, const Spectrum& a,
                          const Spectrum& b, const DistanceParams& params,
                          bool required) {
  BoundFactors f;
  try {
    f = bound_factors(a, b, params.p);
  } catch (const Error& e) {
    if (required || e.code() != ErrorCode::NegativeBoundBracket) throw;
    return;  // plain WESD stays valid without the bound block
  }
  report.factors = f;
  if (report.effective_modes >= 3) {
    const auto bounds = truncation_from_factors(f, report.effective_modes,
                                                params.p, a.dim());
    report.wesd_truncation_bound = bounds.wesd;
    report.nwesd_truncation_bound = bounds.nwesd;
    report.residual_ratio_value =
        residual_ratio(report.effective_modes, params.p, a.dim());
  }
}

}  // namespace detail

/// Weighted spectral distance over the first N modes:
/// rho^N = [ sum_n (|lambda_n - xi_n| / (lambda_n xi_n))^p ]^(1/p).
inline DistanceReport wesd_distance(const Spectrum& a, const Spectrum& b,
                                    const DistanceParams& params) {
  detail::check_pair(a, b, params.p);
  require(params.modes >= 1, ErrorCode::InvalidArgument,
          "at least one mode required");
  DistanceReport report;
  report.metric = Metric::Wesd;
  report.p = params.p;
  report.dim = a.dim();
  report.effective_modes = detail::effective_modes(a, b, params.modes);
  double sum = 0.0;
  report.mode_contributions.reserve(report.effective_modes);
  for (int n = 0; n < report.effective_modes; ++n) {
    const double kern = detail::wesd_kernel(a[n], b[n]);
    report.mode_contributions.push_back(kern);
    sum += std::pow(kern, params.p);
  }
  report.value = std::pow(sum, 1.0 / params.p);
  detail::attach_bounds(report, a, b, params, /*required=*/false);
  return report;
}

/// Normalised WESD: rho^N / W, confined to [0, 1).
inline DistanceReport nwesd_distance(const Spectrum& a, const Spectrum& b,
                                     const DistanceParams& params) {
  DistanceReport report = wesd_distance(a, b, params);
  report.metric = Metric::Nwesd;
  if (!report.factors.has_value())
    detail::attach_bounds(report, a, b, params, /*required=*/true);
  const double w = report.factors->w;
  const double value = report.value / w;
  require(value < 1.0, ErrorCode::InvalidArgument,
          "nWESD exceeded its normalisation bound: inputs are not consistent "
          "Dirichlet spectra");
  report.value = value;
  return report;
}

/// Euclidean distance between the first N modes (the shape-DNA baseline).
inline DistanceReport shape_dna_distance(const Spectrum& a, const Spectrum& b,
                                         int n_modes) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch,
          "spectra live in different dimensions");
  require(a.tag() == b.tag(), ErrorCode::NormalisationMismatch,
          "normalisation mismatch");
  require(n_modes >= 1, ErrorCode::InvalidArgument,
          "at least one mode required");
  require(static_cast<std::size_t>(n_modes) <= std::min(a.size(), b.size()),
          ErrorCode::LengthShortfall,
          "spectra carry fewer than " + std::to_string(n_modes) + " modes");
  DistanceReport report;
  report.metric = Metric::ShapeDna;
  report.p = 2.0;
  report.dim = a.dim();
  report.effective_modes = n_modes;
  double sum = 0.0;
  report.mode_contributions.reserve(n_modes);
  for (int n = 0; n < n_modes; ++n) {
    const double gap = std::abs(a[n] - b[n]);
    report.mode_contributions.push_back(gap);
    sum += gap * gap;
  }
  report.value = std::sqrt(sum);
  return report;
}

inline DistanceReport distance(const Spectrum& a, const Spectrum& b,
                               const DistanceParams& params) {
  switch (params.metric) {
    case Metric::Wesd: return wesd_distance(a, b, params);
    case Metric::Nwesd: return nwesd_distance(a, b, params);
    case Metric::ShapeDna: return shape_dna_distance(a, b, params.modes);
  }
  fail(ErrorCode::InvalidArgument, "unknown metric");
}

struct HeatTrace {
  double value = 0.0;
  double tail_bound = 0.0;  // Weyl-asymptote estimate of the dropped tail
  int modes_used = 0;
};

/// Truncated heat trace Z(t) = sum_n exp(-lambda_n t) over the available
/// modes, with a tail estimate from the Weyl asymptote (damped by the Li-Yau
/// constant, which makes it a true upper bound for Dirichlet spectra).
inline HeatTrace heat_trace(const Spectrum& spec, double t) {
  require(t > 0.0, ErrorCode::InvalidArgument, "heat trace requires t > 0");
  HeatTrace out;
  out.modes_used = static_cast<int>(spec.size());
  for (double v : spec.values()) out.value += std::exp(-v * t);

  const double v_eff =
      spec.tag() == Normalisation::Volume ? 1.0 : spec.volume();
  const double li_yau_factor = spec.dim() / (spec.dim() + 2.0);
  double tail = 0.0;
  for (int n = out.modes_used + 1;; ++n) {
    const double term =
        std::exp(-li_yau_factor * weyl_asymptote(n, spec.dim(), v_eff) * t);
    tail += term;
    if (term < 1e-18 * std::max(out.value + tail, 1e-300)) break;
    if (n > out.modes_used + 20'000'000) break;  // t tiny: estimate saturates
  }
  out.tail_bound = tail;
  return out;
}

/// Influence ratio D(n, t) = exp(-lambda_n t) / Z(t) with the same truncated
/// heat trace. `n` is 1-based.
inline double influence_ratio(const Spectrum& spec, int n, double t) {
  require(n >= 1 && static_cast<std::size_t>(n) <= spec.size(),
          ErrorCode::InvalidArgument, "mode index out of range");
  require(t > 0.0, ErrorCode::InvalidArgument, "influence ratio requires t > 0");
  double z = 0.0;
  for (double v : spec.values()) z += std::exp(-v * t);
  return std::exp(-spec[static_cast<std::size_t>(n - 1)] * t) / z;
}

/// Universal lower bound of Li and Yau: lambda_n >= d/(d+2) * weyl(n).
inline double li_yau_lower_bound(int n, int dim, double volume) {
  return dim / (dim + 2.0) * weyl_asymptote(n, dim, volume);
}

namespace detail {

inline double cheng_yang_a(int j) {
  if (j == 1) return 2.64;
  if (j == 2) return 2.27;
  return 2.2 - 4.0 * std::log(1.0 + (j - 3.0) / 50.0);
}

}  // namespace detail

/// Cheng-Yang bound on the next mode: lambda_{n+1} <= C0(d,n) n^{2/d}
/// lambda_1 with C0 = 1 + a(min(d, n-1))/d, valid for n >= 2.
inline double cheng_yang_upper_bound(int n, int dim, double lambda1) {
  require(n >= 2, ErrorCode::InvalidArgument,
          "Cheng-Yang bound requires n >= 2");
  require(lambda1 > 0.0, ErrorCode::InvalidArgument,
          "first eigenvalue must be positive");
  require(dim == 2 || dim == 3, ErrorCode::UnsupportedDimension,
          "Cheng-Yang bound implemented for d = 2, 3");
  const double c0 = 1.0 + detail::cheng_yang_a(std::min(dim, n - 1)) / dim;
  return c0 * std::pow(n, 2.0 / dim) * lambda1;
}

/// Yang growth bound: lambda_{n+1} < (1 + 4/d) (1/n) sum_{m<=n} lambda_m.
inline double yang_growth_bound(std::span<const double> first_modes, int dim) {
  require(!first_modes.empty(), ErrorCode::InvalidArgument,
          "Yang bound needs at least one mode");
  double sum = 0.0;
  for (double v : first_modes) sum += v;
  return (1.0 + 4.0 / dim) * sum / static_cast<double>(first_modes.size());
}

/// Structured-text serialization of a report; reals carry 17 significant
/// digits.
inline void save_report(const DistanceReport& r, std::ostream& out) {
  char buf[64];
  auto emit = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << ' ' << buf << '\n';
  };
  out << "metric " << metric_name(r.metric) << '\n';
  emit("value", r.value);
  emit("p", r.p);
  out << "dimension " << r.dim << '\n';
  out << "effective_modes " << r.effective_modes << '\n';
  if (r.factors) {
    emit("W", r.factors->w);
    emit("C", r.factors->c);
    emit("K", r.factors->k);
    emit("V_hat", r.factors->v_hat);
    emit("mu", r.factors->mu);
  }
  if (r.wesd_truncation_bound) emit("wesd_truncation_bound", *r.wesd_truncation_bound);
  if (r.nwesd_truncation_bound)
    emit("nwesd_truncation_bound", *r.nwesd_truncation_bound);
  if (r.residual_ratio_value) emit("residual_ratio", *r.residual_ratio_value);
  out << "mode_contributions " << r.mode_contributions.size() << '\n';
  for (double v : r.mode_contributions) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << '\n';
  }
}

}  // namespace wesd
