#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "wesd/detail/jacobi.hpp"
#include "wesd/detail/symmetric_eigen.hpp"
#include "wesd/eigensolver.hpp"
#include "wesd/geometry.hpp"
#include "wesd/laplacian.hpp"

#include "support/analytic.hpp"
#include "support/masks.hpp"

using Catch::Approx;
using wesd::Normalisation;

TEST_CASE("dense symmetric eigensolver agrees with the Jacobi route") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (std::size_t n : {1u, 2u, 3u, 7u, 24u, 41u}) {
    std::vector<double> original(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        original[i * n + j] = original[j * n + i] = unif(rng);

    std::vector<double> scratch_ql(original), scratch_jac(original);
    std::vector<double> v1, s1, v2, s2;
    wesd::detail::symmetric_eigen(scratch_ql, n, v1, s1);
    wesd::detail::jacobi_eigen(scratch_jac, n, v2, s2, 1e-13);

    for (std::size_t i = 0; i < n; ++i)
      CHECK(v1[i] == Approx(v2[i]).margin(1e-10));

    // residuals and normalisation of the QL route against the original
    for (std::size_t i = 0; i < n; ++i) {
      double resid = 0.0, norm = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double av = 0.0;
        for (std::size_t c = 0; c < n; ++c)
          av += original[r * n + c] * s1[i * n + c];
        const double diff = av - v1[i] * s1[i * n + r];
        resid += diff * diff;
        norm += s1[i * n + r] * s1[i * n + r];
      }
      CHECK(std::sqrt(resid) < 1e-9);
      CHECK(std::sqrt(norm) == Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("scalar operator returns its single entry") {
  std::vector<std::uint8_t> one{1};
  auto op = wesd::assemble(wesd::BinaryDomain(2, {1, 1, 1}, {1, 1, 1}, one));
  auto spec = wesd::smallest_eigenvalues(op, 1);
  REQUIRE(spec.size() == 1);
  CHECK(spec[0] == Approx(4.0).epsilon(1e-12));
}

TEST_CASE("60x60 square matches the closed-form discrete eigenvalues") {
  const std::size_t w = 60;
  auto op = wesd::assemble(testsupport::filled_rect(w, w));
  const int n_modes = 10;
  const double tol = 1e-8;
  auto spec = wesd::smallest_eigenvalues(op, n_modes, tol);
  auto exact = testsupport::discrete_square_spectrum(w, 1.0, n_modes);
  for (int i = 0; i < n_modes; ++i)
    CHECK(std::abs(spec[i] - exact[i]) / exact[i] <= 10 * tol);
}

TEST_CASE("strip operator matches its tridiagonal closed form") {
  // w cells in a row: eigenvalues 2/h^2 (1 - cos(m pi/(w+1))) + 2/h^2 stay
  // within the 2D stencil's diagonal; use the discrete formula directly.
  const std::size_t w = 25;
  std::vector<std::uint8_t> mask(w, 1);
  auto op = wesd::assemble(wesd::BinaryDomain(2, {w, 1, 1}, {1, 1, 1}, mask));
  auto spec = wesd::smallest_eigenvalues(op, 5, 1e-10);
  for (int m = 1; m <= 5; ++m) {
    const double s = std::sin(m * std::numbers::pi / (2.0 * (w + 1)));
    const double expect = 4.0 * s * s + 2.0;
    CHECK(spec[m - 1] == Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("unit square eigenvalues approach the analytic spectrum") {
  // Moderate grid keeps this test quick; the acceptance suite runs 200x200.
  const std::size_t w = 80;
  auto op = wesd::assemble(testsupport::filled_rect(w, w, 1.0 / w));
  auto spec = wesd::smallest_eigenvalues(op, 10);
  auto norm = wesd::normalize(spec, Normalisation::Volume);
  auto analytic = testsupport::rect_spectrum(1.0, 1.0, 10);
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(norm[i] - analytic[i]) / analytic[i] < 0.05);
}

TEST_CASE("volume normalisation multiplies by V^(2/d)") {
  wesd::Spectrum raw({2.0, 4.0, 6.0}, 2, 4.0);
  auto vol = wesd::normalize(raw, Normalisation::Volume);
  CHECK(vol[0] == Approx(8.0));
  CHECK(vol[1] == Approx(16.0));
  CHECK(vol[2] == Approx(24.0));
  CHECK(vol.tag() == Normalisation::Volume);
}

TEST_CASE("first-eigenvalue normalisation divides by lambda_1") {
  wesd::Spectrum raw({2.0, 4.0, 6.0}, 2, 4.0);
  auto fe = wesd::normalize(raw, Normalisation::FirstEigenvalue);
  CHECK(fe[0] == 1.0);
  CHECK(fe[1] == Approx(2.0));
  CHECK(fe[2] == Approx(3.0));
}

TEST_CASE("double normalisation is rejected") {
  wesd::Spectrum raw({2.0, 4.0}, 2, 1.0);
  auto vol = wesd::normalize(raw, Normalisation::Volume);
  CHECK_THROWS_AS(wesd::normalize(vol, Normalisation::Volume), wesd::Error);
  CHECK_THROWS_AS(wesd::normalize(vol, Normalisation::FirstEigenvalue),
                  wesd::Error);
}

TEST_CASE("discretization error shrinks monotonically with h") {
  // Against the analytic unit-square values the error is dominated by the
  // effective-boundary offset of the stencil, which scales like h; every
  // mode must improve at every refinement.
  auto errors = [](std::size_t w) {
    auto op = wesd::assemble(testsupport::filled_rect(w, w, 1.0 / w));
    auto spec = wesd::normalize(wesd::smallest_eigenvalues(op, 6, 1e-9),
                                Normalisation::Volume);
    auto analytic = testsupport::rect_spectrum(1.0, 1.0, 6);
    std::vector<double> e(6);
    for (int i = 0; i < 6; ++i)
      e[i] = std::abs(spec[i] - analytic[i]) / analytic[i];
    return e;
  };
  const auto e50 = errors(50);
  const auto e100 = errors(100);
  const auto e200 = errors(200);
  for (int i = 0; i < 6; ++i) {
    CHECK(e100[i] < e50[i]);
    CHECK(e200[i] < e100[i]);
  }
}

TEST_CASE("grid refinement keeps volume-normalised spectra consistent") {
  auto coarse = wesd::smallest_eigenvalues(
      wesd::assemble(testsupport::filled_rect(100, 100, 1.0 / 100)), 10);
  auto fine = wesd::smallest_eigenvalues(
      wesd::assemble(testsupport::filled_rect(200, 200, 1.0 / 200)), 10);
  auto cn = wesd::normalize(coarse, Normalisation::Volume);
  auto fn = wesd::normalize(fine, Normalisation::Volume);
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(cn[i] - fn[i]) / fn[i] < 0.02);
}

TEST_CASE("weyl asymptote evaluates the printed formula") {
  CHECK(wesd::weyl_asymptote(1, 2, std::numbers::pi) == Approx(4.0));
  // doubling V halves the value in 2D
  const double v = 1.7;
  CHECK(wesd::weyl_asymptote(7, 2, 2 * v) ==
        Approx(wesd::weyl_asymptote(7, 2, v) / 2.0));
  // unit square: ratio of the 100th analytic mode to the asymptote
  auto analytic = testsupport::rect_spectrum(1.0, 1.0, 100);
  const double ratio = analytic[99] / wesd::weyl_asymptote(100, 2, 1.0);
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.2);
}

TEST_CASE("isometry invariance of the computed spectrum") {
  auto dom = testsupport::l_shape(26, 10);
  const double tol = 1e-8;
  auto base = wesd::smallest_eigenvalues(wesd::assemble(dom), 12, tol);
  auto rot = wesd::apply_isometry(dom, wesd::GridIsometry::rotation90_xy());
  auto spec = wesd::smallest_eigenvalues(wesd::assemble(rot), 12, tol);
  for (int i = 0; i < 12; ++i)
    CHECK(std::abs(spec[i] - base[i]) / base[i] <= 10 * tol);
}

TEST_CASE("solver is deterministic given the seed") {
  auto dom = testsupport::blob(40, 13.0, 0.25, 5u);
  auto op = wesd::assemble(dom);
  auto a = wesd::smallest_eigenvalues(op, 8, 1e-8, 1234);
  auto b = wesd::smallest_eigenvalues(op, 8, 1e-8, 1234);
  for (int i = 0; i < 8; ++i) CHECK(a[i] == b[i]);  // bit-for-bit
}

TEST_CASE("asking for more modes than the order fails") {
  std::vector<std::uint8_t> mask{1, 1};
  auto op = wesd::assemble(wesd::BinaryDomain(2, {2, 1, 1}, {1, 1, 1}, mask));
  CHECK_THROWS_AS(wesd::smallest_eigenvalues(op, 3), wesd::Error);
}

TEST_CASE("computed modes respect the Li-Yau lower bound") {
  auto dom = testsupport::blob(36, 12.0, 0.3, 21u);
  auto op = wesd::assemble(dom);
  auto spec = wesd::smallest_eigenvalues(op, 15);
  const double v = wesd::volume(dom);
  for (int n = 1; n <= 15; ++n) {
    const double bound = (2.0 / 4.0) * wesd::weyl_asymptote(n, 2, v);
    CHECK(spec[n - 1] >= bound);
  }
}

TEST_CASE("spectrum cache round-trips losslessly") {
  auto dom = testsupport::disc(30, 10.0, 0.37);
  auto spec = wesd::smallest_eigenvalues(wesd::assemble(dom), 6);
  std::ostringstream out;
  wesd::save_spectrum(spec, out);
  std::istringstream in(out.str());
  auto loaded = wesd::load_spectrum(in);
  CHECK(loaded.dim() == spec.dim());
  CHECK(loaded.volume() == spec.volume());
  CHECK(loaded.tag() == spec.tag());
  CHECK(loaded.spacing() == spec.spacing());
  CHECK(loaded.solver().requested_modes == spec.solver().requested_modes);
  CHECK(loaded.solver().tol == spec.solver().tol);
  CHECK(loaded.solver().iterations == spec.solver().iterations);
  REQUIRE(loaded.size() == spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) CHECK(loaded[i] == spec[i]);
}

TEST_CASE("spectrum invariants are enforced") {
  CHECK_THROWS_AS(wesd::Spectrum({}, 2, 1.0), wesd::Error);
  CHECK_THROWS_AS(wesd::Spectrum({-1.0}, 2, 1.0), wesd::Error);
  CHECK_THROWS_AS(wesd::Spectrum({2.0, 1.0}, 2, 1.0), wesd::Error);
  CHECK_THROWS_AS(wesd::Spectrum({2.0, 3.0}, 4, 1.0), wesd::Error);
  CHECK_THROWS_AS(
      wesd::Spectrum({2.0, 3.0}, 2, 1.0, {}, Normalisation::FirstEigenvalue),
      wesd::Error);
}

TEST_CASE("3d box spectrum matches the discrete closed form") {
  const std::size_t w = 14;
  const double h = 1.0 / w;
  const double tol = 1e-8;
  auto op = wesd::assemble(testsupport::filled_box(w, w, w, h));
  auto spec = wesd::smallest_eigenvalues(op, 5, tol);
  std::vector<double> exact;
  for (std::size_t l = 1; l <= w; ++l)
    for (std::size_t m = 1; m <= w; ++m)
      for (std::size_t n = 1; n <= w; ++n) {
        const double sl = std::sin(l * std::numbers::pi / (2.0 * (w + 1)));
        const double sm = std::sin(m * std::numbers::pi / (2.0 * (w + 1)));
        const double sn = std::sin(n * std::numbers::pi / (2.0 * (w + 1)));
        exact.push_back(4.0 / (h * h) * (sl * sl + sm * sm + sn * sn));
      }
  std::sort(exact.begin(), exact.end());
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(spec[i] - exact[i]) / exact[i] <= 10 * tol);
}
