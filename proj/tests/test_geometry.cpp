#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "wesd/geometry.hpp"

#include "support/masks.hpp"

using wesd::BinaryDomain;
using wesd::GridIsometry;
using Catch::Approx;

TEST_CASE("pgm loading: single foreground pixel") {
  std::istringstream in(
      "P2\n"
      "3 3\n"
      "255\n"
      "0 0 0\n"
      "0 255 0\n"
      "0 0 0\n");
  auto dom = wesd::load_domain(in, wesd::MaskFormat::Pgm, 127, "dot");
  CHECK(dom.dim() == 2);
  CHECK(dom.foreground_count() == 1);
  CHECK(dom.foreground(1, 1, 0));
}

TEST_CASE("pgm loading honours the threshold") {
  std::istringstream in("P2\n2 1\n255\n100 200\n");
  auto low = wesd::load_domain(in, wesd::MaskFormat::Pgm, 127);
  CHECK(low.foreground_count() == 1);
  std::istringstream in2("P2\n2 1\n255\n100 200\n");
  auto lower = wesd::load_domain(in2, wesd::MaskFormat::Pgm, 50);
  CHECK(lower.foreground_count() == 2);
}

TEST_CASE("bvox loading: 2x2x2 all-foreground") {
  std::string payload = "BVOX 2 2 2 1.0 1.0 1.0\n";
  payload += std::string(8, '\x01');
  std::istringstream in(payload);
  auto dom = wesd::load_domain(in, wesd::MaskFormat::Bvox);
  CHECK(dom.dim() == 3);
  CHECK(dom.foreground_count() == 8);
  CHECK(dom.spacing()[0] == 1.0);
}

TEST_CASE("bvox loading reads spacing from the header") {
  std::string payload = "BVOX 2 1 1 0.5 0.25 2.0\n";
  payload += '\x01';
  payload += '\x00';
  std::istringstream in(payload);
  auto dom = wesd::load_domain(in, wesd::MaskFormat::Auto);
  CHECK(dom.spacing()[0] == 0.5);
  CHECK(dom.spacing()[1] == 0.25);
  CHECK(dom.spacing()[2] == 2.0);
  CHECK(dom.foreground_count() == 1);
}

TEST_CASE("all-zero image is rejected as empty foreground") {
  std::istringstream in("P2\n2 2\n255\n0 0 0 0\n");
  try {
    wesd::load_domain(in, wesd::MaskFormat::Pgm);
    FAIL("expected EmptyForeground");
  } catch (const wesd::Error& e) {
    CHECK(e.code() == wesd::ErrorCode::EmptyForeground);
  }
}

TEST_CASE("malformed headers raise ParseError") {
  std::istringstream a("P2\n3\n");
  CHECK_THROWS_AS(wesd::load_domain(a, wesd::MaskFormat::Pgm), wesd::Error);
  std::istringstream b("BVOX 2 2\n");
  CHECK_THROWS_AS(wesd::load_domain(b, wesd::MaskFormat::Bvox), wesd::Error);
  std::istringstream c("P7\n1 1\n255\n0\n");
  CHECK_THROWS_AS(wesd::load_domain(c, wesd::MaskFormat::Auto), wesd::Error);
}

TEST_CASE("pbm variants parse and treat ones as foreground") {
  std::istringstream p1("P1\n3 1\n0 1 0\n");
  auto a = wesd::load_domain(p1, wesd::MaskFormat::Pbm);
  CHECK(a.foreground_count() == 1);
  CHECK(a.foreground(1, 0, 0));

  // P4: 3 wide -> one byte per row, bits from the high end.
  std::string raw = "P4\n3 1\n";
  raw += static_cast<char>(0b01000000);
  std::istringstream p4(raw);
  auto b = wesd::load_domain(p4, wesd::MaskFormat::Pbm);
  CHECK(b.foreground_count() == 1);
  CHECK(b.foreground(1, 0, 0));
}

TEST_CASE("volume counts cells times the cell measure") {
  CHECK(wesd::volume(testsupport::filled_rect(10, 10, 1.0)) == Approx(100.0));
  CHECK(wesd::volume(testsupport::filled_rect(10, 10, 0.5)) == Approx(25.0));
  auto box = testsupport::filled_box(4, 4, 4);
  // 32 of 64 cells foreground
  std::vector<std::uint8_t> half(64, 0);
  for (std::size_t i = 0; i < 32; ++i) half[i] = 1;
  wesd::BinaryDomain dom(3, {4, 4, 4}, {1, 1, 1}, std::move(half));
  CHECK(wesd::volume(dom) == Approx(32.0));
  CHECK(wesd::volume(box) == Approx(64.0));
}

TEST_CASE("surface measure counts exposed faces") {
  std::vector<std::uint8_t> one{1};
  CHECK(wesd::surface_measure(BinaryDomain(2, {1, 1, 1}, {1, 1, 1}, one)) ==
        Approx(4.0));
  CHECK(wesd::surface_measure(testsupport::filled_rect(2, 2)) == Approx(8.0));
  CHECK(wesd::surface_measure(BinaryDomain(3, {1, 1, 1}, {1, 1, 1}, one)) ==
        Approx(6.0));
}

TEST_CASE("unit ball volume") {
  CHECK(wesd::unit_ball_volume(2) == Approx(std::numbers::pi));
  CHECK(wesd::unit_ball_volume(3) == Approx(4.0 * std::numbers::pi / 3.0));
  try {
    wesd::unit_ball_volume(4);
    FAIL("expected UnsupportedDimension");
  } catch (const wesd::Error& e) {
    CHECK(e.code() == wesd::ErrorCode::UnsupportedDimension);
  }
}

TEST_CASE("identity isometry returns an identical mask") {
  auto dom = testsupport::l_shape();
  auto out = wesd::apply_isometry(dom, GridIsometry::identity());
  CHECK(out == dom);
}

TEST_CASE("quarter turn applied four times is the identity") {
  auto dom = testsupport::l_shape(31, 12);
  auto rot = GridIsometry::rotation90_xy();
  auto cur = dom;
  for (int i = 0; i < 4; ++i) cur = wesd::apply_isometry(cur, rot);
  CHECK(cur == dom);
}

TEST_CASE("translation preserves the foreground count") {
  auto dom = testsupport::disc(24, 8.0);
  auto out =
      wesd::apply_isometry(dom, GridIsometry::translation(3, 0));
  CHECK(out.foreground_count() == dom.foreground_count());
}

TEST_CASE("volume and surface are isometry invariants") {
  auto dom = testsupport::blob(40, 14.0, 0.25, 7u);
  const double v = wesd::volume(dom);
  const double s = wesd::surface_measure(dom);

  std::vector<GridIsometry> group;
  for (bool swap : {false, true})
    for (bool fx : {false, true})
      for (bool fy : {false, true}) {
        GridIsometry g;
        if (swap) g.perm = {1, 0, 2};
        g.flip = {fx, fy, false};
        group.push_back(g);
      }
  for (const auto& g : group) {
    auto out = wesd::apply_isometry(dom, g);
    CHECK(wesd::volume(out) == v);
    CHECK(wesd::surface_measure(out) == s);
    auto back = wesd::apply_isometry(out, g.inverse());
    CHECK(back == dom);
  }
}

TEST_CASE("in-grid translations round-trip exactly") {
  auto dom = testsupport::disc(32, 8.0);  // margin around the disc
  GridIsometry g = GridIsometry::translation(2, 3);
  auto moved = wesd::apply_isometry(dom, g);
  auto back = wesd::apply_isometry(moved, g.inverse());
  CHECK(back == dom);
}

TEST_CASE("flip combined with translation round-trips") {
  auto dom = testsupport::disc(32, 7.0);
  GridIsometry g;
  g.flip = {true, false, false};
  g.shift = {2, 1, 0};
  auto back = wesd::apply_isometry(wesd::apply_isometry(dom, g), g.inverse());
  CHECK(back == dom);
}

TEST_CASE("measures scale as powers of the spacing") {
  auto base = testsupport::blob(36, 12.0, 0.2, 3u);
  const double s = 2.5;
  wesd::BinaryDomain scaled(2, base.extents(),
                            {base.spacing()[0] * s, base.spacing()[1] * s, 1.0},
                            std::vector<std::uint8_t>(base.mask()),
                            "scaled");
  CHECK(wesd::volume(scaled) == Approx(wesd::volume(base) * s * s));
  CHECK(wesd::surface_measure(scaled) ==
        Approx(wesd::surface_measure(base) * s));
}

TEST_CASE("3d isometries permute spacing along with axes") {
  std::vector<std::uint8_t> mask(2 * 3 * 4, 1);
  BinaryDomain dom(3, {2, 3, 4}, {0.1, 0.2, 0.3}, std::move(mask));
  GridIsometry g;
  g.perm = {2, 0, 1};
  auto out = wesd::apply_isometry(dom, g);
  CHECK(out.extents()[0] == 4);
  CHECK(out.extents()[1] == 2);
  CHECK(out.extents()[2] == 3);
  CHECK(out.spacing()[0] == 0.3);
  CHECK(out.spacing()[1] == 0.1);
  CHECK(out.spacing()[2] == 0.2);
  CHECK(wesd::volume(out) == Approx(wesd::volume(dom)));
  CHECK(wesd::apply_isometry(out, g.inverse()) == dom);
}

TEST_CASE("multi-component masks are accepted") {
  std::vector<std::uint8_t> mask(25, 0);
  mask[0] = 1;
  mask[24] = 1;
  BinaryDomain dom(2, {5, 5, 1}, {1, 1, 1}, std::move(mask));
  CHECK(dom.foreground_count() == 2);
  CHECK(wesd::surface_measure(dom) == Approx(8.0));
}
