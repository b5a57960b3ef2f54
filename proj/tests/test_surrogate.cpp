#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "goanet/errors.hpp"
#include "goanet/rng.hpp"
#include "goanet/surrogate.hpp"

using namespace goanet;

namespace {
const surrogate::Params kReferenceParams{2.58e-1, 1.20e-1, 2.95e-3, {}};
}

TEST_CASE("operation counts") {
  CHECK(769.0 * 1023.0 * 512.0 == surrogate::kVqOpsAtFullMasks);
  CHECK(surrogate::ops_count(0.5, 0.5) == 402783744.0);
  CHECK(surrogate::ops_count(1e-4, 1e-4) ==
        doctest::Approx(80556.7488).epsilon(1e-12));
  SUBCASE("depends on the masks only through their sum") {
    rng::Stream s(4, 1);
    for (int i = 0; i < 200; ++i) {
      const double a = s.next_unit();
      const double b = s.next_unit();
      CHECK(surrogate::ops_count(a, b) == surrogate::ops_count(b, a));
      const double c = 0.5 * s.next_unit() * (a + b);
      CHECK(surrogate::ops_count(a + b - c, c) ==
            doctest::Approx(surrogate::ops_count(a, b)).epsilon(1e-15));
    }
  }
}

TEST_CASE("bit counts and bits per pixel") {
  CHECK(surrogate::bits_count(1.0, 1.0) == 11264.0);
  CHECK(surrogate::bits_count(0.0, 0.0) == 1024.0);
  CHECK(surrogate::bits_per_pixel(1.0, 1.0) ==
        doctest::Approx(0.0859375).epsilon(1e-12));
  SUBCASE("bits over the 131072-pixel frame equal bpp") {
    rng::Stream s(11, 2);
    for (int i = 0; i < 1000; ++i) {
      const double mx = s.next_unit();
      const double ms = s.next_unit();
      CHECK(surrogate::bits_count(mx, ms) / 131072.0 ==
            doctest::Approx(surrogate::bits_per_pixel(mx, ms)).epsilon(1e-12));
    }
  }
}

TEST_CASE("separable distortion surrogate") {
  CHECK(surrogate::g_approx(1.0, 1.0, kReferenceParams) ==
        doctest::Approx(0.26095).epsilon(1e-12));
  CHECK(surrogate::g_approx(0.5, 1.0, kReferenceParams) ==
        doctest::Approx(0.283327594531723).epsilon(1e-10));
  SUBCASE("halving m_s doubles the c term exactly") {
    const double base = surrogate::g_approx(0.7, 0.4, kReferenceParams);
    const double halved = surrogate::g_approx(0.7, 0.2, kReferenceParams);
    CHECK(halved - base ==
          doctest::Approx(kReferenceParams.c / 0.4).epsilon(1e-9));
  }
  SUBCASE("domain floor") {
    CHECK_THROWS_AS(surrogate::g_approx(1e-5, 0.5, kReferenceParams), DomainError);
    CHECK_THROWS_AS(surrogate::g_approx(0.5, 0.0, kReferenceParams), DomainError);
  }
  SUBCASE("partial derivatives match central differences") {
    const double h = 1e-6;
    for (int i = 1; i < 20; ++i) {
      for (int j = 1; j < 20; ++j) {
        const double mx = 0.05 + 0.9 * i / 20.0;
        const double ms = 0.05 + 0.9 * j / 20.0;
        const double dx_num = (surrogate::g_approx(mx + h, ms, kReferenceParams) -
                               surrogate::g_approx(mx - h, ms, kReferenceParams)) /
                              (2 * h);
        const double dx = -kReferenceParams.a * kReferenceParams.b *
                          std::pow(mx, -kReferenceParams.b - 1.0);
        CHECK(dx_num == doctest::Approx(dx).epsilon(1e-6));
        const double ds_num = (surrogate::g_approx(mx, ms + h, kReferenceParams) -
                               surrogate::g_approx(mx, ms - h, kReferenceParams)) /
                              (2 * h);
        const double ds = -kReferenceParams.c / (ms * ms);
        CHECK(ds_num == doctest::Approx(ds).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("mask reduction") {
  SUBCASE("paper mode clips high") {
    CHECK(surrogate::m_x_reduction(0.5, kReferenceParams,
                                   surrogate::ReductionMode::paper) == 1.0);
  }
  SUBCASE("paper mode clamps up to the floor") {
    CHECK(surrogate::m_x_reduction(0.05, kReferenceParams,
                                   surrogate::ReductionMode::paper) == 1e-4);
  }
  SUBCASE("stationary mode interior value") {
    CHECK(surrogate::m_x_reduction(0.05, kReferenceParams,
                                   surrogate::ReductionMode::stationary) ==
          doctest::Approx(0.03875435260383545).epsilon(1e-9));
  }
  SUBCASE("stationary mode satisfies the first-order balance") {
    // At an interior reduction point, a b m_x^-(1+b) equals c / m_s^2, which
    // is the common linear coefficient both conditions share.
    rng::Stream s(21, 3);
    for (int i = 0; i < 500; ++i) {
      surrogate::Params p;
      p.a = 0.05 + s.next_unit();
      p.b = 0.05 + s.next_unit();
      p.c = 1e-4 + 1e-2 * s.next_unit();
      const double ms = 1e-3 + 0.999 * s.next_unit();
      const double mx =
          surrogate::m_x_reduction(ms, p, surrogate::ReductionMode::stationary);
      if (mx <= 1e-4 || mx >= 1.0) continue;
      const double lhs = p.a * p.b * std::pow(mx, -(1.0 + p.b));
      const double rhs = p.c / (ms * ms);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
  }
  SUBCASE("out-of-domain m_s") {
    CHECK_THROWS_AS(surrogate::m_x_reduction(
                        0.0, kReferenceParams, surrogate::ReductionMode::paper),
                    DomainError);
  }
}

TEST_CASE("surrogate fit") {
  SUBCASE("round-trips the generating parameters") {
    std::vector<surrogate::FitSample> samples;
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        const double mx = std::pow(10.0, -1.7 + 1.7 * i / 9.0);
        const double ms = std::pow(10.0, -1.7 + 1.7 * j / 9.0);
        samples.push_back(
            {mx, ms, surrogate::g_approx(mx, ms, kReferenceParams, 1e-4)});
      }
    }
    const auto fitted = surrogate::fit(samples);
    CHECK(fitted.a == doctest::Approx(kReferenceParams.a).epsilon(0.01));
    CHECK(fitted.b == doctest::Approx(kReferenceParams.b).epsilon(0.01));
    CHECK(fitted.c == doctest::Approx(kReferenceParams.c).epsilon(0.01));
    REQUIRE(fitted.fit_residual.has_value());
    CHECK(*fitted.fit_residual < 1e-10);
  }
  SUBCASE("single m_s value leaves c unidentifiable") {
    std::vector<surrogate::FitSample> samples;
    for (int i = 0; i < 8; ++i) {
      const double mx = 0.1 + 0.1 * i;
      samples.push_back({mx, 0.5, surrogate::g_approx(mx, 0.5, kReferenceParams)});
    }
    CHECK_THROWS_AS(surrogate::fit(samples), FitError);
  }
  SUBCASE("flat surface is degenerate") {
    std::vector<surrogate::FitSample> samples;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        samples.push_back({0.1 + 0.2 * i, 0.1 + 0.2 * j, 0.5});
      }
    }
    CHECK_THROWS_AS(surrogate::fit(samples), FitError);
  }
  SUBCASE("too few samples") {
    std::vector<surrogate::FitSample> samples(4, {0.5, 0.5, 0.3});
    CHECK_THROWS_AS(surrogate::fit(samples), FitError);
  }
}
