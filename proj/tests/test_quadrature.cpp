#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rdecay/error.hpp"
#include "rdecay/quadrature.hpp"

using namespace rdecay;

TEST_SUITE("quadrature") {
  TEST_CASE("polynomials and elementary integrals") {
    CHECK(quad::integrate([](double x) { return x * x; }, 0.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(quad::integrate([](double x) { return std::cos(x); }, 0.0, std::numbers::pi / 2) ==
          doctest::Approx(1.0).epsilon(1e-13));
    // endpoint singularity of the derivative
    CHECK(quad::integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("reversed limits flip the sign") {
    const auto f = [](double x) { return std::exp(x); };
    CHECK(quad::integrate(f, 2.0, 0.0) == doctest::Approx(1.0 - std::exp(2.0)).epsilon(1e-13));
    CHECK(quad::integrate(f, 1.0, 1.0) == 0.0);
  }

  TEST_CASE("infinite ranges") {
    CHECK(quad::integrate([](double x) { return std::exp(-x); }, 0.0, quad::kInf) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(quad::integrate([](double x) { return std::exp(-x * x); }, -quad::kInf, quad::kInf) ==
          doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
    CHECK(quad::integrate([](double x) { return 1.0 / (1.0 + x * x); }, -quad::kInf, 0.0) ==
          doctest::Approx(std::numbers::pi / 2).epsilon(1e-11));
  }

  TEST_CASE("short intervals converge") {
    CHECK(quad::integrate([](double x) { return x; }, 0.0, 1e-4) == doctest::Approx(5e-9).epsilon(1e-13));
  }

  TEST_CASE("error estimate variant does not throw") {
    double err = -1.0;
    const double v = quad::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12, &err);
    CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(err >= 0.0);
    CHECK(err < 1e-10);
  }

  TEST_CASE("Gauss-Legendre panel is exact for degree 19") {
    const auto p = [](double x) { return std::pow(x, 19) + 3 * std::pow(x, 4); };
    CHECK(quad::gauss_legendre(p, 0.0, 1.0) == doctest::Approx(1.0 / 20 + 3.0 / 5).epsilon(1e-14));
  }

  TEST_CASE("log_integral_exp") {
    // Gaussian far below the double range
    const auto phi = [](double x) { return -0.5 * x * x - 2000.0; };
    CHECK(quad::log_integral_exp(phi, -quad::kInf, quad::kInf) ==
          doctest::Approx(0.5 * std::log(2 * std::numbers::pi) - 2000.0).epsilon(1e-14));
    // Gamma(6) = 120 after t = e^s
    const auto g = [](double s) { return 6.0 * s - std::exp(s); };
    CHECK(quad::log_integral_exp(g, -quad::kInf, quad::kInf) == doctest::Approx(std::log(120.0)).epsilon(1e-13));
    // peak at the boundary
    const auto e = [](double x) { return -x; };
    CHECK(quad::log_integral_exp(e, 0.0, quad::kInf) == doctest::Approx(0.0).epsilon(1e-12));
  }
}
