#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "rdecay/specfun.hpp"

using namespace rdecay::specfun;

namespace {

// Independent evaluation of int_0^inf exp(-a t - b/t) t^-g dt.
double laplace_oracle(double a, double b, double g) {
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double t) { return t <= 0.0 ? 0.0 : std::exp(-a * t - b / t - g * std::log(t)); });
}

}  // namespace

TEST_SUITE("specfun") {
  TEST_CASE("K_nu against the standard library") {
    for (double nu : {0.0, 0.3, 1.0, 1.5, 2.7, 5.0}) {
      for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 60.0, 200.0, 600.0}) {
        CAPTURE(nu);
        CAPTURE(x);
        const double ref = std::cyl_bessel_k(nu, x);
        CHECK(bessel_k(nu, x) == doctest::Approx(ref).epsilon(1e-10));
        CHECK(log_bessel_k(nu, x) == doctest::Approx(std::log(ref)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("half-integer closed form") {
    CHECK(bessel_k(0.5, 2.0) == doctest::Approx(std::sqrt(std::numbers::pi / 4) * std::exp(-2.0)).epsilon(1e-14));
    CHECK(bessel_k_eval(0.5, 2.0).method == BesselMethod::closed_half_integer);
    CHECK(log_bessel_k(0.5, 100.0) == doctest::Approx(0.5 * std::log(std::numbers::pi / 200) - 100).epsilon(1e-15));
    const auto q = bessel_k_eval(2.5, 1.7, BesselMethod::quadrature);
    const auto c = bessel_k_eval(2.5, 1.7, BesselMethod::closed_half_integer);
    CHECK(q.value == doctest::Approx(c.value).epsilon(1e-12));
    CHECK_THROWS_AS(bessel_k_eval(1.2, 1.0, BesselMethod::closed_half_integer), std::invalid_argument);
  }

  TEST_CASE("limits") {
    // small argument: K_0(x) - ln(2/x) -> -Euler gamma
    CHECK(bessel_k(0.0, 1e-8) - std::log(2e8) == doctest::Approx(-kEulerGamma).epsilon(1e-7));
    // large argument
    const double x = 1e4;
    CHECK(std::exp(log_bessel_k(1.0, x) + x + 0.5 * std::log(2 * x / std::numbers::pi)) ==
          doctest::Approx(1.0).epsilon(1e-4));
    const double h = 1e-3;
    CHECK((log_bessel_k(0.0, 200 + h) - log_bessel_k(0.0, 200 - h)) / (2 * h) == doctest::Approx(-1.0).epsilon(1e-2));
  }

  TEST_CASE("recurrence in the order (K_{-nu} = K_nu)") {
    for (double nu : {0.7, 1.0, 3.2}) {
      for (double x : {0.2, 2.0, 30.0}) {
        CHECK(bessel_k(nu + 1, x) == doctest::Approx(bessel_k(std::abs(nu - 1), x) + 2 * nu / x * bessel_k(nu, x)).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("underflow paths") {
    CHECK_THROWS_AS(bessel_k(1.0, 1000.0), std::range_error);
    const ScaledValue s = bessel_k_scaled(1.0, 1000.0);
    CHECK(s.mantissa >= 1.0);
    CHECK(s.mantissa < 2.0);
    CHECK(std::log(s.mantissa) + s.exponent * std::log(2.0) == doctest::Approx(log_bessel_k(1.0, 1000.0)).epsilon(1e-14));
    CHECK(std::isfinite(log_bessel_k(3.0, 1e6)));
  }

  TEST_CASE("gamma function") {
    CHECK(gamma_fn(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-14));
    CHECK(gamma_fn(4.7) == doctest::Approx(3.7 * gamma_fn(3.7)).epsilon(1e-12));
  }

  TEST_CASE("Laplace integral against an independent quadrature") {
    for (double a : {0.1, 1.0, 10.0}) {
      for (double b : {0.1, 1.0, 10.0}) {
        for (double g : {1.0, 1.5, 3.0}) {
          const LaplaceIntegralParams p{a, b, g};
          const double ref = laplace_oracle(a, b, g);
          CHECK(laplace_bessel_integral(p, IntegralMode::closed_form) == doctest::Approx(ref).epsilon(1e-9));
          CHECK(laplace_bessel_integral(p, IntegralMode::quadrature) == doctest::Approx(ref).epsilon(1e-9));
        }
      }
    }
    CHECK(laplace_bessel_integral({1, 1, 1}, IntegralMode::closed_form) ==
          doctest::Approx(2 * std::cyl_bessel_k(0.0, 2.0)).epsilon(1e-13));
  }

  TEST_CASE("Laplace integral scaling under t -> t / s") {
    const double s = 7.0;
    const LaplaceIntegralParams p{0.8, 2.5, 1.5}, q{0.8 / s, 2.5 * s, 1.5};
    for (auto mode : {IntegralMode::closed_form, IntegralMode::quadrature}) {
      CHECK(laplace_bessel_integral(p, mode) ==
            doctest::Approx(std::pow(s, p.gamma - 1) * laplace_bessel_integral(q, mode)).epsilon(1e-11));
    }
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(LaplaceIntegralParams({0.0, 1.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LaplaceIntegralParams({1.0, -1.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LaplaceIntegralParams({1.0, 1.0, 0.5}).validate(), std::invalid_argument);
  }

  TEST_CASE("truncated integral bound") {
    const LaplaceIntegralParams p{1.0, 1.0, 2.0};
    const IncompleteBound b = incomplete_integral_bound(p);
    const double lhs = std::exp(log_incomplete_integral(p));
    CHECK(b.bound_value >= lhs);
    CHECK(lhs < laplace_bessel_integral(p, IntegralMode::closed_form));
    // beta -> infinity kills both sides
    const LaplaceIntegralParams far{1.0, 500.0, 2.0};
    CHECK(std::exp(log_incomplete_integral(far)) < 1e-200);
    CHECK(incomplete_integral_bound(far).bound_value < 1e-15);
    CHECK(incomplete_integral_bound(far).bound_value < incomplete_integral_bound({1.0, 50.0, 2.0}).bound_value);
    // log factor appears only for gamma = 1
    const LaplaceIntegralParams g1{1.0, 0.01, 1.0}, g2{1.0, 0.01, 1.0 + 1e-12};
    CHECK(log_incomplete_bound_shape(g1) - log_incomplete_bound_shape(g2) ==
          doctest::Approx(std::log(std::log(std::numbers::e + 100.0))).epsilon(1e-9));
  }

  TEST_CASE("certification is stable under concurrent requests") {
    std::vector<Certification> out(4);
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) threads.emplace_back([&out, i] { out[i] = certify_incomplete_constant(2.5); });
    for (auto& t : threads) t.join();
    for (const auto& c : out) {
      CHECK(c.wp_gamma == out[0].wp_gamma);
      CHECK(c.max_ratio <= c.wp_gamma);
      CHECK(c.min_margin >= 0.0);
    }
  }
}
