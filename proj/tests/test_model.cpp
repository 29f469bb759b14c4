#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rdecay/model.hpp"

using namespace rdecay;

namespace {

ModelManifold hyperbolic(int n, double kappa = 1.0) {
  return make_preset(PresetKind::constant_curvature, n, {{"kappa", kappa}});
}

ModelManifold damek_ricci(int m, int k) {
  return make_preset(PresetKind::damek_ricci, m + k + 1, {{"m", double(m)}, {"k", double(k)}});
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("sphere constants") {
    CHECK(sphere_constant(2) == doctest::Approx(2 * std::numbers::pi));
    CHECK(sphere_constant(3) == doctest::Approx(4 * std::numbers::pi));
    CHECK(sphere_constant(4) == doctest::Approx(2 * std::numbers::pi * std::numbers::pi));
  }

  TEST_CASE("Euclidean space") {
    const ModelManifold m = make_preset(PresetKind::euclidean, 3);
    CHECK(m.mu(2.0) == doctest::Approx(1.0));
    CHECK(area(m, 2.0) == doctest::Approx(16 * std::numbers::pi).epsilon(1e-14));
    CHECK(volume(m, 2.0) == doctest::Approx(32.0 / 3 * std::numbers::pi).epsilon(1e-10));
    CHECK(m.mu_infinity() == 0.0);
    CHECK(comparison_volume(3, 0.0, 1.0) == doctest::Approx(4.0 / 3 * std::numbers::pi).epsilon(1e-12));
  }

  TEST_CASE("hyperbolic space") {
    const ModelManifold m = hyperbolic(3);
    for (double r : {1e-6, 0.01, 0.7, 5.0, 40.0, 300.0}) {
      CAPTURE(r);
      CHECK(m.mu(r) == doctest::Approx(2.0 / std::tanh(r)).epsilon(1e-13));
      const double ref = std::log(4 * std::numbers::pi) + 2 * (r + std::log1p(-std::exp(-2 * r)) - std::log(2.0));
      CHECK(std::abs(log_area(m, r) - ref) < 1e-12 * std::max(1.0, std::abs(ref)));
    }
    CHECK(m.mu_infinity() == doctest::Approx(2.0));
    CHECK(m.spectral_bottom() == doctest::Approx(1.0));
    const ModelManifold m5 = hyperbolic(5, 0.25);
    CHECK(m5.mu(3.0) == doctest::Approx(4 * 0.5 / std::tanh(1.5)).epsilon(1e-13));
    CHECK(volume(m, 1.0) == doctest::Approx(std::numbers::pi * (std::sinh(2.0) - 2.0)).epsilon(1e-9));
  }

  TEST_CASE("Damek-Ricci profile") {
    const ModelManifold m = damek_ricci(2, 1);
    CHECK(m.dimension() == 4);
    CHECK(m.mu_infinity() == doctest::Approx(2.0));
    for (double r : {0.01, 1.0, 8.0}) {
      const double h = 0.5 * r;
      CHECK(m.mu(r) == doctest::Approx(1.5 / std::tanh(h) + 0.5 * std::tanh(h)).epsilon(1e-13));
      const double ref = 3 * std::log(2 * std::sinh(h)) + std::log(std::cosh(h));
      CHECK(log_density(m, r) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK(bishop_check(m).pass);
    CHECK_THROWS_AS(make_preset(PresetKind::damek_ricci, 5, {{"m", 2.0}, {"k", 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_preset(PresetKind::damek_ricci, 4, {{"m", 1.5}, {"k", 1.5}}), std::invalid_argument);
  }

  TEST_CASE("density is normalised at the origin") {
    for (const ModelManifold& m : {hyperbolic(3), hyperbolic(5), damek_ricci(2, 1), damek_ricci(3, 2)}) {
      CHECK(log_density(m, 1e-7) - (m.dimension() - 1) * std::log(1e-7) == doctest::Approx(0.0).epsilon(1e-10));
    }
  }

  TEST_CASE("Bishop comparison") {
    CHECK(bishop_check(hyperbolic(3)).pass);
    CHECK(bishop_check(make_preset(PresetKind::euclidean, 4)).pass);
    // the curvature bound of a model is never beaten by its own profile
    const ModelManifold dr = damek_ricci(4, 3);
    for (double r : {0.1, 1.0, 10.0}) CHECK(dr.mu(r) <= bishop_mu(dr.dimension(), dr.kappa(), r) + 1e-12);
    // hyperbolic space is not Bishop-admissible for a flat comparison
    CHECK_FALSE(bishop_check(hyperbolic(3).with_kappa(0.0)).pass);
  }

  TEST_CASE("custom tables") {
    MuTable t;
    for (int i = 1; i <= 600; ++i) {
      const double r = 0.05 * i;
      t.emplace_back(r, 2.0 / std::tanh(r) - 0.01);
    }
    const ModelManifold c = make_custom(3, 1.0, t);
    const ModelManifold h = hyperbolic(3);
    for (double r : {0.3, 2.0, 17.0}) {
      CHECK(c.mu(r) == doctest::Approx(h.mu(r) - 0.01).epsilon(1e-6));
    }
    // ln rho = ln(sinh^2 r) - 0.01 r, up to the blend below the first knot
    for (double r : {2.0, 17.0}) CHECK(std::abs(log_area(c, r) - log_area(h, r) + 0.01 * r) < 3e-4);

    // below the first knot a linear regular part is replaced by 0.3 x0 (2t^2 - t^3)
    MuTable lin;
    for (int i = 1; i <= 600; ++i) lin.emplace_back(0.05 * i, 2.0 / (0.05 * i) + 0.3 * 0.05 * i);
    const ModelManifold l = make_custom(3, 25.0, lin);
    for (double r : {0.001, 0.02, 0.049}) {
      const double tt = r / 0.05;
      CHECK(l.mu_regular(r) == doctest::Approx(0.015 * (2 * tt * tt - tt * tt * tt)).epsilon(1e-12));
      CHECK(l.mu_regular(r) <= 0.3 * r);
    }
    CHECK(regular_integral(l, 0.0, 0.05) == doctest::Approx(0.015 * 0.05 * (2.0 / 3 - 0.25)).epsilon(1e-12));
    const double e = 1e-7;
    CHECK((l.mu_regular(0.05 + e) - l.mu_regular(0.05 - e)) / (2 * e) == doctest::Approx(0.3).epsilon(1e-5));

    // constant extension beyond the last row
    CHECK(c.mu(100.0) == doctest::Approx(t.back().second).epsilon(1e-9));

    MuTable bad = t;
    for (auto& row : bad) row.second += 0.5;
    CHECK_THROWS_AS(make_custom(3, 1.0, bad), std::invalid_argument);
    MuTable unsorted = {{1.0, 3.0}, {0.5, 5.0}, {2.0, 2.5}};
    CHECK_THROWS_AS(make_custom(3, 1.0, unsorted), std::invalid_argument);
    CHECK_THROWS_AS(make_custom(3, 1.0, MuTable{{1.0, 2.0}}), std::invalid_argument);
  }

  TEST_CASE("envelope is a non-increasing majorant") {
    MuTable t;
    for (int i = 0; i <= 400; ++i) {
      const double r = 0.05 + 0.05 * i;
      t.emplace_back(r, 2.0 / std::tanh(r) - 0.5 + 0.3 * std::exp(-(r - 5) * (r - 5)));
    }
    const ModelManifold m = make_custom(3, 1.0, t);
    const MuEnvelope env = mu_envelope(m, 0.5, 20.0);
    double prev = env(0.5);
    for (int i = 1; i <= 5000; ++i) {
      const double r = 0.5 + 19.5 * i / 5000.0;
      CHECK(env(r) >= m.mu(r));
      CHECK(env(r) <= prev + kBishopTolerance);
      prev = env(r);
    }
    // monotone presets are their own envelope
    const ModelManifold h = hyperbolic(3);
    const MuEnvelope eh = mu_envelope(h, 1.0, 30.0);
    CHECK(eh(4.0) == doctest::Approx(h.mu(4.0)).epsilon(1e-14));
  }

  TEST_CASE("invalid presets") {
    CHECK_THROWS_AS(make_preset(PresetKind::euclidean, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_preset(PresetKind::constant_curvature, 3, {{"kappa", -1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(preset_from_string("sphere"), std::invalid_argument);
  }
}
