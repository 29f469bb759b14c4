#include "rdecay/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "rdecay/bounds.hpp"
#include "rdecay/model.hpp"
#include "rdecay/quadrature.hpp"
#include "rdecay/resolvent.hpp"
#include "rdecay/specfun.hpp"

namespace rdecay {

namespace {

using Check = std::function<CheckResult()>;

CheckResult upper(std::string name, double measured, double tol, std::string detail = {}) {
  return {{}, std::move(name), measured <= tol, measured, tol, std::move(detail)};
}

struct Named {
  std::string label;
  ModelManifold model;
};

std::vector<Named> presets() {
  return {
      {"euclidean n=3", make_preset(PresetKind::euclidean, 3)},
      {"constant_curvature n=3 kappa=1", make_preset(PresetKind::constant_curvature, 3, {{"kappa", 1.0}})},
      {"constant_curvature n=5 kappa=1", make_preset(PresetKind::constant_curvature, 5, {{"kappa", 1.0}})},
      {"damek_ricci m=2 k=1", make_preset(PresetKind::damek_ricci, 4, {{"m", 2.0}, {"k", 1.0}})},
  };
}

MuTable sample_table(const ModelManifold& m, double r_lo, double r_hi, int count) {
  MuTable t;
  const double a = std::log(r_lo), b = std::log(r_hi);
  for (int i = 0; i < count; ++i) {
    const double r = std::exp(a + (b - a) * i / (count - 1));
    t.emplace_back(r, m.mu(r));
  }
  return t;
}

// Bumped profile: constant curvature plus a negative dip with a local maximum near r = 5.
ModelManifold bumped_custom() {
  MuTable t;
  for (int i = 0; i <= 400; ++i) {
    const double r = 0.05 + 0.05 * i;
    const double base = 2.0 / std::tanh(r);
    t.emplace_back(r, base - 0.5 + 0.3 * std::exp(-(r - 5.0) * (r - 5.0)));
  }
  return make_custom(3, 1.0, t);
}

std::vector<Check> model_checks() {
  std::vector<Check> c;
  c.push_back([] {
    double worst = 0.0;
    auto models = presets();
    models.push_back({"custom", bumped_custom()});
    for (const auto& [label, m] : models) {
      const double r = 1e-4;
      worst = std::max(worst, std::abs(std::expm1(log_density(m, r) - (m.dimension() - 1) * std::log(r))));
    }
    return upper("density normalised at the origin", worst, 1e-8);
  });
  c.push_back([] {
    const ModelManifold m = bumped_custom();
    const MuEnvelope env = mu_envelope(m, 0.5, 20.0);
    double worst_rise = 0.0, worst_below = 0.0;
    double prev = env(0.5);
    for (int i = 1; i <= 4000; ++i) {
      const double r = 0.5 + 19.5 * i / 4000.0;
      const double v = env(r);
      worst_rise = std::max(worst_rise, v - prev);
      worst_below = std::max(worst_below, m.mu(r) - v);
      prev = v;
    }
    return upper("envelope non-increasing and above mu", std::max(worst_rise, worst_below), kBishopTolerance);
  });
  c.push_back([] {
    double worst = 0.0;
    for (const auto& [label, m] : presets()) {
      if (!bishop_check(m).pass) return CheckResult{{}, "curvature comparison on presets", false, 1.0, 0.0, label};
      for (double r = 0.1; r <= 30.0; r += 0.1) {
        worst = std::max(worst, std::expm1(log_area(m, r) - log_comparison_area(m.dimension(), m.kappa(), r)));
      }
    }
    return upper("area below comparison area", worst, 1e-8);
  });
  c.push_back([] {
    MuTable t;
    for (int i = 1; i <= 50; ++i) {
      const double r = 0.1 * i;
      t.emplace_back(r, 2.0 / std::tanh(r) + 1.0);
    }
    bool rejected = false;
    try {
      make_custom(3, 1.0, t);
    } catch (const std::invalid_argument&) {
      rejected = true;
    }
    return CheckResult{{}, "excess curvature profile rejected", rejected, rejected ? 0.0 : 1.0, 0.0, {}};
  });
  c.push_back([] {
    const ModelManifold dr = make_preset(PresetKind::damek_ricci, 4, {{"m", 2.0}, {"k", 1.0}});
    const ModelManifold custom = make_custom(4, dr.kappa(), sample_table(dr, 1e-5, 60.0, 3000));
    double worst = 0.0;
    for (double r = 0.1; r <= 20.0; r += 0.05) {
      worst = std::max(worst, std::abs(std::expm1(log_density(custom, r) - log_density(dr, r))));
    }
    return upper("custom table reproduces preset density", worst, 1e-6);
  });
  return c;
}

std::vector<Check> specfun_checks() {
  using namespace specfun;
  std::vector<Check> c;
  c.push_back([] {
    double worst = 0.0;
    for (double nu : {0.0, 0.5, 1.0, 2.3}) {
      for (double x = 0.5; x <= 20.0; x += 0.25) {
        const double h = 1e-2 * std::min(x, 2.0);
        const double k0 = bessel_k(nu, x);
        const double kp = bessel_k(nu, x + h), km = bessel_k(nu, x - h);
        const double kp2 = bessel_k(nu, x + 2 * h), km2 = bessel_k(nu, x - 2 * h);
        const double d2 = (-kp2 + 16 * kp - 30 * k0 + 16 * km - km2) / (12 * h * h);
        const double d1 = (-kp2 + 8 * kp - 8 * km + km2) / (12 * h);
        const double scale = x * x * std::abs(d2) + x * std::abs(d1) + (x * x + nu * nu) * k0;
        worst = std::max(worst, std::abs(x * x * d2 + x * d1 - (x * x + nu * nu) * k0) / scale);
      }
    }
    return upper("Bessel equation residual", worst, 1e-6);
  });
  c.push_back([] {
    double worst = 0.0;
    for (double nu : {0.5, 1.5, 2.5}) {
      for (double x : {0.1, 1.0, 5.0, 20.0}) {
        const double q = bessel_k_eval(nu, x, BesselMethod::quadrature).log_value;
        const double e = bessel_k_eval(nu, x, BesselMethod::closed_half_integer).log_value;
        worst = std::max(worst, std::abs(std::expm1(q - e)));
      }
    }
    return upper("half-integer orders match closed form", worst, 1e-12);
  });
  c.push_back([] {
    double worst = 0.0;
    const double grid[] = {0.01, 0.1, 1.0, 10.0, 100.0};
    for (double a : grid) {
      for (double b : grid) {
        for (double g : {1.0, 1.5, 3.0}) {
          const LaplaceIntegralParams p{a, b, g};
          worst = std::max(worst, std::abs(std::expm1(log_laplace_bessel_integral(p, IntegralMode::closed_form) -
                                                      log_laplace_bessel_integral(p, IntegralMode::quadrature))));
        }
      }
    }
    return upper("Laplace integral identity", worst, 1e-8);
  });
  c.push_back([] {
    double worst = 0.0;
    for (double nu : {0.0, 1.0, 2.5}) {
      for (double x = 10.0; x <= 100.0; x += 1.0) {
        const double dev = std::expm1(log_bessel_k(nu, x) + 0.5 * std::log(2.0 * x / std::numbers::pi) + x);
        worst = std::max(worst, x * std::abs(dev) / std::max(1.0, std::abs(4 * nu * nu - 1) / 8.0));
      }
    }
    return upper("large-argument asymptotics, x |dev| / leading coefficient", worst, 1.5);
  });
  c.push_back([] {
    double worst = -quad::kInf;
    for (double g : {1.0, 1.5, 2.0, 2.5}) worst = std::max(worst, -certify_incomplete_constant(g).min_margin);
    return upper("truncated integral bound holds on the certification grid", worst, 0.0);
  });
  c.push_back([] {
    const double worst = std::max({std::abs(gamma_fn(0.5) / std::sqrt(std::numbers::pi) - 1.0),
                                   std::abs(gamma_fn(5.0) / 24.0 - 1.0),
                                   std::abs(gamma_fn(4.7) / (3.7 * gamma_fn(3.7)) - 1.0)});
    return upper("Gamma values and recurrence", worst, 1e-12);
  });
  return c;
}

// Fourth-order central second difference of u on the uniform section, in units of u.
double ode_residual(const RadialResolvent& res) {
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < res.size(); ++i) {
    const double r = res.grid[i];
    if (r < 1.0 + 1e-9 || res.grid[i + 2] > res.r_max()) continue;
    const double h = res.grid[i + 1] - r;
    if (std::abs(r - res.grid[i - 1] - h) > 1e-9 * h || std::abs(res.grid[i + 2] - res.grid[i + 1] - h) > 1e-9 * h ||
        std::abs(res.grid[i - 1] - res.grid[i - 2] - h) > 1e-9 * h) {
      continue;
    }
    const auto rel = [&](std::size_t j) { return std::exp(res.log_u[j] - res.log_u[i]); };
    const double d2 = (-rel(i + 2) + 16 * rel(i + 1) - 30.0 + 16 * rel(i - 1) - rel(i - 2)) / (12 * h * h);
    const double mu = res.model.mu(r);
    const double d1 = res.beta[i];
    const double scale = std::abs(d2) + std::abs(mu * d1) + res.lambda;
    worst = std::max(worst, std::abs(d2 + mu * d1 - res.lambda) / scale);
  }
  return worst;
}

std::vector<Check> resolvent_checks() {
  std::vector<Check> c;
  for (const auto& named : presets()) {
    c.push_back([named] {
      double res_worst = 0.0, mass = 0.0, flux_err = 0.0, sign = 0.0;
      for (double lam : {0.1, 1.0, 10.0}) {
        const RadialResolvent res = solve_radial(named.model, lam);
        mass = std::max(mass, res.norm_residual);
        const SphericalSums s = spherical_sums(res);
        for (std::size_t i = 0; i < res.size(); ++i) {
          const double f = flux(res, i);
          flux_err = std::max(flux_err, std::abs(f - lam * s.Psi[i]) / std::abs(lam * s.Psi[i]));
          if (!(f < 0.0) || !(res.beta[i] < 0.0)) sign = 1.0;
        }
        SolverConfig fine;
        fine.grid_points = static_cast<int>((default_r_max(named.model, lam, 1.0) - 1.0) / 0.01);
        res_worst = std::max(res_worst, ode_residual(solve_radial(named.model, lam, fine)));
      }
      CheckResult r = upper("ODE residual, mass, flux on " + named.label, std::max({res_worst, mass, flux_err}), 1e-6);
      r.pass = r.pass && sign == 0.0;
      r.detail = "residual " + std::to_string(res_worst) + ", mass " + std::to_string(mass) + ", flux " +
                 std::to_string(flux_err) + (sign == 0.0 ? "" : ", sign violation");
      return r;
    });
  }
  c.push_back([] {
    double worst = 0.0;
    for (double lam : {0.5, 1.0, 2.0}) {
      const RadialResolvent e = solve_radial(make_preset(PresetKind::euclidean, 3), lam);
      const RadialResolvent h = solve_radial(make_preset(PresetKind::constant_curvature, 3, {{"kappa", 1.0}}), lam);
      for (double r = 0.1; r <= 20.0; r += 0.1) {
        worst = std::max(worst, std::abs(std::expm1(e.log_u_at(r) - log_closed_form_euclidean(3, lam, r))));
        worst = std::max(worst, std::abs(std::expm1(h.log_u_at(r) - log_closed_form_hyperbolic3(lam, r))));
      }
    }
    return upper("closed-form kernels reproduced", worst, 1e-6);
  });
  c.push_back([] {
    double worst = -quad::kInf;
    for (const auto& [label, m] : presets()) {
      const RadialResolvent a = solve_radial(m, 0.5), b = solve_radial(m, 2.0);
      for (double r = 0.1; r <= 20.0; r += 0.1) worst = std::max(worst, b.log_u_at(r) - a.log_u_at(r));
    }
    return upper("kernel decreasing in lambda", worst, 0.0);
  });
  c.push_back([] {
    const RadialResolvent res = solve_radial(make_preset(PresetKind::constant_curvature, 3, {{"kappa", 1.0}}), 1.0);
    const TwoSidedReport rep = hyperbolic_twosided_check(2, 1.0, res);
    CheckResult r = upper("two-sided hyperbolic estimate", rep.rate_rel_error, 0.01,
                          "constant ratio " + std::to_string(rep.constant_ratio));
    r.pass = rep.pass;
    return r;
  });
  return c;
}

std::vector<Check> bounds_checks() {
  std::vector<Check> c;
  for (const auto& named : presets()) {
    c.push_back([named] {
      int violations = 0;
      double ric = 0.0, di_worst = -quad::kInf, uniform_gap = -quad::kInf;
      bool di_pass = true;
      for (double lam : {0.1, 1.0, 10.0}) {
        SolverConfig cfg;
        cfg.extra_radii = {0.5, 1.0, 2.0};
        const RadialResolvent res = solve_radial(named.model, lam, cfg);
        const SphericalSums sums = spherical_sums(res);
        for (double r0 : {0.5, 1.0, 2.0}) {
          const DecayBound b = main_bound(res, r0);
          for (std::size_t i = 0; i < res.size(); ++i) {
            const double r = res.grid[i];
            if (r < r0) continue;
            if (res.log_psi_bar(i) > b.log_evaluator(r)) ++violations;
            uniform_gap = std::max(uniform_gap, b.log_evaluator(r) - std::log(b.uniform(r)));
          }
          const MuEnvelope& env = b.envelope();
          const RiccatiSolution sol = riccati_solve([&env](double s) { return env(s); }, lam, r0, res.r_max());
          ric = std::max({ric, sol.max_excess, sol.max_decrease});
          const DiffIneqReport di = diff_ineq_check(sums, [&env](double s) { return env(s); }, lam, r0);
          di_pass = di_pass && di.pass;
          di_worst = std::max(di_worst, -di.min_scaled);
        }
      }
      CheckResult r{{}, "bound dominance, Riccati, pairing on " + named.label,
                    violations == 0 && ric <= 1e-9 && di_pass && uniform_gap <= 1e-12, static_cast<double>(violations),
                    0.0, {}};
      r.detail = "riccati " + std::to_string(ric) + ", pairing " + std::to_string(di_worst) + ", uniform gap " +
                 std::to_string(uniform_gap);
      return r;
    });
  }
  c.push_back([] {
    double worst = 0.0;
    for (double m : {0.0, 1.0, 3.0}) {
      for (double lam : {0.1, 1.0, 10.0}) {
        const RiccatiSolution sol = riccati_solve([m](double) { return m; }, lam, 1.0, 30.0);
        for (double b : sol.beta) worst = std::max(worst, std::abs(b - beta_minus(m, lam)));
      }
    }
    return upper("constant profile is stationary", worst, 0.0);
  });
  c.push_back([] {
    double worst = -quad::kInf;
    for (const auto& [label, m] : presets()) {
      for (double lam : {0.1, 1.0, 10.0}) {
        const double a = alpha_infinity(lam, m.kappa(), m.dimension());
        if (!(a > 0.0)) return CheckResult{{}, "rate ordering", false, a, 0.0, label};
        worst = std::max(worst, a - expected_rates(m, lam).spherical_sum);
      }
    }
    return upper("uniform rate below exact rate", worst, 1e-12);
  });
  c.push_back([] {
    double worst = -quad::kInf;
    for (const auto& [label, m] : presets()) {
      for (double lam : {0.5, 2.0}) {
        const RadialResolvent res = solve_radial(m, lam);
        for (double r = 0.5; r <= 15.0; r += 0.05) {
          worst = std::max(worst, log_lower_bound(m.dimension(), m.kappa(), lam, r) - res.log_u_at(r));
        }
      }
    }
    return upper("comparison lower bound", worst, -std::log1p(-1e-6));
  });
  c.push_back([] {
    double worst = 0.0;
    for (int m : {2, 4}) {
      for (double lam : {0.5, 1.0, 3.0}) {
        const ModelManifold h = make_preset(PresetKind::constant_curvature, m + 1, {{"kappa", 1.0}});
        const RadialResolvent res = solve_radial(h, lam);
        const ExpectedRates e = expected_rates(h, lam);
        std::vector<double> logs(res.size());
        for (std::size_t i = 0; i < res.size(); ++i) logs[i] = res.log_psi_bar(i);
        const RateFit s = rate_fit_log(res.grid, logs, 10.0, 25.0, e.spherical_sum);
        const RateFit p = rate_fit_log(res.grid, res.log_u, 10.0, 25.0, e.pointwise);
        worst = std::max({worst, std::abs(s.fitted_rate / s.expected_rate - 1.0),
                          std::abs(p.fitted_rate / p.expected_rate - 1.0)});
      }
    }
    return upper("fitted rates on saturating models", worst, 0.01);
  });
  c.push_back([] {
    const RadialResolvent res = solve_radial(make_preset(PresetKind::euclidean, 3), 1.0, {.extra_radii = {1.0, 3.0}});
    double worst = 0.0;
    for (double r0 : {1.0, 3.0}) {
      const CoefficientBound cb = coefficient_upper_bound(3, 0.0, 1.0, 4.0 * std::numbers::pi / 3.0, 0.0, 1.0, r0);
      worst = std::max(worst, std::exp(res.log_psi_bar(res.nearest_index(r0))) / cb.full);
    }
    return upper("coefficient bound dominates sphere sums", worst, 1.0);
  });
  return c;
}

}  // namespace

std::vector<std::string> suite_names() { return {"model", "specfun", "resolvent", "bounds"}; }

std::vector<CheckResult> run_suite(const std::string& suite) {
  const std::vector<std::string> known = suite_names();
  std::vector<std::string> names;
  if (suite == "all") {
    names = known;
  } else if (std::find(known.begin(), known.end(), suite) != known.end()) {
    names = {suite};
  } else {
    throw std::invalid_argument("unknown suite '" + suite + "'");
  }
  std::vector<CheckResult> out;
  for (const std::string& s : names) {
    std::vector<Check> checks;
    if (s == "model") checks = model_checks();
    if (s == "specfun") checks = specfun_checks();
    if (s == "resolvent") checks = resolvent_checks();
    if (s == "bounds") checks = bounds_checks();
    for (const Check& check : checks) {
      CheckResult r;
      try {
        r = check();
      } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
        r.measured = quad::kInf;
      }
      r.suite = s;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace rdecay
