#include "rdecay/resolvent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "rdecay/error.hpp"
#include "rdecay/quadrature.hpp"
#include "rdecay/specfun.hpp"

namespace rdecay {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogSpacing = 1.02;    // ratio of consecutive radii below r = 1
constexpr double kUniformSpacing = 0.025;
constexpr double kTailSpacing = 0.1;

std::vector<double> build_grid(double r_min, double r_max, int grid_points, const std::vector<double>& extra) {
  struct Point {
    double r;
    bool pinned;
  };
  std::vector<Point> pts;
  const double log_end = std::min(1.0, r_max);
  const int nlog = std::max(2, static_cast<int>(std::ceil(std::log(log_end / r_min) / std::log(kLogSpacing))));
  for (int i = 0; i <= nlog; ++i) pts.push_back({r_min * std::pow(log_end / r_min, static_cast<double>(i) / nlog), false});
  pts.front().r = r_min;
  pts.back().r = log_end;
  if (r_max > log_end) {
    const int nu = grid_points > 0 ? grid_points
                                   : std::max(100, static_cast<int>(std::ceil((r_max - log_end) / kUniformSpacing)));
    for (int i = 1; i <= nu; ++i) pts.push_back({log_end + (r_max - log_end) * i / nu, false});
    pts.back().r = r_max;
  }
  for (double r : extra) {
    if (r > r_min && r < r_max) pts.push_back({r, true});
  }
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.r < b.r; });
  std::vector<double> out;
  std::vector<bool> pinned;
  for (const Point& p : pts) {
    if (!out.empty() && p.r - out.back() < 1e-7 * std::max(1.0, p.r)) {
      if (p.pinned) {
        out.back() = p.r;
        pinned.back() = true;
      }
      continue;
    }
    out.push_back(p.r);
    pinned.push_back(p.pinned);
  }
  return out;
}

// int_a^b exp(p(r)) dr with p the cubic Hermite interpolant of (la, sa), (lb, sb).
double panel_integral(double a, double b, double la, double lb, double sa, double sb, double from) {
  const double h = b - a;
  const auto p = [&](double r) {
    const double t = (r - a) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * la + h10 * h * sa + h01 * lb + h11 * h * sb;
  };
  const double top = std::max(la, lb);
  const double v = quad::gauss_legendre([&](double r) { return std::exp(p(r) - top); }, from, b);
  return v * std::exp(top);
}

double hermite(double a, double b, double la, double lb, double sa, double sb, double r) {
  const double h = b - a;
  const double t = (r - a) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  return h00 * la + h10 * h * sa + h01 * lb + h11 * h * sb;
}

// Psi on an increasing grid from ln psi_bar and its slope; returns the tail rate.
double integrate_extraglobular(const std::vector<double>& grid, const std::vector<double>& log_psi,
                               const std::vector<double>& slope, std::vector<double>& Psi) {
  const std::size_t n = grid.size();
  const double tail_rate = -slope.back();
  if (!(tail_rate > 0.0)) {
    throw NumericalError("spherical sums do not decay at r=" + std::to_string(grid.back()) +
                         " (log-slope " + std::to_string(slope.back()) + ")");
  }
  Psi.assign(n, 0.0);
  Psi[n - 1] = -std::exp(log_psi.back()) / tail_rate;
  for (std::size_t i = n - 1; i-- > 0;) {
    Psi[i] = Psi[i + 1] -
             panel_integral(grid[i], grid[i + 1], log_psi[i], log_psi[i + 1], slope[i], slope[i + 1], grid[i]);
  }
  return tail_rate;
}

std::size_t panel_index(const std::vector<double>& grid, double r) {
  if (r < grid.front() || r > grid.back()) throw std::out_of_range("radius outside the grid");
  auto it = std::upper_bound(grid.begin(), grid.end(), r);
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  if (i == 0) return 0;
  return std::min(i - 1, grid.size() - 2);
}

using State = std::array<double, 2>;

}  // namespace

double sum_decay_rate(double mu, double lambda) {
  // -mu/2 + sqrt(mu^2/4 + lambda) without cancellation for large mu.
  const double root = std::sqrt(0.25 * mu * mu + lambda);
  return mu > 0.0 ? lambda / (0.5 * mu + root) : -0.5 * mu + root;
}

double default_r_max(const ModelManifold& m, double lambda, double r0) {
  return r0 + std::log(1e14) / sum_decay_rate(m.mu_infinity(), lambda);
}

std::size_t RadialResolvent::nearest_index(double r) const {
  const std::size_t i = panel_index(grid, r);
  return (r - grid[i] <= grid[i + 1] - r) ? i : i + 1;
}

double RadialResolvent::log_u_at(double r) const {
  const std::size_t i = panel_index(grid, r);
  return hermite(grid[i], grid[i + 1], log_u[i], log_u[i + 1], beta[i], beta[i + 1], r);
}

double RadialResolvent::log_psi_slope(std::size_t i) const { return model.mu(grid[i]) + beta[i]; }

RadialResolvent solve_radial(const ModelManifold& m, double lambda, const SolverConfig& cfg) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("solve_radial: lambda must be > 0");
  if (!(cfg.r_min > 0.0)) throw std::invalid_argument("solve_radial: r_min must be > 0");
  const double r_max = cfg.r_max > 0.0 ? cfg.r_max : default_r_max(m, lambda, cfg.r0);
  if (!(r_max > 10.0 * cfg.r_min)) throw std::invalid_argument("solve_radial: r_max must exceed 10 r_min");

  RadialResolvent res;
  res.model = m;
  res.lambda = lambda;
  std::vector<double> extra = cfg.extra_radii;
  extra.push_back(cfg.r0);
  res.grid = build_grid(cfg.r_min, r_max, cfg.grid_points, extra);

  // Extend until psi_bar has dropped by ~1e-16, then start far enough out that the
  // growing mode (relative rate >= 2 sqrt(lambda)) is suppressed below 1e-12.
  const double a_est = sum_decay_rate(m.mu_infinity(), lambda);
  const double r_far = r_max + std::log(1e16) / a_est;
  const int n_tail = std::clamp(static_cast<int>(std::ceil((r_far - r_max) / kTailSpacing)), 20, 400000);
  for (int i = 1; i <= n_tail; ++i) res.tail_grid.push_back(r_max + (r_far - r_max) * i / n_tail);
  res.r_start = r_far + std::log(1e12) / (2.0 * std::sqrt(lambda));

  // Riccati form: beta = u'/u satisfies beta' = lambda - mu beta - beta^2.
  const auto system = [&m, lambda](const State& y, State& dy, double r) {
    dy[0] = lambda - m.mu(r) * y[0] - y[0] * y[0];
    dy[1] = y[0];
  };
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(cfg.abs_tol, cfg.rel_tol);

  const std::size_t n_main = res.grid.size();
  const std::size_t n_all = n_main + res.tail_grid.size();
  std::vector<double> all_r(n_all), all_beta(n_all), all_logu(n_all);
  for (std::size_t i = 0; i < n_main; ++i) all_r[i] = res.grid[i];
  for (std::size_t i = 0; i < res.tail_grid.size(); ++i) all_r[n_main + i] = res.tail_grid[i];

  const double mu_start = m.mu(res.r_start);
  State y{-0.5 * mu_start - std::sqrt(0.25 * mu_start * mu_start + lambda), 0.0};
  double r = res.r_start;
  double log_u = 0.0;
  try {
    for (std::size_t k = n_all; k-- > 0;) {
      const double target = all_r[k];
      // Integrate each segment from ln u = 0 so the step control acts on the increment.
      y[1] = 0.0;
      ode::integrate_adaptive(stepper, system, y, r, target, target - r);
      log_u += y[1];
      r = target;
      all_beta[k] = y[0];
      all_logu[k] = log_u;
    }
  } catch (const std::exception& e) {
    throw NumericalError(std::string("solve_radial: integration failed near r=") + std::to_string(r) + ": " +
                         e.what());
  }

  std::vector<double> all_log_area = log_area_on_grid(m, all_r);

  // Flux matching at r_min with u ~ a G(r) + b, G the flat Green's function.
  const int n = m.dimension();
  const double c = sphere_constant(n);
  const double rm = all_r[0];
  const double b0 = all_beta[0];
  double G, dG;
  if (n == 2) {
    G = -std::log(rm) / (2.0 * kPi);
    dG = -1.0 / (2.0 * kPi * rm);
  } else {
    G = std::pow(rm, 2.0 - n) / ((n - 2) * c);
    dG = -std::pow(rm, 1.0 - n) / c;
  }
  const double a_rel = b0 / dG;           // a / u(r_min)
  const double b_rel = 1.0 - a_rel * G;   // b / u(r_min)
  double inner_rel;                       // int_0^{r_min} A u / u(r_min)
  if (n == 2) {
    inner_rel = a_rel * (0.25 * rm * rm - 0.5 * rm * rm * std::log(rm)) + b_rel * kPi * rm * rm;
  } else {
    inner_rel = a_rel * rm * rm / (2.0 * (n - 2)) + b_rel * c * std::pow(rm, n) / n;
  }
  const double flux_rel = std::exp(all_log_area[0]) * b0;  // A u' / u at r_min
  const double origin_flux_rel = flux_rel - lambda * inner_rel;
  if (!(origin_flux_rel < 0.0) || std::abs(lambda * inner_rel) > 1e-3 * std::abs(flux_rel)) {
    throw NumericalError("solve_radial: flux matching failed at r_min=" + std::to_string(rm) +
                         "; retry with r_min=" + std::to_string(rm / 10.0));
  }
  const double shift = -std::log(-origin_flux_rel) - all_logu[0];

  res.u.resize(n_main);
  res.du.resize(n_main);
  res.log_u.resize(n_main);
  res.beta.assign(all_beta.begin(), all_beta.begin() + static_cast<long>(n_main));
  res.log_area.assign(all_log_area.begin(), all_log_area.begin() + static_cast<long>(n_main));
  for (std::size_t i = 0; i < n_main; ++i) {
    res.log_u[i] = all_logu[i] + shift;
    res.u[i] = std::exp(res.log_u[i]);
    res.du[i] = res.u[i] * res.beta[i];
  }
  res.inner_mass = inner_rel * std::exp(res.log_u[0]);
  for (std::size_t i = n_main; i < n_all; ++i) {
    res.tail_log_psi.push_back(all_log_area[i] + all_logu[i] + shift);
    res.tail_slope.push_back(m.mu(all_r[i]) + all_beta[i]);
  }

  const SphericalSums sums = spherical_sums(res);
  res.norm_residual = std::abs(lambda * (res.inner_mass - sums.Psi.front()) - 1.0);
  return res;
}

SphericalSums spherical_sums(const RadialResolvent& res) {
  const std::size_t n_main = res.grid.size();
  std::vector<double> grid = res.grid;
  std::vector<double> logs(n_main), slope(n_main);
  for (std::size_t i = 0; i < n_main; ++i) {
    logs[i] = res.log_psi_bar(i);
    slope[i] = res.log_psi_slope(i);
  }
  grid.insert(grid.end(), res.tail_grid.begin(), res.tail_grid.end());
  logs.insert(logs.end(), res.tail_log_psi.begin(), res.tail_log_psi.end());
  slope.insert(slope.end(), res.tail_slope.begin(), res.tail_slope.end());

  SphericalSums s;
  s.lambda = res.lambda;
  s.from_resolvent = true;
  std::vector<double> Psi;
  s.tail_rate = integrate_extraglobular(grid, logs, slope, Psi);
  s.grid.assign(grid.begin(), grid.begin() + static_cast<long>(n_main));
  s.log_psi_bar.assign(logs.begin(), logs.begin() + static_cast<long>(n_main));
  s.log_slope.assign(slope.begin(), slope.begin() + static_cast<long>(n_main));
  s.Psi.assign(Psi.begin(), Psi.begin() + static_cast<long>(n_main));
  s.psi_bar.resize(n_main);
  for (std::size_t i = 0; i < n_main; ++i) s.psi_bar[i] = std::exp(s.log_psi_bar[i]);
  return s;
}

SphericalSums make_spherical_sums(std::vector<double> grid, std::vector<double> log_psi_bar,
                                  std::vector<double> log_slope, double lambda) {
  if (grid.size() < 2 || grid.size() != log_psi_bar.size() || grid.size() != log_slope.size()) {
    throw std::invalid_argument("make_spherical_sums: grid, values and slopes must have equal length >= 2");
  }
  SphericalSums s;
  s.lambda = lambda;
  s.tail_rate = integrate_extraglobular(grid, log_psi_bar, log_slope, s.Psi);
  s.grid = std::move(grid);
  s.log_psi_bar = std::move(log_psi_bar);
  s.log_slope = std::move(log_slope);
  s.psi_bar.resize(s.grid.size());
  for (std::size_t i = 0; i < s.grid.size(); ++i) s.psi_bar[i] = std::exp(s.log_psi_bar[i]);
  return s;
}

double SphericalSums::psi_bar_at(double r) const {
  const std::size_t i = panel_index(grid, r);
  return std::exp(hermite(grid[i], grid[i + 1], log_psi_bar[i], log_psi_bar[i + 1], log_slope[i], log_slope[i + 1], r));
}

double SphericalSums::Psi_at(double r) const {
  const std::size_t i = panel_index(grid, r);
  return Psi[i + 1] -
         panel_integral(grid[i], grid[i + 1], log_psi_bar[i], log_psi_bar[i + 1], log_slope[i], log_slope[i + 1], r);
}

double flux(const RadialResolvent& res, std::size_t i) {
  const double b = res.beta.at(i);
  const double mag = std::exp(res.log_area[i] + res.log_u[i] + std::log(std::abs(b)));
  return b < 0.0 ? -mag : mag;
}

double flux_at(const RadialResolvent& res, double r) {
  const std::size_t i = res.nearest_index(r);
  if (std::abs(res.grid[i] - r) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument("flux_at: r=" + std::to_string(r) + " is not a grid point");
  }
  return flux(res, i);
}

double log_closed_form_euclidean(int n, double lambda, double r) {
  if (n < 2 || !(lambda > 0.0) || !(r > 0.0)) throw std::invalid_argument("closed_form_euclidean: bad arguments");
  const double nu = 0.5 * n - 1.0;
  const double sl = std::sqrt(lambda);
  return -0.5 * n * std::log(4.0 * kPi) + std::log(2.0) + nu * std::log(2.0 * sl / r) +
         specfun::log_bessel_k(nu, sl * r);
}

double closed_form_euclidean(int n, double lambda, double r) { return std::exp(log_closed_form_euclidean(n, lambda, r)); }

double log_closed_form_hyperbolic3(double lambda, double r) {
  if (!(lambda > 0.0) || !(r > 0.0)) throw std::invalid_argument("closed_form_hyperbolic3: bad arguments");
  // 1/sinh r = 2 e^-r / (1 - e^-2r)
  return -std::sqrt(1.0 + lambda) * r - r + std::log(2.0) - std::log(-std::expm1(-2.0 * r)) - std::log(4.0 * kPi);
}

double closed_form_hyperbolic3(double lambda, double r) { return std::exp(log_closed_form_hyperbolic3(lambda, r)); }

double laplace_transform_heat_kernel(HeatKernelKind kind, int n_or_m, double lambda, double r) {
  if (!(lambda > 0.0) || !(r > 0.0)) throw std::invalid_argument("laplace_transform_heat_kernel: bad arguments");
  quad::Integrand log_p;
  if (kind == HeatKernelKind::euclidean) {
    if (n_or_m < 1) throw std::invalid_argument("laplace_transform_heat_kernel: dimension must be >= 1");
    const int n = n_or_m;
    log_p = [n, r](double t) { return -0.5 * n * std::log(4.0 * kPi * t) - r * r / (4.0 * t); };
  } else {
    if (n_or_m != 2 && n_or_m != 3) throw std::invalid_argument("hyperbolic3 kernel needs m = 2 (n = 3)");
    const double log_r_over_sinh = std::log(r) - r - std::log(-std::expm1(-2.0 * r)) + std::log(2.0);
    log_p = [r, log_r_over_sinh](double t) {
      return -1.5 * std::log(4.0 * kPi * t) + log_r_over_sinh - t - r * r / (4.0 * t);
    };
  }
  const auto phi = [&](double s) {
    const double t = std::exp(s);
    return -lambda * t + log_p(t) + s;
  };
  return std::exp(quad::log_integral_exp(phi, -quad::kInf, quad::kInf, 1e-13));
}

TwoSidedReport hyperbolic_twosided_check(int m, double lambda, const RadialResolvent& res) {
  const ModelManifold& model = res.model;
  if (model.kind() != PresetKind::constant_curvature || model.dimension() != m + 1 ||
      std::abs(model.kappa() - 1.0) > 1e-12) {
    throw std::invalid_argument("hyperbolic_twosided_check needs a constant_curvature model with n = m+1, kappa = 1");
  }
  const double nu2 = 0.25 * m * m + lambda;
  const double nu = std::sqrt(nu2);
  const double order = 0.5 * (m - 1);
  TwoSidedReport rep;
  rep.expected_rate = 0.5 * m + nu;

  double lo = quad::kInf, hi = -quad::kInf;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const double r = res.grid[i];
    if (r < 1.0) continue;
    const double t1 = 0.5 * std::log(r) + 0.5 * m * std::log1p(1.0 / r) + 0.25 * (m - 1) * std::log(nu2) -
                      0.5 * m * r + specfun::log_bessel_k(std::abs(order), nu * r);
    const double t2 = std::log1p(1.0 / r) - rep.expected_rate * r;
    const double top = std::max(t1, t2);
    const double log_shape = top + std::log(std::exp(t1 - top) + std::exp(t2 - top));
    const double lr = res.log_u[i] - log_shape;
    lo = std::min(lo, lr);
    hi = std::max(hi, lr);
  }
  rep.lower_constant = std::exp(lo);
  rep.upper_constant = std::exp(hi);
  rep.constant_ratio = std::exp(hi - lo);

  // Least-squares slope of ln u over the outer 40% of [1, r_max].
  const double r_a = 1.0 + 0.6 * (res.r_max() - 1.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (res.grid[i] < r_a) continue;
    const double x = res.grid[i], yv = res.log_u[i];
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
    ++count;
  }
  if (count >= 20) {
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    rep.fitted_rate = -slope;
    rep.rate_rel_error = std::abs(rep.fitted_rate - rep.expected_rate) / rep.expected_rate;
  } else {
    rep.rate_rel_error = quad::kInf;
  }
  rep.pass = std::isfinite(rep.constant_ratio) && rep.constant_ratio < 1e3 && rep.rate_rel_error < 0.01;
  return rep;
}

}  // namespace rdecay
