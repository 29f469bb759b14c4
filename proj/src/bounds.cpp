#include "rdecay/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <boost/numeric/odeint.hpp>

#include "rdecay/error.hpp"
#include "rdecay/quadrature.hpp"
#include "rdecay/specfun.hpp"

namespace rdecay {

double beta_minus(double mu, double lambda) { return -0.5 * mu - std::sqrt(0.25 * mu * mu + lambda); }

double beta_plus(double mu, double lambda) {
  // lambda / (mu/2 + root) avoids cancellation for mu >> sqrt(lambda).
  const double root = std::sqrt(0.25 * mu * mu + lambda);
  return mu > 0.0 ? lambda / (0.5 * mu + root) : -0.5 * mu + root;
}

RiccatiSolution riccati_solve(const RadialFunction& mu_env, double lambda, double r0, double r_max,
                              std::vector<double> grid) {
  if (!(lambda > 0.0)) throw std::invalid_argument("riccati_solve: lambda must be > 0");
  if (!(r0 > 0.0) || !(r_max > r0)) throw std::invalid_argument("riccati_solve: need 0 < r0 < r_max");
  if (grid.empty()) {
    constexpr int kPoints = 2001;
    for (int i = 0; i < kPoints; ++i) grid.push_back(r0 + (r_max - r0) * i / (kPoints - 1));
    grid.back() = r_max;
  }
  if (grid.front() != r0 || !std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("riccati_solve: grid must start at r0 and increase");
  }

  RiccatiSolution sol;
  sol.lambda = lambda;
  sol.grid = grid;
  const std::size_t n = grid.size();
  sol.beta.resize(n);
  sol.beta_minus.resize(n);
  sol.beta_plus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = mu_env(grid[i]);
    sol.beta_minus[i] = beta_minus(mu, lambda);
    sol.beta_plus[i] = beta_plus(mu, lambda);
  }

  using State = std::array<double, 1>;
  const auto system = [&mu_env, lambda](const State& y, State& dy, double r) {
    const double mu = mu_env(r);
    dy[0] = (y[0] - beta_minus(mu, lambda)) * (y[0] - beta_plus(mu, lambda));
  };
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-14, 1e-12);
  State y{sol.beta_minus[0]};
  sol.beta[0] = y[0];
  try {
    for (std::size_t i = 1; i < n; ++i) {
      ode::integrate_adaptive(stepper, system, y, grid[i - 1], grid[i], grid[i] - grid[i - 1]);
      sol.beta[i] = y[0];
    }
  } catch (const std::exception& e) {
    throw NumericalError(std::string("riccati_solve: step size collapse: ") + e.what());
  }

  for (std::size_t i = 0; i < n; ++i) {
    sol.max_excess = std::max(sol.max_excess, sol.beta[i] - sol.beta_minus[i]);
    if (i > 0) sol.max_decrease = std::max(sol.max_decrease, sol.beta[i - 1] - sol.beta[i]);
  }
  if (sol.max_excess > 1e-9) {
    throw std::logic_error("riccati_solve: beta exceeds beta_- by " + std::to_string(sol.max_excess));
  }
  if (sol.max_decrease > 1e-9) {
    throw std::logic_error("riccati_solve: beta decreases by " + std::to_string(sol.max_decrease));
  }
  return sol;
}

double alpha_uniform(double r0, double lambda, double kappa, int n) {
  if (!(r0 > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("alpha_uniform: r0 and lambda must be > 0");
  return sum_decay_rate(bishop_mu(n, kappa, r0), lambda);
}

double alpha_infinity(double lambda, double kappa, int n) {
  return sum_decay_rate((n - 1) * std::sqrt(kappa), lambda);
}

double DecayBound::rate_integrand(double s) const { return sum_decay_rate(env_(s), lambda_); }

double DecayBound::integrated_rate(double r) const {
  if (r < r0_) throw std::out_of_range("DecayBound: r below r0");
  if (r >= knots_.back()) return cumulative_.back() + rate_integrand(knots_.back() + 1.0) * (r - knots_.back());
  auto it = std::upper_bound(knots_.begin(), knots_.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (r == knots_[i]) return cumulative_[i];
  return cumulative_[i] + quad::gauss_legendre([this](double s) { return rate_integrand(s); }, knots_[i], r);
}

double DecayBound::uniform(double r) const { return coefficient_ * std::exp(-alpha_ * (r - r0_)); }

DecayBound main_bound(const RadialResolvent& res, double r0) {
  if (!(r0 >= res.r_min()) || !(r0 < res.r_max())) {
    throw std::out_of_range("main_bound: r0=" + std::to_string(r0) + " outside the solution grid");
  }
  const ModelManifold& m = res.model;
  DecayBound b;
  b.r0_ = r0;
  b.lambda_ = res.lambda;
  b.env_ = mu_envelope(m, r0, res.r_max());
  b.alpha_ = alpha_uniform(r0, res.lambda, m.kappa(), m.dimension());
  b.psi_r0_ = std::exp(log_area(m, r0) + res.log_u_at(r0));
  b.coefficient_ = b.psi_r0_ + 1.0 / b.alpha_;

  b.knots_.push_back(r0);
  for (double r : res.grid) {
    if (r > r0 * (1.0 + 1e-12)) b.knots_.push_back(r);
  }
  b.cumulative_.assign(b.knots_.size(), 0.0);
  const auto rate = [&b](double s) { return b.rate_integrand(s); };
  for (std::size_t i = 1; i < b.knots_.size(); ++i) {
    b.cumulative_[i] = b.cumulative_[i - 1] + quad::gauss_legendre(rate, b.knots_[i - 1], b.knots_[i]);
  }
  return b;
}

CoefficientBound coefficient_upper_bound(int n, double kappa, double b, double B, double E, double lambda, double r0) {
  if (n < 2 || !(kappa >= 0.0) || !(b > 0.0) || !(B > 0.0) || !(E >= 0.0) || !(lambda > 0.0) || !(r0 > 0.0)) {
    throw std::invalid_argument("coefficient_upper_bound: parameters must be positive (E, kappa >= 0)");
  }
  CoefficientBound out;
  out.volume_kappa = comparison_volume(n, kappa, b);
  out.wp = specfun::certify_incomplete_constant(0.5 * n).wp_gamma;
  const double sq3 = std::sqrt(3.0);
  const double log_prefactor = std::log(n) + n * std::log(4.0) + n + n * (n - 1) * kappa * b * b +
                               std::log(out.volume_kappa) - std::log(B) + log_comparison_area(n, kappa, r0) -
                               std::log(sphere_constant(n));

  const auto full = [&](double lam) {
    const double s = std::sqrt(lam + 3.0 * E);
    const double x = s * r0 / (3.0 * sq3);
    const double log_factor = n == 2 ? std::log(std::log(std::numbers::e + 108.0 * b * b / (r0 * r0))) : 0.0;
    const double log_t1 = std::log(out.wp) + (n - 2) * (std::log(6.0 * sq3) - std::log(r0)) + log_factor -
                          0.5 * (3 - n) * std::log1p(x) - x;
    const double t_min = std::min(r0 * r0 / 9.0, b * b);
    const double v_min = std::min(n * std::log(r0 / 3.0), n * std::log(b));
    const double log_t2 = -lam * t_min - std::log(lam) - v_min;
    const double top = std::max(log_t1, log_t2);
    return log_prefactor + top + std::log(std::exp(log_t1 - top) + std::exp(log_t2 - top));
  };
  out.full = std::exp(full(lambda));

  // The corollary constant is the supremum over lambda of full * lambda * exp(sqrt(lambda + 3E) r0 / 6).
  const auto scaled = [&](double log_lam) {
    const double lam = std::exp(log_lam);
    return full(lam) + log_lam + std::sqrt(lam + 3.0 * E) * r0 / 6.0;
  };
  double best_x = -30.0, best = scaled(best_x);
  for (double x = -30.0; x <= 30.0; x += 0.05) {
    const double v = scaled(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double lo = best_x - 0.05, hi = best_x + 0.05;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (scaled(x1) < scaled(x2)) lo = x1; else hi = x2;
  }
  best = std::max(best, scaled(0.5 * (lo + hi)));
  out.corollary_constant = std::exp(best);
  out.corollary = out.corollary_constant * std::exp(-std::sqrt(lambda + 3.0 * E) * r0 / 6.0) / lambda;
  return out;
}

namespace {

struct CachedKernel {
  std::vector<double> grid, log_u, beta;
  double log_at(double r) const {
    if (r < grid.front() || r > grid.back()) {
      throw std::out_of_range("lower_bound: r=" + std::to_string(r) + " outside the comparison kernel grid");
    }
    auto it = std::upper_bound(grid.begin(), grid.end(), r);
    std::size_t i = std::min(static_cast<std::size_t>(it - grid.begin()), grid.size() - 1) - 1;
    const double h = grid[i + 1] - grid[i];
    const double t = (r - grid[i]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * log_u[i] + h10 * h * beta[i] + h01 * log_u[i + 1] + h11 * h * beta[i + 1];
  }
};

using CacheKey = std::tuple<int, double, double>;

std::shared_mutex g_cache_mutex;
std::map<CacheKey, std::shared_ptr<const CachedKernel>> g_cache;

std::string cache_file(int n, double kappa, double lambda) {
  const char* dir = std::getenv("RESOLVENT_DECAY_CACHE");
  if (dir == nullptr || *dir == '\0') return {};
  char name[160];
  std::snprintf(name, sizeof name, "F_n%d_kappa%.17g_lambda%.17g.v1.txt", n, kappa, lambda);
  return (std::filesystem::path(dir) / name).string();
}

std::shared_ptr<const CachedKernel> read_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) return nullptr;
  auto k = std::make_shared<CachedKernel>();
  double r, lu, b;
  while (in >> r >> lu >> b) {
    k->grid.push_back(r);
    k->log_u.push_back(lu);
    k->beta.push_back(b);
  }
  if (k->grid.size() < 2) return nullptr;
  return k;
}

void write_cache(const std::string& path, const CachedKernel& k) {
  std::error_code ec;
  std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
  const std::string tmp = path + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&k));
  {
    std::ofstream out(tmp);
    if (!out) return;
    char line[96];
    for (std::size_t i = 0; i < k.grid.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", k.grid[i], k.log_u[i], k.beta[i]);
      out << line;
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

std::shared_ptr<const CachedKernel> comparison_kernel(int n, double kappa, double lambda) {
  const CacheKey key{n, kappa, lambda};
  {
    std::shared_lock lock(g_cache_mutex);
    auto it = g_cache.find(key);
    if (it != g_cache.end()) return it->second;
  }
  const std::string path = cache_file(n, kappa, lambda);
  std::shared_ptr<const CachedKernel> k = path.empty() ? nullptr : read_cache(path);
  if (!k) {
    const ModelManifold m = make_preset(PresetKind::constant_curvature, n, {{"kappa", kappa}});
    const RadialResolvent res = solve_radial(m, lambda);
    auto fresh = std::make_shared<CachedKernel>();
    fresh->grid = res.grid;
    fresh->log_u = res.log_u;
    fresh->beta = res.beta;
    if (!path.empty()) write_cache(path, *fresh);
    k = fresh;
  }
  std::unique_lock lock(g_cache_mutex);
  return g_cache.emplace(key, k).first->second;
}

}  // namespace

double log_lower_bound(int n, double kappa, double lambda, double r) {
  if (!(lambda > 0.0) || !(r > 0.0)) throw std::invalid_argument("lower_bound: lambda and r must be > 0");
  if (kappa == 0.0) return log_closed_form_euclidean(n, lambda, r);
  return comparison_kernel(n, kappa, lambda)->log_at(r);
}

double lower_bound(int n, double kappa, double lambda, double r) {
  return std::exp(log_lower_bound(n, kappa, lambda, r));
}

double Bump::value(double r) const {
  if (r <= a || r >= b) return 0.0;
  const double t = (r - a) / (b - a);
  const double s = t * (1.0 - t);
  return 64.0 * s * s * s;
}

double Bump::d1(double r) const {
  if (r <= a || r >= b) return 0.0;
  const double L = b - a;
  const double t = (r - a) / L;
  const double s = t * (1.0 - t);
  return 192.0 * s * s * (1.0 - 2.0 * t) / L;
}

double Bump::d2(double r) const {
  if (r <= a || r >= b) return 0.0;
  const double L = b - a;
  const double t = (r - a) / L;
  const double s = t * (1.0 - t);
  const double w = 1.0 - 2.0 * t;
  return 64.0 * (6.0 * s * w * w - 6.0 * s * s) / (L * L);
}

double Bump::norm() const {
  // Split at the zeros of f' and f'' so each piece is polynomial without sign change.
  const double z = 0.5 - 0.5 / std::sqrt(5.0);
  const std::array<double, 5> cuts{0.0, z, 0.5, 1.0 - z, 1.0};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = a + (b - a) * cuts[i], hi = a + (b - a) * cuts[i + 1];
    total += quad::gauss_legendre(
        [this](double r) { return std::abs(value(r)) + std::abs(d1(r)) + std::abs(d2(r)); }, lo, hi);
  }
  return total;
}

std::vector<Bump> bump_family(double lo, double hi, int count) {
  if (!(hi > lo) || count < 1) throw std::invalid_argument("bump_family: need lo < hi and count >= 1");
  std::vector<Bump> out;
  const double h = (hi - lo) / (count + 1);
  for (int j = 0; j < count; ++j) out.push_back({lo + j * h, std::min(hi, lo + (j + 2) * h)});
  return out;
}

double pairing(const SphericalSums& sums, const RadialFunction& mu_env, double lambda, const Bump& f) {
  if (f.a < sums.grid.front() || f.b > sums.grid.back()) {
    throw std::out_of_range("pairing: bump support outside the sums grid");
  }
  std::vector<double> pts{f.a, f.b};
  constexpr int kSplit = 16;
  for (int k = 1; k < kSplit; ++k) pts.push_back(f.a + (f.b - f.a) * k / kSplit);
  auto lo = std::upper_bound(sums.grid.begin(), sums.grid.end(), f.a);
  auto hi = std::lower_bound(sums.grid.begin(), sums.grid.end(), f.b);
  pts.insert(pts.end(), lo, hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  const auto integrand = [&](double r) {
    const double Psi = sums.Psi_at(r);
    return -Psi * f.d2(r) + mu_env(r) * sums.psi_bar_at(r) * f.value(r) + lambda * Psi * f.value(r);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += quad::gauss_legendre(integrand, pts[i], pts[i + 1]);
  return total;
}

DiffIneqReport diff_ineq_check(const SphericalSums& sums, const RadialFunction& mu_env, double lambda, double r0,
                               int bumps, double tol) {
  DiffIneqReport rep;
  rep.tolerance = tol;
  rep.hypothesis_verified = sums.from_resolvent;
  rep.note = sums.from_resolvent
                 ? "flux hypothesis holds for resolvent sums"
                 : "sums not produced by solve_radial: the limit hypothesis on Psi is assumed, not checked";
  const double lo = std::max(r0, sums.grid.front());
  const double hi = sums.grid.back();
  rep.pass = true;
  rep.min_scaled = quad::kInf;
  for (const Bump& f : bump_family(lo, hi, bumps)) {
    PairingReport p{f, pairing(sums, mu_env, lambda, f), f.norm()};
    rep.min_scaled = std::min(rep.min_scaled, p.value / p.norm);
    if (p.value < -tol * p.norm) rep.pass = false;
    rep.pairings.push_back(p);
  }
  return rep;
}

RateFit rate_fit_log(const std::vector<double>& grid, const std::vector<double>& log_samples, double r_a, double r_b,
                     double expected_rate) {
  if (grid.size() != log_samples.size()) throw std::invalid_argument("rate_fit: grid and samples differ in length");
  if (!(r_b - r_a >= 5.0)) throw std::invalid_argument("rate_fit: window must be at least 5 units long");
  RateFit fit;
  fit.r_a = r_a;
  fit.r_b = r_b;
  fit.expected_rate = expected_rate;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < r_a || grid[i] > r_b) continue;
    if (!std::isfinite(log_samples[i])) throw std::invalid_argument("rate_fit: samples must be positive and finite");
    const double x = grid[i], y = -log_samples[i];
    pts.emplace_back(x, y);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.samples = static_cast<int>(pts.size());
  if (fit.samples < 20) throw std::invalid_argument("rate_fit: fewer than 20 samples in the window");
  const double cnt = fit.samples;
  const double den = cnt * sxx - sx * sx;
  if (!(den > 0.0)) throw std::invalid_argument("rate_fit: degenerate window");
  fit.fitted_rate = (cnt * sxy - sx * sy) / den;
  const double icpt = (sy - fit.fitted_rate * sx) / cnt;
  double ss = 0.0;
  for (const auto& [x, y] : pts) {
    const double e = y - (icpt + fit.fitted_rate * x);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / cnt);
  return fit;
}

RateFit rate_fit(const std::vector<double>& grid, const std::vector<double>& samples, double r_a, double r_b,
                 double expected_rate) {
  std::vector<double> logs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (grid[i] >= r_a && grid[i] <= r_b && !(samples[i] > 0.0)) {
      throw std::invalid_argument("rate_fit: non-positive sample at r=" + std::to_string(grid[i]));
    }
    logs[i] = samples[i] > 0.0 ? std::log(samples[i]) : -quad::kInf;
  }
  return rate_fit_log(grid, logs, r_a, r_b, expected_rate);
}

ExpectedRates expected_rates(const ModelManifold& m, double lambda) {
  ExpectedRates e;
  e.mu_bar = m.mu_infinity();
  e.volume_growth = std::max(e.mu_bar, 0.0);
  const double root = std::sqrt(0.25 * e.mu_bar * e.mu_bar + lambda);
  e.spherical_sum = sum_decay_rate(e.mu_bar, lambda);
  e.pointwise = 0.5 * e.mu_bar + root;
  e.spherical_mean = 0.5 * e.volume_growth + std::sqrt(0.25 * e.volume_growth * e.volume_growth + lambda);
  e.alpha_infinity = alpha_infinity(lambda, m.kappa(), m.dimension());
  const double sE = std::sqrt(m.spectral_bottom());
  e.e_based_sum = -sE + std::sqrt(m.spectral_bottom() + lambda);
  e.e_based_pointwise = sE + std::sqrt(m.spectral_bottom() + lambda);
  return e;
}

}  // namespace rdecay
