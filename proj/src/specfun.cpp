#include "rdecay/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdecay/error.hpp"
#include "rdecay/quadrature.hpp"

namespace rdecay::specfun {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kPi = std::numbers::pi;

void check_bessel_args(double nu, double x) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("bessel_k: order must be >= 0");
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("bessel_k: argument must be > 0");
}

bool is_half_integer(double nu) {
  const double twice = 2.0 * nu;
  const double r = std::round(twice);
  return std::abs(twice - r) < 1e-14 * std::max(1.0, twice) && static_cast<long long>(r) % 2 == 1;
}

double log_sum_exp(const std::vector<double>& terms) {
  const double top = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

// K_{j+1/2}(x) = sqrt(pi/2x) e^-x sum_k (j+k)! / (k! (j-k)!) (2x)^-k
double log_k_half_integer(double nu, double x) {
  const int j = static_cast<int>(std::lround(nu - 0.5));
  std::vector<double> terms;
  terms.reserve(j + 1);
  for (int k = 0; k <= j; ++k) {
    const double lc = std::lgamma(j + k + 1.0) - std::lgamma(k + 1.0) - std::lgamma(j - k + 1.0);
    terms.push_back(lc - k * std::log(2.0 * x));
  }
  return 0.5 * std::log(kPi / (2.0 * x)) - x + log_sum_exp(terms);
}

// Large-argument expansion, summed until the terms stop decreasing.
double log_k_asymptotic(double nu, double x) {
  const double mu4 = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (mu4 - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return 0.5 * std::log(kPi / (2.0 * x)) - x + std::log(sum);
}

// ln of  int_0^inf exp(-x cosh t) cosh(nu t) dt  by the trapezoidal rule with
// step halving. The integrand is entire and decays double-exponentially, so the
// rule converges geometrically in 1/h.
double log_k_quadrature(double nu, double x) {
  const auto phi = [nu, x](double t) {
    return -x * std::cosh(t) + nu * t + std::log1p(std::exp(-2.0 * nu * t)) - kLn2;
  };
  const double t_peak = std::asinh(nu / x);
  const double shift = phi(t_peak);
  double t_end = t_peak + 1.0;
  while (phi(t_end) > shift - 46.0) t_end += 0.5 + 0.5 * (t_end - t_peak);

  const auto f = [&](double t) { return std::exp(phi(t) - shift); };
  constexpr long kMaxNodes = 1L << 14;

  double h = 0.5;
  double sum = 0.5 * f(0.0);
  for (long k = 1; k * h <= t_end; ++k) sum += f(k * h);
  double estimate = h * sum;
  for (int level = 0; level < 20; ++level) {
    const double h_half = 0.5 * h;
    double odd = 0.0;
    for (long k = 1; (2 * k - 1) * h_half <= t_end; ++k) odd += f((2 * k - 1) * h_half);
    sum += odd;
    const double refined = h_half * sum;
    const bool converged = std::abs(refined - estimate) <= 1e-13 * refined && h_half <= 0.25;
    h = h_half;
    estimate = refined;
    if (converged) return shift + std::log(estimate);
    if (static_cast<long>(t_end / h) > kMaxNodes) break;
  }
  throw NumericalError("bessel_k: trapezoidal rule did not converge for nu=" + std::to_string(nu) +
                       ", x=" + std::to_string(x));
}

BesselEval finish(double nu, double x, double log_value, BesselMethod m) {
  BesselEval e;
  e.order = nu;
  e.argument = x;
  e.log_value = log_value;
  e.value = std::exp(log_value);
  e.method = m;
  return e;
}

}  // namespace

const char* to_string(BesselMethod m) {
  switch (m) {
    case BesselMethod::quadrature: return "quadrature";
    case BesselMethod::asymptotic: return "asymptotic";
    case BesselMethod::closed_half_integer: return "closed_half_integer";
  }
  return "unknown";
}

BesselEval bessel_k_eval(double nu, double x) {
  check_bessel_args(nu, x);
  if (is_half_integer(nu)) return finish(nu, x, log_k_half_integer(nu, x), BesselMethod::closed_half_integer);
  if (x > 50.0 * std::max(1.0, nu * nu)) return finish(nu, x, log_k_asymptotic(nu, x), BesselMethod::asymptotic);
  return finish(nu, x, log_k_quadrature(nu, x), BesselMethod::quadrature);
}

BesselEval bessel_k_eval(double nu, double x, BesselMethod method) {
  check_bessel_args(nu, x);
  switch (method) {
    case BesselMethod::closed_half_integer:
      if (!is_half_integer(nu)) throw std::invalid_argument("closed form needs a half-integer order");
      return finish(nu, x, log_k_half_integer(nu, x), method);
    case BesselMethod::asymptotic:
      return finish(nu, x, log_k_asymptotic(nu, x), method);
    case BesselMethod::quadrature:
      return finish(nu, x, log_k_quadrature(nu, x), method);
  }
  throw std::invalid_argument("unknown Bessel method");
}

double bessel_k(double nu, double x) {
  const BesselEval e = bessel_k_eval(nu, x);
  if (e.value == 0.0 || !std::isfinite(e.value)) {
    throw std::range_error("bessel_k: K_nu(x) outside double range; use log_bessel_k");
  }
  return e.value;
}

double log_bessel_k(double nu, double x) { return bessel_k_eval(nu, x).log_value; }

ScaledValue bessel_k_scaled(double nu, double x) {
  const double log2v = log_bessel_k(nu, x) / kLn2;
  const double e = std::floor(log2v);
  return ScaledValue{std::exp2(log2v - e), static_cast<long>(e)};
}

double gamma_fn(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("gamma_fn: argument must be > 0");
  return std::tgamma(x);
}

void LaplaceIntegralParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma >= 1.0) || !std::isfinite(alpha) || !std::isfinite(beta) ||
      !std::isfinite(gamma)) {
    throw std::invalid_argument("LaplaceIntegralParams: need alpha > 0, beta > 0, gamma >= 1");
  }
}

double log_laplace_bessel_integral(const LaplaceIntegralParams& p, IntegralMode mode) {
  p.validate();
  if (mode == IntegralMode::closed_form) {
    return kLn2 + 0.5 * (p.gamma - 1.0) * std::log(p.alpha / p.beta) +
           log_bessel_k(p.gamma - 1.0, 2.0 * std::sqrt(p.alpha * p.beta));
  }
  // t = e^s turns the integrand into a smooth concave exponent on the real line.
  const auto phi = [&p](double s) { return -p.alpha * std::exp(s) - p.beta * std::exp(-s) - (p.gamma - 1.0) * s; };
  return quad::log_integral_exp(phi, -quad::kInf, quad::kInf, 1e-13);
}

double laplace_bessel_integral(const LaplaceIntegralParams& p, IntegralMode mode) {
  return std::exp(log_laplace_bessel_integral(p, mode));
}

double log_incomplete_integral(const LaplaceIntegralParams& p) {
  p.validate();
  const auto phi = [&p](double s) { return -p.alpha * std::exp(s) - p.beta * std::exp(-s) - (p.gamma - 1.0) * s; };
  return quad::log_integral_exp(phi, -quad::kInf, 0.0, 1e-13);
}

double log_incomplete_bound_shape(const LaplaceIntegralParams& p) {
  p.validate();
  const double z = 2.0 * std::sqrt(p.alpha * p.beta);
  double v = -(p.gamma - 1.0) * std::log(p.beta) - (1.5 - p.gamma) * std::log1p(z) - z;
  if (p.gamma == 1.0) v += std::log(std::log(std::numbers::e + 1.0 / p.beta));
  return v;
}

Certification certify_incomplete_constant(double gamma) {
  static std::shared_mutex mutex;
  static std::map<double, Certification> cache;
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(gamma); it != cache.end()) return it->second;
  }

  constexpr int kPoints = 41;
  const auto axis = [](int i) { return std::pow(10.0, -3.0 + 6.0 * i / (kPoints - 1)); };

  Certification cert;
  cert.gamma = gamma;
  cert.grid_points = kPoints;
  double best = -quad::kInf;
  std::vector<double> log_ratio(kPoints * kPoints);
  for (int i = 0; i < kPoints; ++i) {
    for (int j = 0; j < kPoints; ++j) {
      const LaplaceIntegralParams p{axis(i), axis(j), gamma};
      const double lr = log_incomplete_integral(p) - log_incomplete_bound_shape(p);
      if (!std::isfinite(lr)) {
        throw NumericalError("certification failed: ratio not finite at alpha=" + std::to_string(p.alpha) +
                             ", beta=" + std::to_string(p.beta));
      }
      log_ratio[i * kPoints + j] = lr;
      if (lr > best) {
        best = lr;
        cert.argmax_alpha = p.alpha;
        cert.argmax_beta = p.beta;
        cert.argmax_on_boundary = (i == 0 || j == 0 || i == kPoints - 1 || j == kPoints - 1);
      }
    }
  }
  cert.max_ratio = std::exp(best);
  // Headroom for the quadrature error of the LHS.
  cert.wp_gamma = cert.max_ratio * (1.0 + 1e-9);
  double margin = 1.0;
  for (double lr : log_ratio) margin = std::min(margin, 1.0 - std::exp(lr) / cert.wp_gamma);
  cert.min_margin = margin;

  std::unique_lock lock(mutex);
  cache.emplace(gamma, cert);
  return cert;
}

IncompleteBound incomplete_integral_bound(const LaplaceIntegralParams& p) {
  p.validate();
  const Certification cert = certify_incomplete_constant(p.gamma);
  return IncompleteBound{cert.wp_gamma * std::exp(log_incomplete_bound_shape(p)), cert.wp_gamma};
}

}  // namespace rdecay::specfun
