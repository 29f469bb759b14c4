#pragma once

// Modified Bessel functions of the second kind, Gamma, and the Laplace-type
// integral  int_0^inf exp(-alpha t - beta/t) t^(-gamma) dt  together with its
// truncated variant on (0, 1].

namespace rdecay::specfun {

inline constexpr double kEulerGamma = 0.57721566490153286061;

enum class BesselMethod { quadrature, asymptotic, closed_half_integer };

const char* to_string(BesselMethod m);

struct BesselEval {
  double order = 0.0;
  double argument = 0.0;
  double value = 0.0;      // 0 when exp(log_value) underflows
  double log_value = 0.0;  // always finite
  BesselMethod method = BesselMethod::quadrature;
};

/// K_nu(x) for nu >= 0, x > 0. Half-integer orders use the terminating closed
/// form; x > 50 max(1, nu^2) uses the large-argument series; everything else
/// evaluates  int_0^inf exp(-x cosh t) cosh(nu t) dt  with the trapezoidal rule,
/// which converges double-exponentially for this integrand.
BesselEval bessel_k_eval(double nu, double x);

/// Forces a particular method (closed_half_integer requires a half-integer order).
BesselEval bessel_k_eval(double nu, double x, BesselMethod method);

/// K_nu(x). Throws std::range_error when the value is not representable as a double;
/// use log_bessel_k or bessel_k_scaled there.
double bessel_k(double nu, double x);

/// ln K_nu(x), finite for every nu >= 0, x > 0.
double log_bessel_k(double nu, double x);

/// K_nu(x) = mantissa * 2^exponent with mantissa in [1, 2).
struct ScaledValue {
  double mantissa = 0.0;
  long exponent = 0;
};
ScaledValue bessel_k_scaled(double nu, double x);

/// Gamma function for x > 0.
double gamma_fn(double x);

struct LaplaceIntegralParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;

  /// Throws std::invalid_argument unless alpha, beta > 0 and gamma >= 1.
  void validate() const;
};

enum class IntegralMode { closed_form, quadrature };

/// int_0^inf exp(-alpha t - beta/t) t^(-gamma) dt.
/// closed_form: 2 (alpha/beta)^((gamma-1)/2) K_{gamma-1}(2 sqrt(alpha beta)).
/// quadrature:  adaptive Gauss-Kronrod after t = e^s.
double laplace_bessel_integral(const LaplaceIntegralParams& p, IntegralMode mode);
double log_laplace_bessel_integral(const LaplaceIntegralParams& p, IntegralMode mode);

/// int_0^1 exp(-alpha t - beta/t) t^(-gamma) dt by adaptive quadrature (log value).
double log_incomplete_integral(const LaplaceIntegralParams& p);

/// log of the bound shape without its constant:
///   log^{[gamma=1]}(e + 1/beta) / (beta^(gamma-1) (1 + 2 sqrt(alpha beta))^(3/2 - gamma))
///   * exp(-2 sqrt(alpha beta)).
double log_incomplete_bound_shape(const LaplaceIntegralParams& p);

struct Certification {
  double gamma = 1.0;
  double wp_gamma = 0.0;     // certified constant
  double max_ratio = 0.0;    // sup of LHS / shape over the grid
  double argmax_alpha = 0.0;
  double argmax_beta = 0.0;
  bool argmax_on_boundary = false;
  double min_margin = 0.0;   // min over grid of (bound - LHS) / bound
  int grid_points = 0;       // per axis
};

/// Determines the constant of the truncated-integral bound for this gamma by
/// maximising LHS / shape over a log grid (alpha, beta) in [1e-3, 1e3]^2.
/// Results are cached per gamma; safe to call concurrently.
Certification certify_incomplete_constant(double gamma);

struct IncompleteBound {
  double bound_value = 0.0;
  double wp_gamma = 0.0;
};

/// Right-hand side of the truncated-integral bound with the certified constant.
IncompleteBound incomplete_integral_bound(const LaplaceIntegralParams& p);

}  // namespace rdecay::specfun
