#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rdecay/model.hpp"
#include "rdecay/resolvent.hpp"

namespace rdecay {

using RadialFunction = std::function<double(double)>;

/// Roots of beta^2 + mu beta - lambda.
double beta_minus(double mu, double lambda);
double beta_plus(double mu, double lambda);

struct RiccatiSolution {
  std::vector<double> grid;
  std::vector<double> beta;
  std::vector<double> beta_minus;
  std::vector<double> beta_plus;
  double lambda = 1.0;
  double max_excess = 0.0;    // max of beta - beta_minus
  double max_decrease = 0.0;  // largest drop between consecutive points
};

/// Integrates beta' = (beta - beta_-)(beta - beta_+) forward from beta(r0) = beta_-(r0).
/// Throws std::logic_error if beta decreases or rises above beta_- by more than 1e-9.
/// An empty grid means 2001 equally spaced points on [r0, r_max].
RiccatiSolution riccati_solve(const RadialFunction& mu_env, double lambda, double r0, double r_max,
                              std::vector<double> grid = {});

/// -(n-1) sqrt(kappa) / (2 tanh(sqrt(kappa) r0)) + sqrt((n-1)^2 kappa / (4 tanh^2(sqrt(kappa) r0)) + lambda).
double alpha_uniform(double r0, double lambda, double kappa, int n);
/// r0 -> infinity limit of alpha_uniform.
double alpha_infinity(double lambda, double kappa, int n);

class DecayBound {
 public:
  DecayBound() = default;

  double r0() const { return r0_; }
  double lambda() const { return lambda_; }
  double coefficient() const { return coefficient_; }
  double psi_bar_r0() const { return psi_r0_; }
  double alpha() const { return alpha_; }
  const MuEnvelope& envelope() const { return env_; }

  /// -mu_env(s)/2 + sqrt(mu_env(s)^2/4 + lambda).
  double rate_integrand(double s) const;
  /// int_{r0}^r rate_integrand.
  double integrated_rate(double r) const;
  double log_evaluator(double r) const { return std::log(coefficient_) - integrated_rate(r); }
  double evaluator(double r) const { return std::exp(log_evaluator(r)); }
  /// C exp(-alpha (r - r0)).
  double uniform(double r) const;

 private:
  friend DecayBound main_bound(const RadialResolvent& res, double r0);
  double r0_ = 0.0, lambda_ = 1.0, coefficient_ = 0.0, psi_r0_ = 0.0, alpha_ = 0.0;
  MuEnvelope env_;
  std::vector<double> knots_;       // integration panels
  std::vector<double> cumulative_;  // int_{r0}^{knots_[i]} rate
};

/// Envelope and uniform bounds for the spherical sums of a computed resolvent.
DecayBound main_bound(const RadialResolvent& res, double r0);

struct CoefficientBound {
  double full = 0.0;          // the full non-collapsing display
  double corollary = 0.0;     // C exp(-sqrt(lambda + 3E) r0 / 6) / lambda
  double corollary_constant = 0.0;
  double wp = 0.0;            // certified constant for gamma = n/2
  double volume_kappa = 0.0;  // V_kappa(b)
};

CoefficientBound coefficient_upper_bound(int n, double kappa, double b, double B, double E, double lambda, double r0);

/// Resolvent of the constant-curvature comparison model, cached per (n, kappa, lambda).
/// Optional on-disk cache in the directory named by RESOLVENT_DECAY_CACHE.
double lower_bound(int n, double kappa, double lambda, double r);
double log_lower_bound(int n, double kappa, double lambda, double r);

/// Bump 64 [t(1-t)]^3 on [a, b], t = (r-a)/(b-a); twice continuously differentiable.
struct Bump {
  double a = 0.0, b = 1.0;
  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;
  /// int |f| + |f'| + |f''|.
  double norm() const;
};

/// Bumps with overlapping supports covering (lo, hi).
std::vector<Bump> bump_family(double lo, double hi, int count = 50);

struct PairingReport {
  Bump bump;
  double value = 0.0;  // T(f)
  double norm = 0.0;
};

struct DiffIneqReport {
  std::vector<PairingReport> pairings;
  double tolerance = 1e-6;
  double min_scaled = 0.0;  // min T(f) / ||f||
  bool pass = false;
  bool hypothesis_verified = false;
  std::string note;
};

/// T(f) = -int Psi f'' + int mu_env psi_bar f + lambda int Psi f.
double pairing(const SphericalSums& sums, const RadialFunction& mu_env, double lambda, const Bump& f);

DiffIneqReport diff_ineq_check(const SphericalSums& sums, const RadialFunction& mu_env, double lambda, double r0,
                               int bumps = 50, double tol = 1e-6);

struct RateFit {
  double r_a = 0.0, r_b = 0.0;
  double fitted_rate = 0.0;
  double residual = 0.0;  // rms of the linear fit of -ln(samples)
  double expected_rate = 0.0;
  int samples = 0;
};

/// Least-squares rate of ln-samples over [r_a, r_b]; needs >= 20 points and r_b - r_a >= 5.
RateFit rate_fit_log(const std::vector<double>& grid, const std::vector<double>& log_samples, double r_a, double r_b,
                     double expected_rate = 0.0);
RateFit rate_fit(const std::vector<double>& grid, const std::vector<double>& samples, double r_a, double r_b,
                 double expected_rate = 0.0);

struct ExpectedRates {
  double mu_bar = 0.0;          // lim mu
  double volume_growth = 0.0;   // max(mu_bar, 0)
  double spherical_sum = 0.0;   // -mu_bar/2 + sqrt(mu_bar^2/4 + lambda)
  double pointwise = 0.0;       // mu_bar/2 + sqrt(mu_bar^2/4 + lambda)
  double spherical_mean = 0.0;  // mu/2 + sqrt(mu^2/4 + lambda) with mu the volume growth
  double alpha_infinity = 0.0;
  double e_based_sum = 0.0;       // mu_bar replaced by 2 sqrt(E)
  double e_based_pointwise = 0.0;
};

ExpectedRates expected_rates(const ModelManifold& m, double lambda);

}  // namespace rdecay
