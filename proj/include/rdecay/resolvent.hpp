#pragma once

#include <cstddef>
#include <vector>

#include "rdecay/model.hpp"

namespace rdecay {

struct SolverConfig {
  double r_min = 1e-4;
  double r_max = 0.0;   // 0: radius where the predicted spherical-sum bound falls below 1e-14
  double r0 = 1.0;      // reference radius for the default r_max; always placed on the grid
  int grid_points = 0;  // points on the uniform section beyond r = 1; 0: spacing 0.025
  std::vector<double> extra_radii;  // additional grid points inside [r_min, r_max]
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
};

/// r0 + ln(1e14) / a, with a = -mu_inf/2 + sqrt(mu_inf^2/4 + lambda) the asymptotic
/// decay rate of the spherical sums.
double default_r_max(const ModelManifold& m, double lambda, double r0);

/// Asymptotic decay rate of spherical sums, -mu/2 + sqrt(mu^2/4 + lambda).
double sum_decay_rate(double mu, double lambda);

/// Radial resolvent kernel u(r) = K_lambda(d(x, y)) on a model manifold.
struct RadialResolvent {
  ModelManifold model;
  double lambda = 1.0;
  std::vector<double> grid;
  std::vector<double> u;         // 0 where exp(log_u) underflows
  std::vector<double> du;
  std::vector<double> log_u;
  std::vector<double> beta;      // du / u
  std::vector<double> log_area;  // ln A(r)
  double norm_residual = 0.0;    // |lambda int u A - 1|
  double inner_mass = 0.0;       // int_0^{r_min} u A from the small-r expansion

  // Continuation of the solution past r_max, used to close the spherical sums.
  std::vector<double> tail_grid;
  std::vector<double> tail_log_psi;
  std::vector<double> tail_slope;  // d/dr ln(psi_bar)
  double r_start = 0.0;            // where the inward integration began

  std::size_t size() const { return grid.size(); }
  double r_min() const { return grid.front(); }
  double r_max() const { return grid.back(); }

  /// Index of the grid point closest to r; throws std::out_of_range outside the grid.
  std::size_t nearest_index(double r) const;
  /// ln u at any r in [r_min, r_max] by cubic Hermite interpolation of ln u.
  double log_u_at(double r) const;
  /// ln psi_bar = ln A + ln u and its radial derivative on the grid.
  double log_psi_bar(std::size_t i) const { return log_area[i] + log_u[i]; }
  double log_psi_slope(std::size_t i) const;
};

/// Solves u'' + mu u' - lambda u = 0 inward from beyond r_max on the decaying
/// branch and normalises so that A(r) u'(r) -> -1 at the origin.
RadialResolvent solve_radial(const ModelManifold& m, double lambda, const SolverConfig& cfg = {});

/// Spherical sums psi_bar = A u and (negative) extraglobular sums
/// Psi(r) = -int_r^inf psi_bar.
struct SphericalSums {
  std::vector<double> grid;
  std::vector<double> psi_bar;
  std::vector<double> Psi;
  std::vector<double> log_psi_bar;
  std::vector<double> log_slope;  // d/dr ln psi_bar
  double tail_rate = 0.0;         // decay rate used for the analytic closure
  double lambda = 1.0;
  bool from_resolvent = false;    // flux hypothesis known to hold

  /// psi_bar at r by cubic Hermite interpolation of its logarithm.
  double psi_bar_at(double r) const;
  /// Psi at r, consistent with the panel quadrature used for the grid values.
  double Psi_at(double r) const;
};

SphericalSums spherical_sums(const RadialResolvent& res);

/// Builds sums from ln psi_bar samples and slopes; Psi is integrated on the grid
/// and closed with an exponential tail at the last point.
SphericalSums make_spherical_sums(std::vector<double> grid, std::vector<double> log_psi_bar,
                                  std::vector<double> log_slope, double lambda);

/// A(r) du(r) at grid index i.
double flux(const RadialResolvent& res, std::size_t i);
/// A(r) du(r) at a grid radius (nearest grid point within 1e-9 relative).
double flux_at(const RadialResolvent& res, double r);

/// Euclidean resolvent (4 pi)^(-n/2) 2 (2 sqrt(lambda)/r)^(n/2-1) K_{n/2-1}(sqrt(lambda) r).
double closed_form_euclidean(int n, double lambda, double r);
double log_closed_form_euclidean(int n, double lambda, double r);

/// H^3 resolvent exp(-sqrt(1+lambda) r) / (4 pi sinh r).
double closed_form_hyperbolic3(double lambda, double r);
double log_closed_form_hyperbolic3(double lambda, double r);

enum class HeatKernelKind { euclidean, hyperbolic3 };

/// int_0^inf exp(-lambda t) p(r, t) dt by adaptive quadrature of the exact heat kernel.
/// For hyperbolic3 the dimension argument must be 3 (or m = 2).
double laplace_transform_heat_kernel(HeatKernelKind kind, int n_or_m, double lambda, double r);

struct TwoSidedReport {
  double lower_constant = 0.0;  // min of u / shape over [1, r_max]
  double upper_constant = 0.0;  // max of u / shape
  double constant_ratio = 0.0;
  double fitted_rate = 0.0;     // pointwise decay rate from the tail of u
  double expected_rate = 0.0;   // m/2 + sqrt(m^2/4 + lambda)
  double rate_rel_error = 0.0;
  bool pass = false;
};

/// Compares u on H^{m+1} with the two-sided shape
///   r^(1/2) (1 + 1/r)^(m/2) (m^2/4 + lambda)^((m-1)/4) e^(-m r/2) K_{(m-1)/2}(sqrt(m^2/4+lambda) r)
///   + (1 + 1/r) e^(-(m/2 + sqrt(m^2/4 + lambda)) r).
TwoSidedReport hyperbolic_twosided_check(int m, double lambda, const RadialResolvent& res);

}  // namespace rdecay
