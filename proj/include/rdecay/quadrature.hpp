#pragma once

#include <functional>
#include <limits>

namespace rdecay::quad {

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (15/31 point) on a finite interval.
/// Throws NumericalError when the error estimate stays above `rel_tol` relative
/// to the L1 norm of the integrand (with an absolute floor of 1e-300).
double integrate(const Integrand& f, double a, double b, double rel_tol = 1e-13);

/// Same rule, but returns the error estimate instead of throwing.
double integrate(const Integrand& f, double a, double b, double rel_tol, double* error_estimate);

/// 10-point Gauss-Legendre on a single panel.
double gauss_legendre(const Integrand& f, double a, double b);

/// log of the integral of exp(phi) over (a, b) for a unimodal log-integrand phi.
/// Either end may be infinite. The peak is located numerically; the integrand is
/// truncated where phi drops `cutoff` below the peak value.
double log_integral_exp(const Integrand& phi, double a, double b, double rel_tol = 1e-13,
                        double cutoff = 60.0);

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace rdecay::quad
