#include "rdecay/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rdecay/error.hpp"

namespace rdecay::quad {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr int kMaxDepth = 30;
constexpr long kMaxPanels = 200000;

struct Sum {
  double value = 0.0;
  double err = 0.0;
  double l1 = 0.0;
  long panels = 0;
};

// Bisection driver over the fixed 31-point rule. Boost's own adaptive driver
// compares the mapped-interval error against an absolute tolerance, which stalls
// on short intervals. The fixed rule reports its error on [-1, 1]; scale it back.
void adaptive(const Integrand& f, double a, double b, double rel_tol, double abs_tol, int depth, Sum& acc) {
  double err = 0.0, l1 = 0.0;
  const double v = Kronrod::integrate(f, a, b, 0, 0.0, &err, &l1);
  const double scale = 0.5 * (b - a);
  err *= scale;
  const double tol = std::max(abs_tol, rel_tol * std::abs(l1));
  if (err <= tol || depth == 0 || acc.panels > kMaxPanels || !std::isfinite(v)) {
    acc.value += v;
    acc.err += err;
    acc.l1 += l1;
    ++acc.panels;
    return;
  }
  const double mid = 0.5 * (a + b);
  adaptive(f, a, mid, rel_tol, 0.5 * abs_tol, depth - 1, acc);
  adaptive(f, mid, b, rel_tol, 0.5 * abs_tol, depth - 1, acc);
}

Sum integrate_impl(const Integrand& f, double a, double b, double rel_tol) {
  Sum acc;
  if (a == b) return acc;
  if (!std::isfinite(a) || !std::isfinite(b)) {
    // Map the infinite range onto a finite one.
    Integrand g;
    double lo = 0.0, hi = 1.0;
    if (std::isfinite(a)) {
      g = [&](double t) { return t >= 1.0 ? 0.0 : f(a + t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)); };
    } else if (std::isfinite(b)) {
      g = [&](double t) { return t >= 1.0 ? 0.0 : f(b - t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)); };
    } else {
      g = [&](double t) {
        if (std::abs(t) >= 1.0) return 0.0;
        const double d = 1.0 - t * t;
        return f(t / d) * (1.0 + t * t) / (d * d);
      };
      lo = -1.0;
    }
    return integrate_impl(g, lo, hi, rel_tol);
  }
  if (a > b) {
    Sum s = integrate_impl(f, b, a, rel_tol);
    s.value = -s.value;
    return s;
  }
  // First pass fixes an absolute target from the total L1 so that panels where
  // the integrand is negligible are not refined for relative accuracy.
  double err0 = 0.0, l10 = 0.0;
  Kronrod::integrate(f, a, b, 0, 0.0, &err0, &l10);
  adaptive(f, a, b, rel_tol, rel_tol * std::abs(l10), kMaxDepth, acc);
  return acc;
}

double safe_eval(const Integrand& phi, double x) {
  const double v = phi(x);
  return std::isfinite(v) ? v : -kInf;
}

struct Bracket {
  double lo, hi;
};

// Walk from x0 in the direction of increasing phi until it turns over or the
// interval end is reached.
Bracket bracket_peak(const Integrand& phi, double a, double b, double x0) {
  double step = std::max(1e-3, 1e-3 * std::abs(x0));
  const double f0 = safe_eval(phi, x0);
  const double fr = safe_eval(phi, std::min(x0 + step, b));
  const double dir = (fr >= f0) ? 1.0 : -1.0;
  double prev = x0;
  double fprev = f0;
  double behind = x0 - dir * step;
  for (int it = 0; it < 400; ++it) {
    double next = prev + dir * step;
    bool at_end = false;
    if (dir > 0 && next >= b) {
      next = b;
      at_end = true;
    }
    if (dir < 0 && next <= a) {
      next = a;
      at_end = true;
    }
    const double fnext = safe_eval(phi, next);
    if (fnext < fprev) {
      return dir > 0 ? Bracket{std::max(a, behind), next} : Bracket{next, std::min(b, behind)};
    }
    if (at_end) {
      return dir > 0 ? Bracket{std::max(a, prev), b} : Bracket{a, std::min(b, prev)};
    }
    behind = prev;
    prev = next;
    fprev = fnext;
    step *= 2.0;
  }
  throw NumericalError("log_integral_exp: could not bracket the peak of the integrand");
}

double golden_max(const Integrand& phi, double lo, double hi) {
  constexpr double g = 0.6180339887498949;
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = safe_eval(phi, x1);
  double f2 = safe_eval(phi, x2);
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = safe_eval(phi, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = safe_eval(phi, x1);
    }
  }
  const double xm = 0.5 * (lo + hi);
  double best = xm;
  double fbest = safe_eval(phi, xm);
  for (double x : {lo, hi}) {
    const double fx = safe_eval(phi, x);
    if (fx > fbest) {
      best = x;
      fbest = fx;
    }
  }
  return best;
}

double find_cutoff(const Integrand& phi, double peak, double level, double limit, double dir) {
  double d = std::max(1e-4, 1e-4 * std::abs(peak));
  for (int it = 0; it < 2000; ++it) {
    double x = peak + dir * d;
    if ((dir > 0 && x >= limit) || (dir < 0 && x <= limit)) return limit;
    if (safe_eval(phi, x) < level) return x;
    d *= 1.5;
  }
  throw NumericalError("log_integral_exp: integrand does not decay");
}

}  // namespace

double integrate(const Integrand& f, double a, double b, double rel_tol, double* error_estimate) {
  const Sum s = integrate_impl(f, a, b, rel_tol);
  if (error_estimate) *error_estimate = s.err;
  return s.value;
}

double integrate(const Integrand& f, double a, double b, double rel_tol) {
  const Sum s = integrate_impl(f, a, b, rel_tol);
  if (!std::isfinite(s.value) || s.err > std::max(10.0 * rel_tol * s.l1, 1e-300)) {
    throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "], error estimate " + std::to_string(s.err));
  }
  return s.value;
}

double gauss_legendre(const Integrand& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

double log_integral_exp(const Integrand& phi, double a, double b, double rel_tol, double cutoff) {
  double x0;
  if (std::isfinite(a) && std::isfinite(b)) {
    x0 = 0.5 * (a + b);
  } else if (std::isfinite(a)) {
    x0 = a + 1.0;
  } else if (std::isfinite(b)) {
    x0 = b - 1.0;
  } else {
    x0 = 0.0;
  }
  const Bracket br = bracket_peak(phi, a, b, x0);
  const double peak = golden_max(phi, br.lo, br.hi);
  const double top = safe_eval(phi, peak);
  if (!std::isfinite(top)) throw NumericalError("log_integral_exp: integrand vanishes identically");

  const double level = top - cutoff;
  const double lo = find_cutoff(phi, peak, level, a, -1.0);
  const double hi = find_cutoff(phi, peak, level, b, +1.0);
  const Integrand shifted = [&](double x) {
    const double v = safe_eval(phi, x) - top;
    return v < -700.0 ? 0.0 : std::exp(v);
  };
  const double left = integrate(shifted, lo, peak, rel_tol);
  const double right = integrate(shifted, peak, hi, rel_tol);
  return top + std::log(left + right);
}

}  // namespace rdecay::quad
