#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rdecay {

enum class PresetKind { euclidean, constant_curvature, damek_ricci, custom_table };

const char* to_string(PresetKind k);
PresetKind preset_from_string(const std::string& s);

using Params = std::map<std::string, double>;
using MuTable = std::vector<std::pair<double, double>>;

/// Rotationally symmetric model manifold described by its spherical mean
/// curvature mu(r) = d/dr ln rho(r). Immutable; copies share state.
///
/// mu is stored through its regular part g(r) = mu(r) - (n-1)/r, which stays
/// bounded at the origin.
class ModelManifold {
 public:
  int dimension() const { return n_; }
  double kappa() const { return kappa_; }
  PresetKind kind() const { return kind_; }
  const Params& params() const { return params_; }

  double mu(double r) const { return (n_ - 1) / r + regular_(r); }
  double mu_regular(double r) const { return regular_(r); }

  /// lim_{r -> inf} mu(r).
  double mu_infinity() const { return mu_inf_; }

  /// Every preset profile is non-increasing; custom tables are not assumed to be.
  bool mu_known_non_increasing() const { return kind_ != PresetKind::custom_table; }

  /// Knot radii of a custom table (empty for presets).
  const std::vector<double>& knots() const;

  /// Spectral bottom E used by the coefficient bound (preset default or params["E"]).
  double spectral_bottom() const;

  /// Same manifold, different declared Ricci parameter (no validation).
  ModelManifold with_kappa(double kappa) const;

 private:
  friend ModelManifold make_preset(PresetKind, int, const Params&);
  friend ModelManifold make_custom(int, double, const MuTable&, const Params&);

  int n_ = 2;
  double kappa_ = 0.0;
  PresetKind kind_ = PresetKind::euclidean;
  Params params_;
  double mu_inf_ = 0.0;
  double spectral_bottom_ = 0.0;
  std::function<double(double)> regular_;
  // int_0^r g in closed form when available (custom tables); empty for presets.
  std::function<double(double)> regular_antiderivative_;
  std::shared_ptr<const std::vector<double>> knots_;

  friend double regular_integral(const ModelManifold& m, double a, double b);
};

/// euclidean: mu = (n-1)/r
/// constant_curvature: mu = (n-1) sqrt(k) coth(sqrt(k) r), params {kappa}
/// damek_ricci: mu = (m+k)/2 coth(r/2) + k/2 tanh(r/2), params {m, k}, n = m+k+1
ModelManifold make_preset(PresetKind kind, int n, const Params& params = {});

/// Custom profile from (r, mu) samples. Throws std::invalid_argument on a bad
/// table or when the Bishop comparison fails for the declared kappa.
ModelManifold make_custom(int n, double kappa, const MuTable& table, const Params& params = {});

/// c_{n-1} = 2 pi^(n/2) / Gamma(n/2), the area of the unit (n-1)-sphere.
double sphere_constant(int n);

/// Bishop comparison curvature (n-1) sqrt(k) / tanh(sqrt(k) r); (n-1)/r for k = 0.
double bishop_mu(int n, double kappa, double r);

/// ln of c_{n-1} (sinh(sqrt(k) r)/sqrt(k))^(n-1).
double log_comparison_area(int n, double kappa, double r);

/// V_k(b) = c_{n-1} int_0^b (sinh(sqrt(k) s)/sqrt(k))^(n-1) ds.
double comparison_volume(int n, double kappa, double b);

/// int_a^b (mu(s) - (n-1)/s) ds.
double regular_integral(const ModelManifold& m, double a, double b);

double log_density(const ModelManifold& m, double r);
double density(const ModelManifold& m, double r);
double area(const ModelManifold& m, double r);
double log_area(const ModelManifold& m, double r);
double volume(const ModelManifold& m, double r);

/// ln A(r) on an increasing grid by panel-wise accumulation (same values as log_area).
std::vector<double> log_area_on_grid(const ModelManifold& m, const std::vector<double>& grid);

/// mu_env(r) = sup_{t >= r} mu(t), evaluated on [r0, r_max] and held at its tail
/// value beyond r_max. Non-increasing and >= mu.
class MuEnvelope {
 public:
  MuEnvelope() = default;
  MuEnvelope(ModelManifold model, double r0, double r_max);

  double operator()(double r) const;
  double r0() const { return r0_; }
  double r_max() const { return r_max_; }
  double tail_value() const { return tail_; }
  /// Sample points used for the running maximum (includes custom knots).
  const std::vector<double>& samples() const { return t_; }

 private:
  std::shared_ptr<const ModelManifold> model_;
  double r0_ = 0.0;
  double r_max_ = 0.0;
  double tail_ = 0.0;
  std::vector<double> t_;
  std::vector<double> suffix_max_;
  std::vector<double> peak_r_;  // interior maximum of mu in each sample cell, if any
  std::vector<double> peak_v_;
};

MuEnvelope mu_envelope(const ModelManifold& m, double r0, double r_max);

struct BishopReport {
  bool pass = true;
  double first_violation_r = 0.0;  // meaningful only when !pass
  double max_excess = 0.0;         // max of mu - bishop_mu over the grid
  double worst_r = 0.0;
  int samples = 0;
};

inline constexpr double kBishopTolerance = 1e-10;

/// Checks mu(r) <= bishop_mu(n, kappa, r) + 1e-10 on a log grid over [1e-3, r_max]
/// (plus the knots of a custom table).
BishopReport bishop_check(const ModelManifold& m, double r_max = 100.0);

}  // namespace rdecay
