#include "rdecay/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rdecay/quadrature.hpp"

namespace rdecay {

namespace {

// x coth(x) - 1 without cancellation near 0.
double xcoth_minus_one(double x) {
  if (x < 1e-2) {
    const double x2 = x * x;
    return x2 * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0 - x2 / 4725.0)));
  }
  return x / std::tanh(x) - 1.0;
}

double param_or(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

bool is_nonneg_integer(double v) { return v >= 0.0 && std::floor(v) == v; }

// Piecewise cubic Hermite interpolant of the regular part g = mu - (n-1)/r with
// Steffen's monotone slopes. Below the first knot g is blended to 0 by a Hermite
// cubic, flat at the left end and C1 at the knot; for g = c r it stays under the
// chord (2t^2 - t^3 <= t), so a table inside the Bishop bound stays inside.
struct SteffenTable {
  int n = 2;
  std::vector<double> x, g, d, cumulative;  // cumulative[i] = int_0^{x_i} g
  double blend_lo = 0.0;
  double mu_last = 0.0;

  static double sgn(double v) { return (v > 0) - (v < 0); }

  void build() {
    const std::size_t k = x.size();
    d.assign(k, 0.0);
    std::vector<double> h(k - 1), s(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      h[i] = x[i + 1] - x[i];
      s[i] = (g[i + 1] - g[i]) / h[i];
    }
    if (k == 2) {
      d[0] = d[1] = s[0];
    } else {
      for (std::size_t i = 1; i + 1 < k; ++i) {
        const double p = (s[i - 1] * h[i] + s[i] * h[i - 1]) / (h[i - 1] + h[i]);
        d[i] = (sgn(s[i - 1]) + sgn(s[i])) * std::min({std::abs(s[i - 1]), std::abs(s[i]), 0.5 * std::abs(p)});
      }
      const auto endpoint = [](double s0, double s1, double h0, double h1) {
        const double p = s0 * (1.0 + h0 / (h0 + h1)) - s1 * h0 / (h0 + h1);
        if (p * s0 <= 0.0) return 0.0;
        if (std::abs(p) > 2.0 * std::abs(s0)) return 2.0 * s0;
        return p;
      };
      d[0] = endpoint(s[0], s[1], h[0], h[1]);
      d[k - 1] = endpoint(s[k - 2], s[k - 3], h[k - 2], h[k - 3]);
    }
    blend_lo = std::max(0.0, x[0] - h[0]);
    const double hb = x[0] - blend_lo;
    cumulative.assign(k, 0.0);
    cumulative[0] = 0.5 * hb * g[0] + hb * hb / 12.0 * (0.0 - d[0]);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      cumulative[i + 1] = cumulative[i] + 0.5 * h[i] * (g[i] + g[i + 1]) + h[i] * h[i] / 12.0 * (d[i] - d[i + 1]);
    }
  }

  std::size_t cell(double r) const {
    auto it = std::upper_bound(x.begin(), x.end(), r);
    return static_cast<std::size_t>(std::distance(x.begin(), it)) - 1;
  }

  double value(double r) const {
    if (r <= x.front()) {
      if (r <= blend_lo) return 0.0;
      return hermite(blend_lo, x.front(), 0.0, g.front(), 0.0, d.front(), r);
    }
    if (r >= x.back()) return mu_last - (n - 1) / r;
    const std::size_t i = cell(r);
    return hermite(x[i], x[i + 1], g[i], g[i + 1], d[i], d[i + 1], r);
  }

  static double hermite(double xa, double xb, double ga, double gb, double da, double db, double r) {
    const double h = xb - xa;
    const double t = (r - xa) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * ga + h10 * h * da + h01 * gb + h11 * h * db;
  }

  // int_{xa}^r of the Hermite cubic.
  static double hermite_integral(double xa, double xb, double ga, double gb, double da, double db, double r) {
    const double h = xb - xa;
    const double t = (r - xa) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double i00 = t - t3 + 0.5 * t4;
    const double i10 = 0.5 * t2 - 2.0 * t3 / 3.0 + 0.25 * t4;
    const double i01 = t3 - 0.5 * t4;
    const double i11 = 0.25 * t4 - t3 / 3.0;
    return h * (i00 * ga + i10 * h * da + i01 * gb + i11 * h * db);
  }

  // int_0^r g, exact for the interpolant.
  double integral(double r) const {
    if (r <= x.front()) {
      if (r <= blend_lo) return 0.0;
      return hermite_integral(blend_lo, x.front(), 0.0, g.front(), 0.0, d.front(), r);
    }
    if (r >= x.back()) {
      return cumulative.back() + mu_last * (r - x.back()) - (n - 1) * std::log(r / x.back());
    }
    const std::size_t i = cell(r);
    return cumulative[i] + hermite_integral(x[i], x[i + 1], g[i], g[i + 1], d[i], d[i + 1], r);
  }
};

// ln(sinh x / x), stable for both small and large x
double log_sinhc(double x) {
  if (x < 1e-4) return x * x / 6.0;
  if (x > 30.0) return x - std::log(2.0 * x) + std::log1p(-std::exp(-2.0 * x));
  return std::log(std::sinh(x) / x);
}

double log_cosh(double x) { return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0); }

}  // namespace

const char* to_string(PresetKind k) {
  switch (k) {
    case PresetKind::euclidean: return "euclidean";
    case PresetKind::constant_curvature: return "constant_curvature";
    case PresetKind::damek_ricci: return "damek_ricci";
    case PresetKind::custom_table: return "custom_table";
  }
  return "unknown";
}

PresetKind preset_from_string(const std::string& s) {
  if (s == "euclidean") return PresetKind::euclidean;
  if (s == "constant_curvature") return PresetKind::constant_curvature;
  if (s == "damek_ricci") return PresetKind::damek_ricci;
  if (s == "custom_table") return PresetKind::custom_table;
  throw std::invalid_argument("unknown model type '" + s + "'");
}

const std::vector<double>& ModelManifold::knots() const {
  static const std::vector<double> empty;
  return knots_ ? *knots_ : empty;
}

double ModelManifold::spectral_bottom() const { return spectral_bottom_; }

ModelManifold ModelManifold::with_kappa(double kappa) const {
  ModelManifold copy = *this;
  copy.kappa_ = kappa;
  return copy;
}

ModelManifold make_preset(PresetKind kind, int n, const Params& params) {
  if (n < 2) throw std::invalid_argument("model dimension must be >= 2, got " + std::to_string(n));
  ModelManifold m;
  m.n_ = n;
  m.kind_ = kind;
  m.params_ = params;
  switch (kind) {
    case PresetKind::euclidean: {
      m.kappa_ = 0.0;
      m.mu_inf_ = 0.0;
      m.regular_ = [](double) { return 0.0; };
      m.regular_antiderivative_ = [](double) { return 0.0; };
      m.spectral_bottom_ = param_or(params, "E", 0.0);
      break;
    }
    case PresetKind::constant_curvature: {
      const double kappa = param_or(params, "kappa", 0.0);
      if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw std::invalid_argument("constant_curvature needs kappa >= 0, got " + std::to_string(kappa));
      }
      const double sk = std::sqrt(kappa);
      m.kappa_ = kappa;
      m.mu_inf_ = (n - 1) * sk;
      m.regular_ = [n, sk](double r) { return (n - 1) * xcoth_minus_one(sk * r) / r; };
      m.regular_antiderivative_ = [n, sk](double r) { return (n - 1) * log_sinhc(sk * r); };
      m.spectral_bottom_ = param_or(params, "E", (n - 1) * (n - 1) * kappa / 4.0);
      break;
    }
    case PresetKind::damek_ricci: {
      const double md = param_or(params, "m", -1.0);
      const double kd = param_or(params, "k", -1.0);
      if (!is_nonneg_integer(md) || !is_nonneg_integer(kd)) {
        throw std::invalid_argument("damek_ricci needs integer parameters m, k >= 0");
      }
      if (md + kd < 1.0 || static_cast<int>(md + kd) + 1 != n) {
        throw std::invalid_argument("damek_ricci parameter mismatch: n = m + k + 1 required (n=" + std::to_string(n) +
                                    ", m=" + std::to_string(static_cast<int>(md)) +
                                    ", k=" + std::to_string(static_cast<int>(kd)) + ")");
      }
      const double mk = md + kd;
      m.kappa_ = (md / 4.0 + kd) / mk;
      m.mu_inf_ = 0.5 * mk + 0.5 * kd;
      m.regular_ = [mk, kd](double r) { return mk * xcoth_minus_one(0.5 * r) / r + 0.5 * kd * std::tanh(0.5 * r); };
      m.regular_antiderivative_ = [mk, kd](double r) { return mk * log_sinhc(0.5 * r) + kd * log_cosh(0.5 * r); };
      m.spectral_bottom_ = param_or(params, "E", m.mu_inf_ * m.mu_inf_ / 4.0);
      break;
    }
    case PresetKind::custom_table:
      throw std::invalid_argument("custom_table models are built with make_custom");
  }
  return m;
}

ModelManifold make_custom(int n, double kappa, const MuTable& table, const Params& params) {
  if (n < 2) throw std::invalid_argument("model dimension must be >= 2, got " + std::to_string(n));
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be >= 0");
  if (table.size() < 3) throw std::invalid_argument("custom table needs at least 3 (r, mu) rows");
  auto st = std::make_shared<SteffenTable>();
  st->n = n;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto [r, mu] = table[i];
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("custom table radii must be positive");
    if (!std::isfinite(mu)) throw std::invalid_argument("custom table mu values must be finite");
    if (i > 0 && !(r > table[i - 1].first)) {
      throw std::invalid_argument("custom table radii must be strictly increasing (row " + std::to_string(i) + ")");
    }
    st->x.push_back(r);
    st->g.push_back(mu - (n - 1) / r);
  }
  st->mu_last = table.back().second;
  st->build();

  ModelManifold m;
  m.n_ = n;
  m.kappa_ = kappa;
  m.kind_ = PresetKind::custom_table;
  m.params_ = params;
  m.mu_inf_ = st->mu_last;
  m.spectral_bottom_ = param_or(params, "E", 0.0);
  m.regular_ = [st](double r) { return st->value(r); };
  m.regular_antiderivative_ = [st](double r) { return st->integral(r); };
  m.knots_ = std::make_shared<const std::vector<double>>(st->x);

  const BishopReport rep = bishop_check(m, std::max(100.0, 2.0 * st->x.back()));
  if (!rep.pass) {
    throw std::invalid_argument("custom table violates the Bishop comparison for kappa=" + std::to_string(kappa) +
                                ": first offending r=" + std::to_string(rep.first_violation_r) +
                                " (excess " + std::to_string(rep.max_excess) + ")");
  }
  return m;
}

double sphere_constant(int n) { return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n); }

double bishop_mu(int n, double kappa, double r) {
  if (kappa == 0.0) return (n - 1) / r;
  const double sk = std::sqrt(kappa);
  return (n - 1) * sk / std::tanh(sk * r);
}

double log_comparison_area(int n, double kappa, double r) {
  double log_warp = std::log(r);
  if (kappa > 0.0) {
    log_warp += log_sinhc(std::sqrt(kappa) * r);
  }
  return std::log(sphere_constant(n)) + (n - 1) * log_warp;
}

double comparison_volume(int n, double kappa, double b) {
  return quad::integrate([&](double s) { return std::exp(log_comparison_area(n, kappa, s)); }, 0.0, b, 1e-13);
}

double regular_integral(const ModelManifold& m, double a, double b) {
  if (m.regular_antiderivative_) return m.regular_antiderivative_(b) - m.regular_antiderivative_(a);
  // Unit panels keep the adaptive rule well inside its depth budget on long ranges.
  double total = 0.0;
  double lo = a;
  while (lo < b) {
    const double hi = std::min(b, lo + 1.0);
    total += quad::integrate(m.regular_, lo, hi, 1e-13);
    lo = hi;
  }
  return total;
}

double log_density(const ModelManifold& m, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("density: r must be > 0");
  return (m.dimension() - 1) * std::log(r) + regular_integral(m, 0.0, r);
}

double density(const ModelManifold& m, double r) { return std::exp(log_density(m, r)); }

double log_area(const ModelManifold& m, double r) { return std::log(sphere_constant(m.dimension())) + log_density(m, r); }

double area(const ModelManifold& m, double r) { return std::exp(log_area(m, r)); }

double volume(const ModelManifold& m, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("volume: r must be > 0");
  const double c = std::log(sphere_constant(m.dimension()));
  const int n = m.dimension();
  // Inner integral accumulated along the outer quadrature would be cheaper, but the
  // adaptive rule visits points out of order; nested evaluation keeps this simple.
  return quad::integrate(
      [&](double s) { return s <= 0.0 ? 0.0 : std::exp(c + (n - 1) * std::log(s) + regular_integral(m, 0.0, s)); },
      0.0, r, 1e-12);
}

std::vector<double> log_area_on_grid(const ModelManifold& m, const std::vector<double>& grid) {
  std::vector<double> out(grid.size());
  const double c = std::log(sphere_constant(m.dimension()));
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("log_area_on_grid: grid must increase");
    acc += regular_integral(m, prev, grid[i]);
    prev = grid[i];
    out[i] = c + (m.dimension() - 1) * std::log(grid[i]) + acc;
  }
  return out;
}

MuEnvelope::MuEnvelope(ModelManifold model, double r0, double r_max)
    : model_(std::make_shared<const ModelManifold>(std::move(model))), r0_(r0), r_max_(r_max) {
  if (!(r0 > 0.0) || !(r_max > r0)) throw std::invalid_argument("mu_envelope: need 0 < r0 < r_max");
  const double span = r_max - r0;
  const std::size_t count = static_cast<std::size_t>(std::clamp(span / 0.01, 2000.0, 400000.0));
  t_.reserve(count + 1 + model_->knots().size());
  for (std::size_t i = 0; i <= count; ++i) t_.push_back(r0 + span * static_cast<double>(i) / count);
  t_.back() = r_max;
  for (double k : model_->knots()) {
    if (k > r0 && k < r_max) t_.push_back(k);
  }
  std::sort(t_.begin(), t_.end());
  t_.erase(std::unique(t_.begin(), t_.end()), t_.end());

  tail_ = std::max(model_->mu(r_max), model_->mu_infinity());
  for (double k : model_->knots()) {
    if (k > r_max) tail_ = std::max(tail_, model_->mu(k));
  }
  // mu can peak strictly inside a sample cell when the regular part increases;
  // locate such peaks so the running maximum sees them.
  peak_r_.assign(t_.size(), quad::kInf);
  peak_v_.assign(t_.size(), -quad::kInf);
  if (!model_->mu_known_non_increasing()) {
    const auto& f = *model_;
    for (std::size_t j = 0; j + 1 < t_.size(); ++j) {
      const double a = t_[j], b = t_[j + 1];
      // An interior maximum shows up as mu rising off the left end and falling into the right end.
      const double d = 1e-6 * (b - a);
      if (!(f.mu(a + d) > f.mu(a)) || !(f.mu(b - d) > f.mu(b))) continue;
      double lo = a, hi = b;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 50; ++it) {
        const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        if (f.mu(x1) < f.mu(x2)) lo = x1; else hi = x2;
      }
      peak_r_[j] = 0.5 * (lo + hi);
      peak_v_[j] = f.mu(peak_r_[j]);
    }
  }
  suffix_max_.resize(t_.size());
  double running = tail_;
  for (std::size_t i = t_.size(); i-- > 0;) {
    running = std::max({running, model_->mu(t_[i]), peak_v_[i]});
    suffix_max_[i] = running;
  }
}

double MuEnvelope::operator()(double r) const {
  if (r > r_max_) return tail_;
  const double mu = model_->mu(r);
  if (r < t_.front()) return std::max(mu, suffix_max_.front());
  auto it = std::upper_bound(t_.begin(), t_.end(), r);
  const std::size_t next = static_cast<std::size_t>(it - t_.begin());
  double v = std::max(mu, it == t_.end() ? tail_ : suffix_max_[next]);
  const std::size_t cell = next - 1;
  if (peak_r_[cell] >= r) v = std::max(v, peak_v_[cell]);
  return v;
}

MuEnvelope mu_envelope(const ModelManifold& m, double r0, double r_max) { return MuEnvelope(m, r0, r_max); }

BishopReport bishop_check(const ModelManifold& m, double r_max) {
  constexpr int kGrid = 2000;
  std::vector<double> rs;
  rs.reserve(kGrid + m.knots().size());
  const double lo = std::log(1e-3), hi = std::log(r_max);
  for (int i = 0; i < kGrid; ++i) rs.push_back(std::exp(lo + (hi - lo) * i / (kGrid - 1)));
  for (double k : m.knots()) {
    if (k >= 1e-3 && k <= r_max) rs.push_back(k);
  }
  std::sort(rs.begin(), rs.end());

  BishopReport rep;
  rep.samples = static_cast<int>(rs.size());
  rep.max_excess = -quad::kInf;
  for (double r : rs) {
    const double excess = m.mu(r) - bishop_mu(m.dimension(), m.kappa(), r);
    if (excess > rep.max_excess) {
      rep.max_excess = excess;
      rep.worst_r = r;
    }
    if (excess > kBishopTolerance && rep.pass) {
      rep.pass = false;
      rep.first_violation_r = r;
    }
  }
  return rep;
}

}  // namespace rdecay
