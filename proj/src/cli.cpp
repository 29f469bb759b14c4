#include "rdecay/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rdecay/bounds.hpp"
#include "rdecay/descriptor.hpp"
#include "rdecay/error.hpp"
#include "rdecay/resolvent.hpp"
#include "rdecay/specfun.hpp"
#include "rdecay/verify.hpp"

namespace rdecay::cli {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SolverConfig solver_config(const JobConfig& cfg) {
  SolverConfig sc;
  sc.r0 = cfg.r0;
  sc.r_max = cfg.r_max;
  sc.grid_points = cfg.grid_points;
  return sc;
}

// Integer radii are always on the grid so tables can be compared row by row.
RadialResolvent solve(const ModelManifold& m, double lambda, const JobConfig& cfg) {
  SolverConfig sc = solver_config(cfg);
  const double r_max = sc.r_max > 0.0 ? sc.r_max : default_r_max(m, lambda, cfg.r0);
  for (int k = 1; k < r_max; ++k) sc.extra_radii.push_back(k);
  return solve_radial(m, lambda, sc);
}

Table kernel_table(const ModelManifold& m, double lambda, const JobConfig& cfg) {
  const RadialResolvent res = solve(m, lambda, cfg);
  const SphericalSums sums = spherical_sums(res);
  Table t{{"r", "u", "du", "log_u", "psi_bar", "Psi"}, {}};
  for (std::size_t i = 0; i < res.size(); ++i) {
    t.rows.push_back({res.grid[i], res.u[i], res.du[i], res.log_u[i], sums.psi_bar[i], sums.Psi[i]});
  }
  return t;
}

Table sums_table(const ModelManifold& m, double lambda, const JobConfig& cfg) {
  const RadialResolvent res = solve(m, lambda, cfg);
  const SphericalSums sums = spherical_sums(res);
  Table t{{"r", "psi_bar", "Psi", "log_psi_bar", "flux"}, {}};
  for (std::size_t i = 0; i < res.size(); ++i) {
    t.rows.push_back({res.grid[i], sums.psi_bar[i], sums.Psi[i], sums.log_psi_bar[i], flux(res, i)});
  }
  return t;
}

Table bounds_table(const ModelManifold& m, double lambda, const JobConfig& cfg) {
  const RadialResolvent res = solve(m, lambda, cfg);
  const DecayBound b = main_bound(res, cfg.r0);
  Table t{{"r", "psi_bar", "bound_envelope", "bound_uniform", "lower_bound", "ratio"}, {}};
  for (std::size_t i = 0; i < res.size(); ++i) {
    const double r = res.grid[i];
    if (r < cfg.r0) continue;
    const double log_psi = res.log_psi_bar(i);
    double lower = kNaN;
    try {
      lower = std::exp(res.log_area[i] + log_lower_bound(m.dimension(), m.kappa(), lambda, r));
    } catch (const std::out_of_range&) {
      // beyond the comparison kernel's grid
    }
    t.rows.push_back({r, std::exp(log_psi), b.evaluator(r), b.uniform(r), lower, std::exp(log_psi - b.log_evaluator(r))});
  }
  return t;
}

Table rates_table(const ModelManifold& m, double lambda, const JobConfig& cfg) {
  const RadialResolvent res = solve(m, lambda, cfg);
  const ExpectedRates e = expected_rates(m, lambda);
  const double r_lo = std::max(cfg.r0, 1.0);
  const double r_a = r_lo + 0.4 * (res.r_max() - r_lo), r_b = r_lo + 0.8 * (res.r_max() - r_lo);
  std::vector<double> log_psi(res.size()), log_mean(res.size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    log_psi[i] = res.log_psi_bar(i);
    log_mean[i] = log_psi[i] - res.log_area[i];
  }
  Table t{{"quantity", "fitted_rate", "expected_rate", "residual", "r_a", "r_b"}, {}};
  const auto fitted = [&](const std::string& name, const std::vector<double>& logs, double expected) {
    const RateFit f = rate_fit_log(res.grid, logs, r_a, r_b, expected);
    t.rows.push_back({name, f.fitted_rate, f.expected_rate, f.residual, f.r_a, f.r_b});
  };
  fitted("pointwise", res.log_u, e.pointwise);
  fitted("spherical_sum", log_psi, e.spherical_sum);
  fitted("spherical_mean", log_mean, e.spherical_mean);
  t.rows.push_back({std::string("uniform_alpha_infinity"), kNaN, e.alpha_infinity, kNaN, kNaN, kNaN});
  t.rows.push_back({std::string("spectral_bottom_pointwise"), kNaN, e.e_based_pointwise, kNaN, kNaN, kNaN});
  t.rows.push_back({std::string("spectral_bottom_spherical_sum"), kNaN, e.e_based_sum, kNaN, kNaN, kNaN});
  return t;
}

Table bessel_table(double nu, double x) {
  using namespace specfun;
  Table t{{"check", "nu", "x", "value", "reference", "rel_diff", "method"}, {}};
  const BesselEval ev = bessel_k_eval(nu, x);
  const BesselEval q = bessel_k_eval(nu, x, BesselMethod::quadrature);
  t.rows.push_back({std::string("K"), nu, x, ev.value, q.value, std::expm1(ev.log_value - q.log_value),
                    std::string(to_string(ev.method))});
  t.rows.push_back({std::string("log_K"), nu, x, ev.log_value, q.log_value, ev.log_value - q.log_value,
                    std::string(to_string(ev.method))});
  const double twice = 2.0 * nu;
  if (std::abs(twice - std::round(twice)) < 1e-12 && static_cast<long>(std::round(twice)) % 2 == 1) {
    const BesselEval c = bessel_k_eval(nu, x, BesselMethod::closed_half_integer);
    t.rows.push_back({std::string("closed_half_integer"), nu, x, q.value, c.value,
                      std::expm1(q.log_value - c.log_value), std::string("quadrature")});
  }
  const LaplaceIntegralParams p{0.5 * x, 0.5 * x, nu + 1.0};
  const double cf = log_laplace_bessel_integral(p, IntegralMode::closed_form);
  const double qd = log_laplace_bessel_integral(p, IntegralMode::quadrature);
  t.rows.push_back({std::string("laplace_identity"), nu, x, std::exp(cf), std::exp(qd), std::expm1(cf - qd),
                    std::string("closed_form_vs_quadrature")});
  return t;
}

Table verify_table(const std::vector<CheckResult>& results) {
  Table t{{"suite", "check", "status", "measured", "tolerance", "detail"}, {}};
  for (const CheckResult& r : results) {
    t.rows.push_back({r.suite, r.name, std::string(r.pass ? "pass" : "FAIL"), r.measured, r.tolerance, r.detail});
  }
  return t;
}

std::string render(const Table& t, const JobConfig& cfg, double lambda, const std::string& model_echo) {
  return cfg.format == "json" ? to_json(t, cfg, lambda, model_echo) : to_csv(t);
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    write_atomic(path, content);
  }
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

Command command_from_string(const std::string& s) {
  if (s == "kernel") return Command::kernel;
  if (s == "sums") return Command::sums;
  if (s == "bounds") return Command::bounds;
  if (s == "rates") return Command::rates;
  if (s == "bessel") return Command::bessel;
  if (s == "verify") return Command::verify;
  throw ParseError("unknown command '" + s + "'");
}

const char* to_string(Command c) {
  switch (c) {
    case Command::kernel: return "kernel";
    case Command::sums: return "sums";
    case Command::bounds: return "bounds";
    case Command::rates: return "rates";
    case Command::bessel: return "bessel";
    case Command::verify: return "verify";
  }
  return "unknown";
}

void parse_lambda_list(const std::string& text, JobConfig& cfg) {
  cfg.lambdas.clear();
  cfg.lambda_labels.clear();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ParseError("--lambda: empty entry in '" + text + "'");
    item = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ParseError("--lambda: '" + item + "' is not a number");
    cfg.lambdas.push_back(v);
    cfg.lambda_labels.push_back(item);
  }
  if (cfg.lambdas.empty()) throw ParseError("--lambda: no values given");
}

void validate(const JobConfig& cfg) {
  const bool needs_model = cfg.command == Command::kernel || cfg.command == Command::sums ||
                           cfg.command == Command::bounds || cfg.command == Command::rates;
  if (needs_model) {
    if (cfg.model_path.empty()) throw ParseError(std::string(to_string(cfg.command)) + ": --model is required");
    if (cfg.lambdas.empty()) throw ParseError(std::string(to_string(cfg.command)) + ": --lambda is required");
  }
  for (double l : cfg.lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ParseError("--lambda values must be positive");
  }
  if (!(cfg.r0 > 0.0) || !std::isfinite(cfg.r0)) throw ParseError("--r0 must be positive");
  if (cfg.r_max != 0.0 && !(cfg.r_max > cfg.r0)) throw ParseError("--rmax must exceed --r0");
  if (cfg.grid_points != 0 && cfg.grid_points < 100) throw ParseError("--grid must be at least 100");
  if (cfg.format != "csv" && cfg.format != "json") throw ParseError("--format must be csv or json");
  if (cfg.command == Command::bessel) {
    if (cfg.positional.size() != 2) throw ParseError("bessel: expected <nu> <x>");
    if (!(cfg.positional[0] >= 0.0) || !(cfg.positional[1] > 0.0)) throw ParseError("bessel: need nu >= 0, x > 0");
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t j = 0; j < t.columns.size(); ++j) s += (j ? "," : "") + t.columns[j];
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) s += ',';
      if (const double* d = std::get_if<double>(&row[j])) {
        s += format_number(*d);
      } else {
        s += csv_escape(std::get<std::string>(row[j]));
      }
    }
    s += '\n';
  }
  return s;
}

std::string to_json(const Table& t, const JobConfig& cfg, double lambda, const std::string& model_echo) {
  json j;
  j["version"] = kVersion;
  j["command"] = to_string(cfg.command);
  json c;
  c["model"] = cfg.model_path;
  if (std::isfinite(lambda)) c["lambda"] = lambda;
  c["r0"] = cfg.r0;
  c["rmax"] = cfg.r_max;
  c["grid"] = cfg.grid_points;
  c["format"] = cfg.format;
  if (cfg.command == Command::verify) c["suite"] = cfg.suite;
  j["config"] = c;
  if (!model_echo.empty()) j["model"] = json::parse(model_echo);
  j["columns"] = t.columns;
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const Cell& cell : row) {
      if (const double* d = std::get_if<double>(&cell)) {
        // Non-finite values have no JSON number form; keep them as the CSV spelling.
        r.push_back(std::isfinite(*d) ? json(*d) : json(format_number(*d)));
      } else {
        r.push_back(std::get<std::string>(cell));
      }
    }
    rows.push_back(r);
  }
  j["rows"] = rows;
  return j.dump(1) + "\n";
}

std::string lambda_path(const std::string& out_path, const std::string& label) {
  const std::filesystem::path p(out_path);
  const std::string stem = p.stem().string() + "_lambda=" + label;
  return (p.parent_path() / (stem + p.extension().string())).string();
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f << content;
    if (!f.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

int run(const JobConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    validate(cfg);
    if (cfg.command == Command::verify) {
      const std::vector<CheckResult> results = run_suite(cfg.suite);
      bool ok = true;
      for (const CheckResult& r : results) {
        ok = ok && r.pass;
        out << std::left << std::setw(10) << r.suite << std::setw(66) << r.name << (r.pass ? "pass  " : "FAIL  ")
            << std::setw(24) << format_number(r.measured) << format_number(r.tolerance)
            << (r.detail.empty() ? "" : "  " + r.detail) << '\n';
      }
      out << (ok ? "all checks passed" : "invariant violations found") << '\n';
      if (!cfg.out_path.empty()) write_atomic(cfg.out_path, render(verify_table(results), cfg, kNaN, {}));
      return ok ? 0 : 1;
    }
    if (cfg.command == Command::bessel) {
      emit(cfg.out_path, render(bessel_table(cfg.positional[0], cfg.positional[1]), cfg, kNaN, {}), out);
      return 0;
    }

    const ModelManifold model = load_model(cfg.model_path);
    const std::string echo = describe_model(model);
    const auto job = [&](double lambda) {
      Table t;
      switch (cfg.command) {
        case Command::kernel: t = kernel_table(model, lambda, cfg); break;
        case Command::sums: t = sums_table(model, lambda, cfg); break;
        case Command::bounds: t = bounds_table(model, lambda, cfg); break;
        default: t = rates_table(model, lambda, cfg); break;
      }
      return render(t, cfg, lambda, echo);
    };
    std::vector<std::future<std::string>> jobs;
    for (double lambda : cfg.lambdas) jobs.push_back(std::async(std::launch::async, job, lambda));
    std::vector<std::string> contents;
    for (auto& f : jobs) contents.push_back(f.get());
    for (std::size_t i = 0; i < contents.size(); ++i) {
      if (contents.size() == 1) {
        emit(cfg.out_path, contents[i], out);
      } else if (cfg.out_path.empty()) {
        out << "# lambda=" << cfg.lambda_labels[i] << '\n' << contents[i];
      } else {
        write_atomic(lambda_path(cfg.out_path, cfg.lambda_labels[i]), contents[i]);
      }
    }
    return 0;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace rdecay::cli
