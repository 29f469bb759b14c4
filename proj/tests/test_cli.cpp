#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "rdecay/cli.hpp"
#include "rdecay/descriptor.hpp"
#include "rdecay/error.hpp"

using namespace rdecay;
using cli::Command;
using cli::JobConfig;

namespace {

const std::string kModels = RDECAY_MODELS_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(const JobConfig& cfg) {
  std::ostringstream out, err;
  const int code = cli::run(cfg, out, err);
  return {code, out.str(), err.str()};
}

JobConfig job(Command c, const std::string& model, const std::string& lambda) {
  JobConfig cfg;
  cfg.command = c;
  cfg.model_path = kModels + "/" + model;
  cli::parse_lambda_list(lambda, cfg);
  return cfg;
}

// value in `column` of the row whose first field equals `key`
double lookup(const std::string& csv, const std::string& key, int column) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + ",", 0) != 0) continue;
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i <= column; ++i) std::getline(row, cell, ',');
    return std::stod(cell);
  }
  return std::nan("");
}

}  // namespace

TEST_SUITE("descriptor") {
  TEST_CASE("presets") {
    const ModelManifold h = parse_model(R"({"type": "constant_curvature", "dimension": 3, "kappa": 1})");
    CHECK(h.kind() == PresetKind::constant_curvature);
    CHECK(h.mu(1.0) == doctest::Approx(2.0 / std::tanh(1.0)));
    const ModelManifold d = parse_model(R"({"type": "damek_ricci", "dimension": 4, "params": {"m": 2, "k": 1}})");
    CHECK(d.mu_infinity() == doctest::Approx(2.0));
    CHECK(parse_model(R"({"type": "euclidean", "dimension": 2})").dimension() == 2);
  }

  TEST_CASE("custom table") {
    nlohmann::json doc = {{"type", "custom_table"}, {"dimension", 3}, {"kappa", 1}};
    doc["table"] = nlohmann::json::array();
    for (int i = 1; i <= 400; ++i) {
      const double r = 0.05 * i;
      doc["table"].push_back({r, 2.0 / std::tanh(r) - 0.2});
    }
    const ModelManifold c = parse_model(doc.dump());
    CHECK(c.kind() == PresetKind::custom_table);
    CHECK(c.mu(3.0) == doctest::Approx(2.0 / std::tanh(3.0) - 0.2).epsilon(1e-6));
  }

  TEST_CASE("round trip") {
    const ModelManifold h = parse_model(R"({"type": "constant_curvature", "dimension": 5, "kappa": 0.5})");
    const ModelManifold g = parse_model(describe_model(h));
    CHECK(g.dimension() == 5);
    CHECK(g.kappa() == 0.5);
    CHECK(g.mu(2.0) == h.mu(2.0));
  }

  TEST_CASE("rejections") {
    for (const char* bad : {
             R"({"type": "euclidean", "dimension": 3, "colour": 1})",
             R"({"type": "euclidean", "dimension": 3.5})",
             R"({"type": "sphere", "dimension": 3})",
             R"({"type": "euclidean"})",
             R"({"type": "constant_curvature", "dimension": 3, "kappa": -1})",
             R"({"type": "constant_curvature", "dimension": 3, "kappa": 1, "params": {"kappa": 2}})",
             R"({"type": "euclidean", "dimension": 3, "table": [[1, 2], [2, 1], [3, 0.5]]})",
             R"({"type": "euclidean", "dimension": 3, "params": {"E": "zero"}})",
             R"({"type": "custom_table", "dimension": 3, "kappa": 0, "table": [[1, 5], [2, 5], [3, 5]]})",
             R"({"type": "damek_ricci", "dimension": 4, "params": {"m": 2, "k": 1}, "kappa": 0})",
             R"([1, 2, 3])",
             R"({"type": )",
         }) {
      CAPTURE(bad);
      CHECK_THROWS_AS(parse_model(bad), ParseError);
    }
    CHECK_THROWS_AS(load_model(kModels + "/does_not_exist.json"), ParseError);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("lambda lists") {
    JobConfig cfg;
    cli::parse_lambda_list("0.5, 1,2e0", cfg);
    CHECK(cfg.lambdas == std::vector<double>{0.5, 1.0, 2.0});
    CHECK(cfg.lambda_labels == std::vector<std::string>{"0.5", "1", "2e0"});
    CHECK_THROWS_AS(cli::parse_lambda_list("1,,2", cfg), ParseError);
    CHECK_THROWS_AS(cli::parse_lambda_list("one", cfg), ParseError);
  }

  TEST_CASE("validation") {
    JobConfig cfg = job(Command::kernel, "h3.json", "1");
    CHECK_NOTHROW(cli::validate(cfg));
    JobConfig neg = cfg;
    neg.lambdas = {-1.0};
    CHECK_THROWS_AS(cli::validate(neg), ParseError);
    JobConfig grid = cfg;
    grid.grid_points = 50;
    CHECK_THROWS_AS(cli::validate(grid), ParseError);
    JobConfig radii = cfg;
    radii.r0 = 5.0;
    radii.r_max = 4.0;
    CHECK_THROWS_AS(cli::validate(radii), ParseError);
    JobConfig fmt = cfg;
    fmt.format = "xml";
    CHECK_THROWS_AS(cli::validate(fmt), ParseError);
    CHECK(run(neg).code == 2);
  }

  TEST_CASE("number formatting") {
    CHECK(cli::format_number(0.1) == "0.10000000000000001");
    CHECK(cli::format_number(std::nan("")) == "nan");
    CHECK(cli::lambda_path("/tmp/out.csv", "0.5") == "/tmp/out_lambda=0.5.csv");
    cli::Table t{{"a", "b"}, {{1.0, std::string("x,y")}}};
    CHECK(cli::to_csv(t) == "a,b\n1,\"x,y\"\n");
  }

  TEST_CASE("flat kernel table") {
    JobConfig cfg = job(Command::kernel, "euclidean3.json", "1");
    cfg.r_max = 30.0;
    const Run r = run(cfg);
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("r,u,du,log_u,psi_bar,Psi\n", 0) == 0);
    CHECK(lookup(r.out, "2", 1) == doctest::Approx(std::exp(-2.0) / (8 * std::numbers::pi)).epsilon(1e-8));
    CHECK(run(cfg).out == r.out);
  }

  TEST_CASE("rates table") {
    const Run r = run(job(Command::rates, "h3.json", "1"));
    REQUIRE(r.code == 0);
    CHECK(lookup(r.out, "pointwise", 2) == doctest::Approx(1 + std::sqrt(2.0)).epsilon(1e-12));
    CHECK(lookup(r.out, "spherical_sum", 2) == doctest::Approx(std::sqrt(2.0) - 1).epsilon(1e-12));
    CHECK(lookup(r.out, "pointwise", 1) == doctest::Approx(1 + std::sqrt(2.0)).epsilon(1e-3));
  }

  TEST_CASE("bounds table") {
    JobConfig cfg = job(Command::bounds, "damek_ricci_m2_k1.json", "1");
    cfg.r0 = 2.0;
    const Run r = run(cfg);
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "r,psi_bar,bound_envelope,bound_uniform,lower_bound,ratio");
    int rows = 0;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string cell;
      std::vector<double> v;
      while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
      CHECK(v[0] >= 2.0);
      CHECK(v[5] <= 1.0);
      ++rows;
    }
    CHECK(rows > 100);
  }

  TEST_CASE("lambda fan-out and JSON") {
    const auto dir = std::filesystem::temp_directory_path() / "rdecay_cli_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    JobConfig cfg = job(Command::sums, "h5.json", "0.5,2");
    cfg.r_max = 20.0;
    cfg.format = "json";
    cfg.out_path = (dir / "s.json").string();
    REQUIRE(run(cfg).code == 0);
    for (const char* label : {"0.5", "2"}) {
      const auto p = dir / ("s_lambda=" + std::string(label) + ".json");
      REQUIRE(std::filesystem::exists(p));
      const auto j = nlohmann::json::parse(slurp(p));
      CHECK(j["version"] == cli::kVersion);
      CHECK(j["config"]["lambda"].get<double>() == std::stod(label));
      CHECK(j["model"]["type"] == "constant_curvature");
      CHECK(j["columns"][0] == "r");
      CHECK(j["rows"].size() > 100);
    }
    CHECK_FALSE(std::filesystem::exists(dir / "s_lambda=2.json.tmp"));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("bessel command") {
    JobConfig cfg;
    cfg.command = Command::bessel;
    cfg.positional = {0.5, 2.0};
    const Run r = run(cfg);
    REQUIRE(r.code == 0);
    CHECK(lookup(r.out, "K", 3) == doctest::Approx(0.119938).epsilon(1e-5));
    cfg.positional = {0.5};
    CHECK(run(cfg).code == 2);
  }

  TEST_CASE("error codes") {
    CHECK(run(job(Command::kernel, "missing.json", "1")).code == 2);
    JobConfig v;
    v.command = Command::verify;
    v.suite = "nonsense";
    CHECK(run(v).code == 2);
    v.suite = "model";
    const Run ok = run(v);
    CHECK(ok.code == 0);
    CHECK(ok.out.find("FAIL") == std::string::npos);
  }
}
