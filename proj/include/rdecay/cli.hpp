#pragma once

#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace rdecay::cli {

enum class Command { kernel, sums, bounds, rates, bessel, verify };

Command command_from_string(const std::string& s);
const char* to_string(Command c);

inline constexpr const char* kVersion = "1.0.0";

struct JobConfig {
  Command command = Command::kernel;
  std::string model_path;
  std::vector<std::string> lambda_labels;  // as typed, used for per-lambda file names
  std::vector<double> lambdas;
  double r0 = 1.0;
  double r_max = 0.0;  // 0: default
  int grid_points = 0; // 0: default spacing
  std::string out_path;  // empty: standard output
  std::string format = "csv";
  std::string suite = "all";
  std::vector<double> positional;  // bessel: nu, x
};

/// Splits "0.5,1,2" into labels and values; throws ParseError on malformed entries.
void parse_lambda_list(const std::string& text, JobConfig& cfg);

/// Throws ParseError when the configuration is inconsistent.
void validate(const JobConfig& cfg);

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string format_number(double v);
std::string to_csv(const Table& t);
std::string to_json(const Table& t, const JobConfig& cfg, double lambda, const std::string& model_echo);

/// File name for one lambda of a list: "out.csv" -> "out_lambda=0.5.csv".
std::string lambda_path(const std::string& out_path, const std::string& label);

/// Writes via a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

/// Runs a job; returns the process exit status (0 ok, 1 verify violation,
/// 2 parse or configuration error, 3 numerical failure).
int run(const JobConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace rdecay::cli
