#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lp {

using Json = nlohmann::json;

inline constexpr std::string_view kSchema = "lp-1";

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t h);

struct Assertion {
  std::string name;
  bool pass = false;
  double value = 0;
  double threshold = 0;
  std::string detail;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Json>> rows;
};

std::string to_csv(const Table& t);

struct RateFit {
  std::vector<double> log_n;
  std::vector<double> log_gap;
  std::vector<long> grid;      // n values used
  std::vector<long> excluded;  // n values dropped for a nonpositive gap
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

/// OLS of ln(gap) on ln(n). Needs at least 4 usable points.
RateFit fit_rate(const std::vector<long>& n, const std::vector<double>& gap);

/// Parses "128..8192:geometric" (doubling), "128..8192:geometricx4", or a
/// comma list "128,256,512". Throws on an empty or nonpositive grid.
std::vector<long> parse_grid(std::string_view text);

/// Names accepted by `run`.
const std::vector<std::string>& experiment_names();

/// Complete configuration for `experiment`, thresholds included.
Json default_config(std::string_view experiment);

/// default_config(config["experiment"]) with `config` merged over it.
/// Throws std::invalid_argument for an unknown experiment or an invalid grid.
Json resolve_config(const Json& config);

struct RunResult {
  Json document;
  Table table;

  bool pass() const { return document.value("pass", false); }
};

/// Resolves, validates and runs one experiment. The document carries the
/// schema tag, the resolved config, its input hash, the result, the
/// assertions, a hash of everything deterministic, and the wall-clock runtime.
RunResult run(const Json& config);

/// Writes the JSON document and, when `csv` is non-empty and the experiment
/// is tabular, the CSV table. Parent directories are created.
void write_outputs(const RunResult& r, const std::filesystem::path& json_path, const std::filesystem::path& csv);

}  // namespace lp
