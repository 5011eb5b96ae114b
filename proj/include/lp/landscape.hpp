#pragma once

#include "lp/risk.hpp"

#include <limits>
#include <vector>

namespace lp {

enum class Source { Empirical, Population };
std::string to_string(Source s);

struct StationaryRecord {
  WeightPoint<double> w;
  double grad_norm = 0;
  Eigen::VectorXd spectrum;  // ascending
  IndexInfo info;
  Source source = Source::Empirical;
  int start = -1;  // index of the start that produced it
  int iterations = 0;
  bool on_boundary = false;

  int index() const { return info.index; }
  bool degenerate() const { return info.degenerate; }
};

struct StartDiagnostic {
  int start = 0;
  bool converged = false;
  double grad_norm = 0;
  int iterations = 0;
  std::string reason;
};

struct StationaryOptions {
  SolverOptions solver;
  double zeta = 1e-3;
  double merge_radius = -1;  // negative: 1e-5 sqrt(d)
};

struct StationarySearch {
  std::vector<StationaryRecord> records;
  std::vector<StartDiagnostic> diagnostics;
};

/// Runs the local solver from each start, keeps the points whose gradient
/// norm (re-evaluated independently) is within tolerance, and merges points
/// closer than the merge radius.
StationarySearch find_stationary(const RiskSurface& risk, const std::vector<WeightPoint<double>>& starts,
                                 const StationaryOptions& opt, Source source);

/// Record for a given point, whether or not it is stationary.
StationaryRecord describe_point(const RiskSurface& risk, const WeightPoint<double>& w, double zeta, Source source);

struct StationaryPair {
  StationaryRecord empirical;
  StationaryRecord population;
  double distance = 0;
  bool both_nondegenerate = false;
  bool index_equal = false;
  bool ambiguous = false;  // another candidate was also within the match radius
  bool boundary_active = false;
  bool within_bound = true;
};

struct PairingResult {
  std::vector<StationaryPair> pairs;
  std::vector<StationaryRecord> unmatched_empirical;
  std::vector<StationaryRecord> unmatched_population;
  double bound = std::numeric_limits<double>::quiet_NaN();
  int ambiguous = 0;

  /// Non-degenerate pairs all have equal index.
  bool indices_agree() const;
};

/// Greedy nearest-neighbour matching: all candidate pairs within
/// `match_radius` are taken in increasing distance, each record at most once.
PairingResult pair_points(const std::vector<StationaryRecord>& empirical,
                          const std::vector<StationaryRecord>& population, double zeta, double match_radius,
                          double bound = std::numeric_limits<double>::quiet_NaN());

struct AuditRow {
  long n = 0;
  std::vector<double> grad_norms;  // one per trial
  double median = 0;
  double q25 = 0;
  double q75 = 0;
};

/// ||grad J_n(w)|| at a fixed population stationary point for each n.
std::vector<AuditRow> degenerate_gradient_audit(const Architecture& arch, const WeightPoint<double>& point,
                                                const SamplerSpec& sampler, const Teacher& teacher,
                                                const std::vector<long>& n_grid, int trials);

/// Linear-interpolated quantile of an unsorted sample.
double quantile(std::vector<double> v, double q);

}  // namespace lp
