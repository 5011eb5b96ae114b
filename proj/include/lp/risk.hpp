#pragma once

#include "lp/data.hpp"
#include "lp/exactdiff.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace lp {

/// Fixed-order pairwise reduction of f(begin) + ... + f(end-1). The
/// association tree depends only on (begin, end), never on scheduling.
template <typename T, typename F>
T pairwise_sum(long begin, long end, F&& f) {
  const long n = end - begin;
  if (n <= 8) {
    T acc = f(begin);
    for (long i = begin + 1; i < end; ++i) acc += f(i);
    return acc;
  }
  const long mid = begin + n / 2;
  T left = pairwise_sum<T>(begin, mid, f);
  left += pairwise_sum<T>(mid, end, f);
  return left;
}

/// Second moments of a dataset: Sxx = E xx^T, Sxy = E x y^T, Syy = E ||y||^2.
struct Moments {
  Eigen::MatrixXd Sxx;
  Eigen::MatrixXd Sxy;
  double Syy = 0;
};

Moments sample_moments(const Dataset& data);

/// Empirical risk J_n(w) = (1/2n) sum ||e_i||^2 and its derivatives, as
/// pairwise sample means of the per-sample closed forms.
double empirical_risk(const Architecture& arch, const WeightPoint<double>& w, const Dataset& data);
Eigen::VectorXd empirical_gradient(const Architecture& arch, const WeightPoint<double>& w, const Dataset& data);
Eigen::MatrixXd empirical_hessian(const Architecture& arch, const WeightPoint<double>& w, const Dataset& data);

/// Linear networks only: the risk depends on the data through its second
/// moments, J = 1/2 tr(B Sxx B^T) - tr(B Sxy) + 1/2 Syy with B = B_{l:1}.
/// Derivatives follow the sample formulas with x x^T replaced by Sxx and
/// x e^T by Sxx B^T - Sxy.
double moment_risk(const Architecture& arch, const WeightPoint<double>& w, const Moments& m);
Eigen::VectorXd moment_gradient(const Architecture& arch, const WeightPoint<double>& w, const Moments& m);
Eigen::MatrixXd moment_hessian(const Architecture& arch, const WeightPoint<double>& w, const Moments& m);

/// A twice-differentiable risk over a fixed architecture.
class RiskSurface {
 public:
  virtual ~RiskSurface() = default;
  virtual const Architecture& arch() const = 0;
  virtual double value(const WeightPoint<double>& w) const = 0;
  virtual Eigen::VectorXd gradient(const WeightPoint<double>& w) const = 0;
  virtual Eigen::MatrixXd hessian(const WeightPoint<double>& w) const = 0;
  /// Standard error of `value`, zero for exact surfaces.
  virtual double value_stderr(const WeightPoint<double>&) const { return 0; }
};

/// Mean over a dataset. Linear architectures use the moment form unless
/// `per_sample` is set, which makes evaluation cost independent of n.
class SampleRisk final : public RiskSurface {
 public:
  SampleRisk(Architecture arch, Dataset data, bool per_sample = false);

  const Architecture& arch() const override { return arch_; }
  const Dataset& data() const { return data_; }
  double value(const WeightPoint<double>& w) const override;
  Eigen::VectorXd gradient(const WeightPoint<double>& w) const override;
  Eigen::MatrixXd hessian(const WeightPoint<double>& w) const override;
  double value_stderr(const WeightPoint<double>& w) const override;

 private:
  Architecture arch_;
  Dataset data_;
  bool moments_form_;
  Moments moments_;
};

/// Linear risk given exact moments.
class MomentRisk final : public RiskSurface {
 public:
  MomentRisk(Architecture arch, Moments m);

  const Architecture& arch() const override { return arch_; }
  double value(const WeightPoint<double>& w) const override { return moment_risk(arch_, w, m_); }
  Eigen::VectorXd gradient(const WeightPoint<double>& w) const override { return moment_gradient(arch_, w, m_); }
  Eigen::MatrixXd hessian(const WeightPoint<double>& w) const override { return moment_hessian(arch_, w, m_); }

 private:
  Architecture arch_;
  Moments m_;
};

enum class OracleKind { ExactLinear, MonteCarlo };
std::string to_string(OracleKind k);

struct Estimate {
  double value = 0;
  double stderr = 0;
};

/// Population risk J(w) = E f(w, x).
///
/// ExactLinear: closed form for a noiseless linear teacher and zero-mean
/// inputs with covariance Sigma. MonteCarlo: a frozen sample of N_pop draws.
class PopulationOracle {
 public:
  static PopulationOracle exact_linear(const Teacher& teacher, const Eigen::MatrixXd& sigma);
  /// Sigma = tau^2 I, which covers both the Rademacher and Gaussian laws.
  static PopulationOracle exact_linear(const Teacher& teacher, double tau);
  static PopulationOracle monte_carlo(const SamplerSpec& sampler, const Teacher& teacher, long n_pop,
                                      std::uint64_t trial = 0);
  /// Uses `sample` directly as the frozen Monte-Carlo sample.
  static PopulationOracle from_sample(Dataset sample);

  OracleKind kind() const { return kind_; }
  long n_pop() const { return kind_ == OracleKind::MonteCarlo ? sample_->size() : 0; }
  const Dataset* sample() const { return sample_.get(); }
  const Moments& moments() const { return moments_; }

  /// Risk surface of a student with architecture `arch`. Throws
  /// std::invalid_argument for ExactLinear with a sigmoid student.
  std::unique_ptr<RiskSurface> surface(const Architecture& arch) const;

 private:
  OracleKind kind_ = OracleKind::ExactLinear;
  Moments moments_;
  std::shared_ptr<const Dataset> sample_;
};

Estimate population_risk(const PopulationOracle& oracle, const Architecture& arch, const WeightPoint<double>& w);

// ---------------------------------------------------------------------------
// Sup-gap probing.

enum class GapQuantity { Loss, GradNorm, HessOpNorm };
enum class GapMethod { NetSample, NetSampleWithAscent };
std::string to_string(GapQuantity q);
GapQuantity parse_gap_quantity(std::string_view name);
std::string to_string(GapMethod m);

struct GapBudget {
  int probes = 256;
  bool ascent = true;
  int ascent_steps = 50;
  int ascent_top = 4;              // refine this many of the best probes
  double boundary_fraction = 0.5;  // share of probes with every layer on the sphere
  std::uint64_t seed = 0;
};

struct GapEstimate {
  double sup_gap = 0;
  WeightPoint<double> argmax;
  int probes = 0;
  GapMethod method = GapMethod::NetSample;
  double stderr = 0;
  bool argmax_on_boundary = false;
};

/// Seeded draws from the product of per-layer Frobenius balls of radius r.
/// The first round(boundary_fraction * probes) points put every layer on the
/// sphere, the rest are uniform in each ball.
std::vector<WeightPoint<double>> probe_points(const Architecture& arch, double radius, const GapBudget& budget);

/// |J_n - J|, ||grad J_n - grad J||_2 or ||hess J_n - hess J||_op at w.
double gap_at(const RiskSurface& empirical, const RiskSurface& population, GapQuantity q,
              const WeightPoint<double>& w);

/// Lower estimate of sup_{w in Omega} of the gap: the maximum over the probes,
/// optionally refined by projected ascent from the best few.
GapEstimate sup_gap(const RiskSurface& empirical, const RiskSurface& population, double radius, GapQuantity q,
                    const GapBudget& budget);
GapEstimate sup_gap(const Architecture& arch, double radius, const Dataset& data, const PopulationOracle& oracle,
                    GapQuantity q, const GapBudget& budget);

// ---------------------------------------------------------------------------
// Local solver shared by the stability experiment and stationary search.

enum class SolverMode {
  Descent,      // damped Newton on the risk with Armijo backtracking
  GradNorm,     // Levenberg-Marquardt on 1/2 ||grad||^2, reaches saddles too
  Constrained,  // minimiser over Omega: Newton on the active layer spheres
};

struct SolverOptions {
  SolverMode mode = SolverMode::Descent;
  double tol = 1e-9;  // on ||grad||_2
  int max_iters = 200;
  bool project = true;  // keep iterates in Omega
};

struct SolverResult {
  WeightPoint<double> w;
  double grad_norm = 0;  // KKT residual in Constrained mode
  int active_layers = 0;
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

SolverResult solve_stationary(const RiskSurface& risk, WeightPoint<double> start, const SolverOptions& opt);

/// First-order optimality over Omega. A layer is active when it lies on its
/// sphere and the gradient points inward (multiplier mu_j = -<g_j, W_j>/r^2 > 0);
/// the residual drops the radial component of every active layer.
struct KktState {
  Eigen::VectorXd residual;
  std::vector<int> active;  // 1-based layer ids
  std::vector<double> multiplier;
};
KktState kkt_state(const Architecture& arch, const WeightPoint<double>& w, const Eigen::VectorXd& grad);

// ---------------------------------------------------------------------------
// Stability versus generalization.

enum class StabilityVariant {
  ReplaceOne,  // w^(i) fit on S with z_i swapped for a fresh z'_i, evaluated on z_i
  LeaveOut,    // w^(-j) fit on S without z_j, evaluated on a fresh z'_j
};

struct StabilityConfig {
  Architecture arch;
  SamplerSpec sampler;
  Teacher teacher;
  long n = 64;
  int trials = 200;
  long n_pop = 4096;  // per-trial Monte-Carlo sample for J
  WeightPoint<double> start;  // data-independent initial point for every fit
  SolverOptions solver;
  StabilityVariant variant = StabilityVariant::ReplaceOne;
};

struct StabilityResult {
  double stability = 0;
  double generalization = 0;
  double stability_se = 0;
  double generalization_se = 0;
  double combined_se = 0;  // sqrt(se_s^2 + se_g^2)
  int trials_used = 0;
  int trials_failed = 0;  // some fit missed the gradient tolerance
  std::vector<double> per_trial_stability;
  std::vector<double> per_trial_generalization;
};

StabilityResult loo_stability(const StabilityConfig& cfg);

// ---------------------------------------------------------------------------
// Concentration tails.

struct TailRow {
  long n = 0;
  int trials = 0;
  int exceed = 0;
  double fraction = 0;
  double ci_low = 0;  // Wilson 95% interval
  double ci_high = 0;
};

/// For each n, the fraction of trials with |(1/n) sum f(w, x_i) - E f(w, x)| > t.
/// E f comes from `oracle`.
std::vector<TailRow> tail_experiment(const Architecture& arch, const WeightPoint<double>& w, const SamplerSpec& sampler,
                                     const Teacher& teacher, const PopulationOracle& oracle,
                                     const std::vector<long>& n_grid, double t, int trials);

}  // namespace lp
