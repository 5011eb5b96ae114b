#pragma once

#include "lp/model.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lp {

/// Unnamed universal constants. Every entry defaults to 1 and is reported as
/// uncalibrated until `calibrate_constant` (or an override) sets it.
struct BoundConstants {
  std::map<std::string, double, std::less<>> values;
  std::vector<std::string> calibrated;

  BoundConstants();
  double operator[](std::string_view name) const;
  void set(std::string_view name, double value, bool is_calibrated = false);
  bool is_calibrated(std::string_view name) const;
  static const std::vector<std::string>& names();
};

struct BoundConfig {
  Architecture arch;
  double r = 1;
  double tau = 1;
  long n = 1;
  double eps_fail = 0.05;
  double r_x = 0;  // 0 means tau * sqrt(d_0), the Rademacher value
  BoundConstants constants;

  double input_radius() const;
  /// Throws std::invalid_argument on n < 1, eps outside (0,1), nonpositive tau/r/r_x.
  void validate() const;
};

struct BoundReport {
  // derived constants
  int d = 0;
  int l = 0;
  int c_d = 0;
  double c_r = 0;
  double c_y = 0;
  double width_factor = 0;  // max_j d_j d_{j-1}
  double omega_f = 0;
  double omega_g = 0;
  double omega_h = 0;
  double alpha_g = 0;
  double alpha_l = 0;
  double alpha = 0;
  double varsigma = 0;
  double beta = 0;
  // bound values
  double eps_l = 0;
  double eps_n = 0;
  double grad_gap_linear = 0;
  double grad_gap_sigmoid = 0;
  double hess_gap_linear = 0;
  double hess_gap_sigmoid = 0;
  double dist_linear = 0;
  double dist_sigmoid = 0;
  std::map<int, long> thresholds;  // claim id 1..6 -> smallest admissible n
  std::vector<std::string> notes;
};

/// Exact sigmoid c_y for a target set (rows are samples): outputs lie in
/// (0,1), so ||v^(l) - y||^2 <= sum_i max(y_i, 1 - y_i)^2.
double sigmoid_cy(const Eigen::MatrixXd& targets);

/// c_d = max_j d_j over 0..l.
int max_dim(const Architecture& arch);
/// c_r = max(r^2/16, (r^2/16)^{l-1}).
double sigmoid_cr(double r, int l);
/// sqrt((d ln(nl) + ln(k/eps)) / n), the shared rate factor.
double rate_factor(const BoundConfig& cfg, double k);

/// tau sqrt(d_0) r^{2l-1}, sqrt(d_0) r^{2l-1} and r^{l-1}, maximised.
double omega_g(const BoundConfig& cfg);
/// max(tau r^{2(l-1)}, r^{2(l-1)}, r^{l-2}).
double omega_h(const BoundConfig& cfg);

/// ||grad f||^2 <= alpha_g = c_t l r_x^4 r^{4l-2} for linear nets.
double alpha_g(const BoundConfig& cfg);
/// ||hess f||_F <= l sqrt(alpha_l), alpha_l = c_t' r_x^4 r^{4l-2}.
double alpha_l(const BoundConfig& cfg);

/// Sigmoid gradient Lipschitz constant sqrt(c_y c_d (1 + c_r (l-1)) / 16).
double sigmoid_alpha(const BoundConfig& cfg);
/// Sigmoid Hessian Lipschitz constant, the explicit sum before the
/// universal constants are collapsed.
double sigmoid_varsigma(const BoundConfig& cfg);
/// Mixed-derivative bound sqrt(2^6/3^8 c_y c_r (l+2)(d c_r + (l-1) l c_d c_r + l c_d)).
double sigmoid_beta(const BoundConfig& cfg);

/// The two loss bounds as plain functions of their scalar parameters.
namespace formula {
/// sqrt((d ln(n l) + ln(k/eps)) / n)
double rate(double d, double l, double n, double k, double eps);
/// c_f tau max(sqrt(d_l) tau r^{2l}, r^l) rate(8)
double eps_l(double c_f, double tau, double r, double l, double d_l, double d, double n, double eps);
/// tau sqrt(9/8 c_y c_d (1 + c_r (l-1))) rate(4)
double eps_n(double tau, double c_y, double c_d, double c_r, double l, double d, double n, double eps);
}  // namespace formula

double epsilon_linear(const BoundConfig& cfg);
double epsilon_sigmoid(const BoundConfig& cfg);
double grad_gap_bound(const BoundConfig& cfg, Activation act);
double hess_gap_bound(const BoundConfig& cfg, Activation act);
/// 2/zeta times `grad_gap_bound`; zeta is taken from cfg.constants["zeta"].
double stationary_distance_bound(const BoundConfig& cfg, Activation act);
/// Sample-size conditions, numbered 1..6: linear loss, linear gradient,
/// linear pairing, sigmoid loss, sigmoid gradient, sigmoid pairing.
std::string claim_name(int claim);
/// Smallest integer n meeting the sample-size condition of `claim` (at least 1).
long sample_threshold(const BoundConfig& cfg, int claim);

BoundReport bound_report(const BoundConfig& cfg);

/// Structural factor F and exponent p of the bound governed by `name`, such
/// that bound = c^{1/p} F. Known names: c_t, c_t', c_f, c_g, c_h, c_m.
std::pair<double, double> structural_factor(std::string_view name, const BoundConfig& cfg);
/// Smallest constant making every sample satisfy its bound, times 1.05.
double calibrate_constant(std::string_view name, std::span<const double> samples, const BoundConfig& cfg);
/// Same, from an explicit structural factor and exponent.
double calibrate_constant(std::span<const double> samples, double structural, double power);

}  // namespace lp
