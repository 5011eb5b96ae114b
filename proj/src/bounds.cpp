#include "lp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lp {

namespace {

double sq(double x) { return x * x; }

struct Dims {
  double l, d, d0, dl, cd, width;
};

Dims dims_of(const BoundConfig& cfg) {
  const auto& a = cfg.arch;
  return {static_cast<double>(a.depth()),      static_cast<double>(a.weight_dim()),
          static_cast<double>(a.input_dim()),  static_cast<double>(a.output_dim()),
          static_cast<double>(max_dim(a)),     static_cast<double>(a.max_layer_size())};
}

double zeta_of(const BoundConfig& cfg) {
  const double zeta = cfg.constants["zeta"];
  if (!(zeta > 0)) throw std::invalid_argument("zeta must be positive");
  return zeta;
}

long ceil_threshold(double value) {
  if (!std::isfinite(value)) throw std::overflow_error("sample threshold is not finite");
  return std::max(1L, static_cast<long>(std::ceil(value)));
}

}  // namespace

BoundConstants::BoundConstants() {
  for (const auto& n : names()) values[n] = 1.0;
}

const std::vector<std::string>& BoundConstants::names() {
  static const std::vector<std::string> n{"c_f", "c_f'", "c_g", "c_g'", "c_h", "c_m",     "c_m'", "c_y",
                                          "c_y'", "c_s", "c_t", "c_t'", "gamma", "xi", "zeta"};
  return n;
}

double BoundConstants::operator[](std::string_view name) const {
  auto it = values.find(name);
  if (it == values.end()) throw std::invalid_argument("unknown bound constant '" + std::string(name) + "'");
  return it->second;
}

void BoundConstants::set(std::string_view name, double value, bool is_calibrated) {
  auto it = values.find(name);
  if (it == values.end()) throw std::invalid_argument("unknown bound constant '" + std::string(name) + "'");
  it->second = value;
  if (is_calibrated && !this->is_calibrated(name)) calibrated.emplace_back(name);
}

bool BoundConstants::is_calibrated(std::string_view name) const {
  return std::find(calibrated.begin(), calibrated.end(), name) != calibrated.end();
}

double BoundConfig::input_radius() const { return r_x > 0 ? r_x : tau * std::sqrt(arch.input_dim()); }

void BoundConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (!(eps_fail > 0 && eps_fail < 1)) throw std::invalid_argument("failure probability must lie in (0,1)");
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (!(r >= 0)) throw std::invalid_argument("radius must be nonnegative");
  if (r_x < 0) throw std::invalid_argument("r_x must be positive");
}

double sigmoid_cy(const Eigen::MatrixXd& targets) {
  double best = 0;
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    double s = 0;
    for (Eigen::Index k = 0; k < targets.cols(); ++k) s += sq(std::max(targets(i, k), 1.0 - targets(i, k)));
    best = std::max(best, s);
  }
  return best;
}

int max_dim(const Architecture& arch) { return arch.max_width(); }

double sigmoid_cr(double r, int l) {
  const double q = r * r / 16.0;
  return std::max(q, std::pow(q, l - 1));
}

namespace formula {

double rate(double d, double l, double n, double k, double eps) {
  return std::sqrt((d * std::log(n * l) + std::log(k / eps)) / n);
}

double eps_l(double c_f, double tau, double r, double l, double d_l, double d, double n, double eps) {
  const double lead = std::max(std::sqrt(d_l) * tau * std::pow(r, 2 * l), std::pow(r, l));
  return c_f * tau * lead * rate(d, l, n, 8, eps);
}

double eps_n(double tau, double c_y, double c_d, double c_r, double l, double d, double n, double eps) {
  return tau * std::sqrt(9.0 / 8.0 * c_y * c_d * (1 + c_r * (l - 1))) * rate(d, l, n, 4, eps);
}

}  // namespace formula

double rate_factor(const BoundConfig& cfg, double k) {
  const auto D = dims_of(cfg);
  return formula::rate(D.d, D.l, static_cast<double>(cfg.n), k, cfg.eps_fail);
}

double omega_g(const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  const double lead = std::sqrt(D.d0) * std::pow(cfg.r, 2 * D.l - 1);
  return std::max({cfg.tau * lead, lead, std::pow(cfg.r, D.l - 1)});
}

double omega_h(const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  const double lead = std::pow(cfg.r, 2 * (D.l - 1));
  return std::max({cfg.tau * lead, lead, std::pow(cfg.r, D.l - 2)});
}

double alpha_g(const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  return cfg.constants["c_t"] * D.l * std::pow(cfg.input_radius(), 4) * std::pow(cfg.r, 4 * D.l - 2);
}

double alpha_l(const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  return cfg.constants["c_t'"] * std::pow(cfg.input_radius(), 4) * std::pow(cfg.r, 4 * D.l - 2);
}

double sigmoid_alpha(const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  const double cr = sigmoid_cr(cfg.r, cfg.arch.depth());
  return std::sqrt(cfg.constants["c_y"] * D.cd * (1 + cr * (D.l - 1)) / 16.0);
}

double sigmoid_varsigma(const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  const double l = D.l, cd = D.cd, d = D.d;
  const double cy = cfg.constants["c_y"];
  const double cr = sigmoid_cr(cfg.r, cfg.arch.depth());
  const double a = 64.0 / 6561.0, b = 4096.0 / 6561.0, c = 1.0 / 256.0;
  const double off = (l - 1) * l * (l + 1) *
                     (a * cy * cd * cd * cd * cr + b * cy * (l - 2) * cd * cd * cr * cr + c * cy * cd * cr +
                      c * cd * cr * cr);
  const double diag =
      (l + 2) * (a * cy * cd * cd * d * cr + b * cy * (l - 1) * l * cd * cd * cr * cr + c * l * cd * cd * cr * cr);
  return std::sqrt(off + diag);
}

double sigmoid_beta(const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  const double l = D.l, cd = D.cd, d = D.d;
  const double cr = sigmoid_cr(cfg.r, cfg.arch.depth());
  return std::sqrt(64.0 / 6561.0 * cfg.constants["c_y"] * cr * (l + 2) * (d * cr + (l - 1) * l * cd * cr + l * cd));
}

double epsilon_linear(const BoundConfig& cfg) {
  cfg.validate();
  const auto D = dims_of(cfg);
  return formula::eps_l(cfg.constants["c_f"], cfg.tau, cfg.r, D.l, D.dl, D.d, static_cast<double>(cfg.n),
                        cfg.eps_fail);
}

double epsilon_sigmoid(const BoundConfig& cfg) {
  cfg.validate();
  const auto D = dims_of(cfg);
  return formula::eps_n(cfg.tau, cfg.constants["c_y"], D.cd, sigmoid_cr(cfg.r, cfg.arch.depth()), D.l, D.d,
                        static_cast<double>(cfg.n), cfg.eps_fail);
}

double grad_gap_bound(const BoundConfig& cfg, Activation act) {
  cfg.validate();
  const auto D = dims_of(cfg);
  if (act == Activation::Linear)
    return cfg.constants["c_g"] * cfg.tau * omega_g(cfg) * std::sqrt(D.l * D.width) * rate_factor(cfg, 12);
  // The sub-Gaussian tail step contributes the factor 72 = (512/729) / (2^6/3^8).
  return cfg.tau * std::sqrt(72.0) * sigmoid_beta(cfg) * rate_factor(cfg, 4);
}

double hess_gap_bound(const BoundConfig& cfg, Activation act) {
  cfg.validate();
  const auto D = dims_of(cfg);
  if (act == Activation::Linear)
    return cfg.constants["c_h"] * cfg.tau * D.l * omega_h(cfg) * D.width * rate_factor(cfg, 20);
  return cfg.constants["c_m"] * cfg.constants["gamma"] * cfg.tau * rate_factor(cfg, 4);
}

double stationary_distance_bound(const BoundConfig& cfg, Activation act) {
  return 2.0 / zeta_of(cfg) * grad_gap_bound(cfg, act);
}

std::string claim_name(int claim) {
  static const char* names[] = {"linear_loss",  "linear_gradient",  "linear_pairing",
                                "sigmoid_loss", "sigmoid_gradient", "sigmoid_pairing"};
  if (claim < 1 || claim > 6) throw std::invalid_argument("unknown claim id " + std::to_string(claim) + " (expected 1..6)");
  return names[claim - 1];
}

long sample_threshold(const BoundConfig& cfg, int claim) {
  cfg.validate();
  const auto D = dims_of(cfg);
  const auto& c = cfg.constants;
  const double eps2 = sq(cfg.eps_fail), tau2 = sq(cfg.tau), r2 = sq(cfg.r), lnl = std::log(D.l);
  const double rx4 = std::pow(cfg.input_radius(), 4);
  const double linear_rate = sq(D.l) * r2 * rx4 / (D.d0 * sq(D.d) * eps2 * sq(tau2) * lnl);
  switch (claim) {
    case 1:
      return ceil_threshold(c["c_f'"] * std::max(D.l * rx4 / (D.dl * D.d * eps2 * sq(tau2) * lnl), D.d * lnl / D.dl));
    case 2:
      return ceil_threshold(c["c_g'"] * std::max(linear_rate, D.d * lnl));
    case 3:
      return ceil_threshold(c["c_h"] * std::max(linear_rate, D.d * lnl / sq(zeta_of(cfg))));
    case 4:
      return ceil_threshold(18 * r2 / (D.d * tau2 * eps2 * lnl));
    case 5:
      return ceil_threshold(c["c_y'"] * D.cd * D.l * r2 / (D.d * tau2 * eps2 * lnl));
    case 6:
      return ceil_threshold(
          c["c_s"] * std::max(D.cd * D.l * r2 / (D.d * tau2 * eps2 * lnl), D.d * lnl / sq(zeta_of(cfg))));
    default:
      throw std::invalid_argument("unknown claim id " + std::to_string(claim) + " (expected 1..6)");
  }
}

BoundReport bound_report(const BoundConfig& cfg) {
  cfg.validate();
  const auto D = dims_of(cfg);
  BoundReport b;
  b.d = cfg.arch.weight_dim();
  b.l = cfg.arch.depth();
  b.c_d = max_dim(cfg.arch);
  b.c_r = sigmoid_cr(cfg.r, b.l);
  b.c_y = cfg.constants["c_y"];
  b.width_factor = D.width;
  b.omega_f = std::pow(cfg.r, D.l);
  b.omega_g = omega_g(cfg);
  b.omega_h = omega_h(cfg);
  b.alpha_g = alpha_g(cfg);
  b.alpha_l = alpha_l(cfg);
  b.alpha = sigmoid_alpha(cfg);
  b.varsigma = sigmoid_varsigma(cfg);
  b.beta = sigmoid_beta(cfg);
  b.eps_l = epsilon_linear(cfg);
  b.eps_n = epsilon_sigmoid(cfg);
  b.grad_gap_linear = grad_gap_bound(cfg, Activation::Linear);
  b.grad_gap_sigmoid = grad_gap_bound(cfg, Activation::Sigmoid);
  b.hess_gap_linear = hess_gap_bound(cfg, Activation::Linear);
  b.hess_gap_sigmoid = hess_gap_bound(cfg, Activation::Sigmoid);
  b.dist_linear = stationary_distance_bound(cfg, Activation::Linear);
  b.dist_sigmoid = stationary_distance_bound(cfg, Activation::Sigmoid);
  for (int t = 1; t <= 6; ++t) b.thresholds[t] = sample_threshold(cfg, t);
  b.notes.push_back(
      "sigmoid gradient gap uses tau*sqrt(72)*beta with beta = sqrt(2^6/3^8 ...); the factor 72 turns the "
      "mixed-derivative constant 2^6/3^8 into the 512/729 of the uniform-convergence statement");
  std::vector<std::string> uncal;
  for (const auto& n : BoundConstants::names())
    if (n != "zeta" && !cfg.constants.is_calibrated(n)) uncal.push_back(n);
  std::string u = "uncalibrated constants (value as configured):";
  for (const auto& n : uncal) u += " " + n;
  b.notes.push_back(u);
  return b;
}

std::pair<double, double> structural_factor(std::string_view name, const BoundConfig& cfg) {
  const auto D = dims_of(cfg);
  const double rx = cfg.input_radius();
  BoundConfig unit = cfg;
  for (const auto& n : {"c_f", "c_g", "c_h", "c_m"}) unit.constants.set(n, 1.0);
  if (name == "c_t") return {std::sqrt(D.l * std::pow(rx, 4) * std::pow(cfg.r, 4 * D.l - 2)), 2.0};
  if (name == "c_t'") return {D.l * rx * rx * std::pow(cfg.r, 2 * D.l - 1), 2.0};
  if (name == "c_f") return {epsilon_linear(unit), 1.0};
  if (name == "c_g") return {grad_gap_bound(unit, Activation::Linear), 1.0};
  if (name == "c_h") return {hess_gap_bound(unit, Activation::Linear), 1.0};
  if (name == "c_m") return {hess_gap_bound(unit, Activation::Sigmoid), 1.0};
  throw std::invalid_argument("no calibration rule for constant '" + std::string(name) + "'");
}

double calibrate_constant(std::span<const double> samples, double structural, double power) {
  if (samples.empty()) throw std::invalid_argument("calibration needs at least one sample");
  if (!(structural > 0)) throw std::invalid_argument("structural factor must be positive");
  double worst = 0;
  for (double s : samples) worst = std::max(worst, std::abs(s));
  return std::pow(worst / structural, power) * 1.05;
}

double calibrate_constant(std::string_view name, std::span<const double> samples, const BoundConfig& cfg) {
  const auto [f, p] = structural_factor(name, cfg);
  return calibrate_constant(samples, f, p);
}

}  // namespace lp
