#include "lp/bounds.hpp"

#include <doctest.h>

#include <cmath>

using namespace lp;

namespace {

BoundConfig config(std::vector<int> dims, double r, long n, double eps = 0.05) {
  BoundConfig c;
  c.arch = Architecture(std::move(dims), Activation::Linear);
  c.r = r;
  c.n = n;
  c.eps_fail = eps;
  return c;
}

std::vector<double> all_bounds(const BoundConfig& c) {
  return {epsilon_linear(c),
          epsilon_sigmoid(c),
          grad_gap_bound(c, Activation::Linear),
          grad_gap_bound(c, Activation::Sigmoid),
          hess_gap_bound(c, Activation::Linear),
          hess_gap_bound(c, Activation::Sigmoid)};
}

}  // namespace

TEST_CASE("linear loss bound: hand-evaluated instance") {
  // sqrt((2 ln 200 + ln 160) / 100)
  const double expected = std::sqrt((2 * std::log(200.0) + std::log(160.0)) / 100);
  CHECK(expected == doctest::Approx(0.3959).epsilon(1e-4));
  CHECK(epsilon_linear(config({1, 1, 1}, 1, 100)) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(formula::eps_l(1, 1, 1, 2, 1, 2, 100, 0.05) == doctest::Approx(0.3959).epsilon(1e-4));
}

TEST_CASE("sigmoid loss bound: hand-evaluated instance") {
  // tau sqrt(9/8 c_y c_d (1 + c_r (l-1))) sqrt((d ln(nl) + ln(4/eps)) / n)
  // with c_y = 1, c_d = 2, c_r = 1, l = 2, d = 2, n = 100, eps = 0.05:
  // 2.121320 * 0.387023 = 0.820999.
  const double v = formula::eps_n(1, 1, 2, 1, 2, 2, 100, 0.05);
  CHECK(v == doctest::Approx(0.820999).epsilon(1e-6));
  CHECK(formula::rate(2, 2, 100, 4, 0.05) == doctest::Approx(0.387023).epsilon(1e-6));
}

TEST_CASE("rate factor quartering n") {
  for (long n : {100L, 1000L, 100000L}) {
    const auto c = config({2, 3, 2}, 1, n), c4 = config({2, 3, 2}, 1, 4 * n);
    const double ratio = epsilon_linear(c4) / epsilon_linear(c);
    CHECK(ratio > 0.5);
    CHECK(ratio < 0.62);
  }
}

TEST_CASE("zero radius") {
  CHECK(epsilon_linear(config({1, 1, 1}, 0, 100)) == 0.0);
  CHECK(sample_threshold(config({1, 1, 1}, 0, 100), 4) == 1);
}

TEST_CASE("sigmoid c_r") {
  CHECK(sigmoid_cr(4, 2) == 1.0);
  CHECK(sigmoid_cr(4, 5) == 1.0);
  CHECK(sigmoid_cr(2, 3) == 0.25);
  CHECK(sigmoid_cr(8, 3) == 16.0);
  // l = 3 against l = 2 at r = 4: prefactor ratio sqrt(3/2).
  const double p2 = formula::eps_n(1, 1, 2, sigmoid_cr(4, 2), 2, 2, 100, 0.05) / formula::rate(2, 2, 100, 4, 0.05);
  const double p3 = formula::eps_n(1, 1, 2, sigmoid_cr(4, 3), 3, 2, 100, 0.05) / formula::rate(2, 3, 100, 4, 0.05);
  CHECK(p3 / p2 == doctest::Approx(std::sqrt(1.5)).epsilon(1e-14));
}

TEST_CASE("sigmoid c_y from targets") {
  Eigen::MatrixXd y(2, 2);
  y << 0.2, 0.9, 0.5, 0.5;
  CHECK(sigmoid_cy(y) == doctest::Approx(0.64 + 0.81));
}

TEST_CASE("omega_g and width factor") {
  BoundConfig c = config({4, 2, 2, 2}, 1, 100);
  CHECK(omega_g(c) == doctest::Approx(2));
  CHECK(bound_report(config({2, 8, 2}, 1, 100)).width_factor == 16);
  CHECK(bound_report(config({4, 4, 4}, 1, 100)).width_factor == 16);
  CHECK(bound_report(config({2, 16, 2}, 1, 100)).width_factor == 32);
  CHECK(bound_report(config({4, 5, 4}, 1, 100)).width_factor == 20);
}

TEST_CASE("distance bound is 2/zeta times the gradient gap") {
  BoundConfig c = config({2, 3, 2}, 2, 500);
  for (auto act : {Activation::Linear, Activation::Sigmoid}) {
    CHECK(stationary_distance_bound(c, act) * 1.0 / 2 == grad_gap_bound(c, act));
    const double at1 = stationary_distance_bound(c, act);
    c.constants.set("zeta", 2);
    CHECK(stationary_distance_bound(c, act) == doctest::Approx(at1 / 2).epsilon(1e-15));
    CHECK(stationary_distance_bound(c, act) * 2 / 2 == grad_gap_bound(c, act));
    c.constants.set("zeta", 1);
  }
  c.constants.set("zeta", 0);
  CHECK_THROWS_AS(stationary_distance_bound(c, Activation::Linear), std::invalid_argument);
}

TEST_CASE("sigmoid gradient gap constant: 72 * 2^6/3^8 = 512/729") {
  CHECK(72.0 * 64.0 / 6561.0 == doctest::Approx(512.0 / 729.0).epsilon(1e-15));
  BoundConfig c = config({2, 3, 2}, 4, 1000);
  CHECK(grad_gap_bound(c, Activation::Sigmoid) ==
        doctest::Approx(c.tau * std::sqrt(72.0) * sigmoid_beta(c) * rate_factor(c, 4)).epsilon(1e-15));
  const auto report = bound_report(c);
  bool noted = false;
  for (const auto& n : report.notes) noted = noted || n.find("512/729") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("sample thresholds") {
  BoundConfig c = config({1, 1, 1}, 4, 100, 0.1);
  // 18 * 16 / (2 * 1 * 0.01 * ln 2) = 20774.8...
  CHECK(18.0 * 16 / (2 * 0.01 * std::log(2.0)) == doctest::Approx(20774.80).epsilon(1e-6));
  CHECK(sample_threshold(c, 4) == 20775);
  const long before = sample_threshold(c, 4);
  c.eps_fail = 0.05;
  CHECK(sample_threshold(c, 4) == doctest::Approx(4 * 20774.80).epsilon(1e-4));
  CHECK(std::abs(sample_threshold(c, 4) - 4 * before) <= 4);
  for (int k = 1; k <= 6; ++k) CHECK(sample_threshold(c, k) >= 1);
  CHECK_THROWS_AS(sample_threshold(c, 7), std::invalid_argument);
  CHECK(claim_name(4) == "sigmoid_loss");
}

TEST_CASE("calibration") {
  const std::vector<double> three{3.0, -1.0, 2.0}, zeros{0.0, 0.0};
  CHECK(calibrate_constant(three, 6, 2) == doctest::Approx(0.2625).epsilon(1e-15));
  CHECK(calibrate_constant(zeros, 6, 2) == 0.0);
  CHECK(calibrate_constant(three, 6, 2) == calibrate_constant(three, 6, 2));
  CHECK_THROWS_AS(calibrate_constant(std::vector<double>{}, 6, 2), std::invalid_argument);

  // c_t: structural factor sqrt(l r_x^4 r^{4l-2}); here l = 2, r = 1, r_x = 18^{1/4} gives 6.
  BoundConfig c = config({1, 1, 1}, 1, 100);
  c.r_x = std::pow(18.0, 0.25);
  const auto [f, p] = structural_factor("c_t", c);
  CHECK(f == doctest::Approx(6));
  CHECK(p == 2);
  const double ct = calibrate_constant("c_t", three, c);
  CHECK(ct == doctest::Approx(0.2625));
  c.constants.set("c_t", ct, true);
  CHECK(std::sqrt(alpha_g(c)) >= 3);
  CHECK(c.constants.is_calibrated("c_t"));
  CHECK_THROWS_AS(structural_factor("c_zz", c), std::invalid_argument);
}

TEST_CASE("tau scaling of the sigmoid loss bound") {
  BoundConfig c = config({2, 3, 2}, 3, 1000);
  const double e1 = epsilon_sigmoid(c);
  c.tau = 2;
  CHECK(epsilon_sigmoid(c) == doctest::Approx(2 * e1).epsilon(1e-15));
}

TEST_CASE("monotonicity grid") {
  // Decreasing in n.
  for (double r : {1.0, 2.0, 5.0}) {
    std::vector<double> prev;
    for (long n = 8; n <= 1000000; n *= 2) {
      const auto v = all_bounds(config({2, 3, 2}, r, n));
      for (std::size_t i = 0; i < prev.size(); ++i) CHECK(v[i] < prev[i]);
      prev = v;
    }
  }
  // Nondecreasing in r (r >= 1), depth and width.
  for (long n : {8L, 1000L, 1000000L}) {
    std::vector<double> prev;
    for (double r : {1.0, 1.5, 2.0, 4.0, 8.0}) {
      const auto v = all_bounds(config({2, 3, 2}, r, n));
      for (std::size_t i = 0; i < prev.size(); ++i) CHECK(v[i] >= prev[i]);
      prev = v;
    }
    prev.clear();
    for (int l = 2; l <= 6; ++l) {
      const auto v = all_bounds(config(std::vector<int>(static_cast<std::size_t>(l + 1), 2), 2, n));
      for (std::size_t i = 0; i < prev.size(); ++i) CHECK(v[i] >= prev[i]);
      prev = v;
    }
    prev.clear();
    for (int w = 1; w <= 6; ++w) {
      const auto v = all_bounds(config({w, w, w}, 2, n));
      for (std::size_t i = 0; i < prev.size(); ++i) CHECK(v[i] >= prev[i]);
      prev = v;
    }
  }
  // Nondecreasing in c_d and d through the scalar formula.
  for (double cd = 1; cd < 8; ++cd)
    CHECK(formula::eps_n(1, 1, cd + 1, 1, 2, 10, 500, 0.05) >= formula::eps_n(1, 1, cd, 1, 2, 10, 500, 0.05));
  for (double d = 2; d < 50; ++d)
    CHECK(formula::eps_l(1, 1, 1, 2, 1, d + 1, 500, 0.05) >= formula::eps_l(1, 1, 1, 2, 1, d, 500, 0.05));
}

TEST_CASE("below r = 1 the linear bounds are not monotone in depth") {
  // r^l shrinks with l when r < 1; the monotone-in-l property needs r >= 1.
  const double l2 = epsilon_linear(config({1, 1, 1}, 0.5, 100));
  const double l4 = epsilon_linear(config({1, 1, 1, 1, 1}, 0.5, 100));
  CHECK(l4 < l2);
}

TEST_CASE("constants and validation") {
  BoundConstants k;
  CHECK(k["c_f"] == 1.0);
  CHECK_FALSE(k.is_calibrated("c_f"));
  CHECK_THROWS_AS(k["nope"], std::invalid_argument);
  CHECK_THROWS_AS(k.set("nope", 1), std::invalid_argument);
  BoundConfig c = config({2, 2, 2}, 1, 0);
  CHECK_THROWS_AS(epsilon_linear(c), std::invalid_argument);
  c.n = 10;
  c.eps_fail = 1;
  CHECK_THROWS_AS(epsilon_linear(c), std::invalid_argument);
  c.eps_fail = 0.1;
  c.r_x = 0;
  CHECK(c.input_radius() == doctest::Approx(std::sqrt(2.0)));
}
