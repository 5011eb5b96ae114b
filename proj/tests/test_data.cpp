#include "lp/data.hpp"
#include "lp/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace lp;
using W = WeightPoint<double>;

TEST_CASE("Rademacher rows have norm tau sqrt(d0) exactly") {
  const SamplerSpec s{InputLaw::BoundedSubGaussian, 1.0, 4, 3};
  const Eigen::MatrixXd X = sample_inputs(s, 500);
  for (Eigen::Index i = 0; i < X.rows(); ++i) CHECK(X.row(i).norm() == 2.0);
  CHECK(s.input_radius() == 2.0);
  CHECK(std::isinf(SamplerSpec{InputLaw::IIDGaussian, 1.0, 4, 3}.input_radius()));
}

TEST_CASE("Gaussian inputs: per-coordinate variance and second moment") {
  const SamplerSpec s{InputLaw::IIDGaussian, 2.0, 3, 5};
  const long n = 100000;
  const Eigen::MatrixXd X = sample_inputs(s, n);
  const Eigen::MatrixXd M = X.transpose() * X / static_cast<double>(n);
  for (int k = 0; k < 3; ++k) {
    CHECK(M(k, k) >= 3.8);
    CHECK(M(k, k) <= 4.2);
  }
  // Each entry of E xx^T = tau^2 I within 3 sd; the sd of x_i x_j is tau^2 (sqrt 2 on the diagonal).
  const double tol = 3 * std::sqrt(2.0) * 4 / std::sqrt(static_cast<double>(n));
  CHECK((M - 4 * Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol);
}

TEST_CASE("sampling is deterministic and row-addressable") {
  const SamplerSpec s{InputLaw::IIDGaussian, 1.0, 3, 11};
  CHECK(sample_inputs(s, 50, 2) == sample_inputs(s, 50, 2));
  CHECK(sample_inputs(s, 50, 2) != sample_inputs(s, 50, 3));
  // Row i depends on (seed, trial, i) only.
  CHECK(sample_inputs(s, 80, 2).topRows(50) == sample_inputs(s, 50, 2));
  CHECK_THROWS_AS(sample_inputs(s, 0), std::invalid_argument);
}

TEST_CASE("Rademacher moment generating function is dominated by the sub-Gaussian envelope") {
  // Exact enumeration over the 2^d0 atoms.
  SplitMix64 g(1);
  for (int d0 : {1, 3, 6, 10}) {
    for (int k = 0; k < 20; ++k) {
      const double tau = 0.5 + uniform01(g);
      const Eigen::VectorXd lambda = gaussian_vector(g, d0, 2.0);
      double mgf = 0;
      for (unsigned mask = 0; mask < (1u << d0); ++mask) {
        double dot = 0;
        for (int i = 0; i < d0; ++i) dot += lambda(i) * tau * ((mask >> i) & 1u ? 1 : -1);
        mgf += std::exp(dot);
      }
      mgf /= static_cast<double>(1u << d0);
      CHECK(mgf <= std::exp(tau * tau * lambda.squaredNorm() / 2) * (1 + 1e-12));
    }
  }
}

TEST_CASE("teacher targets") {
  const Architecture lin({1, 1, 1}, Activation::Linear);
  W w = W::zeros(lin, 10);
  const Eigen::MatrixXd X = sample_inputs({InputLaw::IIDGaussian, 1.0, 1, 2}, 20);
  CHECK(teacher_targets({lin, w, 0}, X).isZero(0));
  w.W(1)(0, 0) = 2;
  w.W(2)(0, 0) = 3;
  CHECK(teacher_targets({lin, w, 0}, X) == 6 * X);
  CHECK(teacher_map({lin, w, 0})(0, 0) == 6.0);

  const Architecture sig({1, 2, 3}, Activation::Sigmoid);
  const Eigen::MatrixXd Ys = teacher_targets({sig, W::zeros(sig, 1), 0}, X);
  CHECK((Ys.array() == 0.5).all());
  CHECK_THROWS_AS(teacher_map({sig, W::zeros(sig, 1), 0}), std::invalid_argument);
  CHECK_THROWS_AS(teacher_targets({lin, w, 0}, Eigen::MatrixXd::Zero(3, 2)), ShapeError);
}

TEST_CASE("target noise is seeded and has the requested scale") {
  const Architecture lin({1, 1, 1}, Activation::Linear);
  const Teacher t{lin, W::zeros(lin, 1), 0.3};
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(20000, 1);
  const Eigen::MatrixXd Y = teacher_targets(t, X, 4, 0);
  CHECK(Y == teacher_targets(t, X, 4, 0));
  CHECK(Y != teacher_targets(t, X, 4, 1));
  const double sd = std::sqrt(Y.squaredNorm() / static_cast<double>(Y.size()));
  CHECK(sd == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("datasets: construction, concatenation and persistence") {
  const Architecture lin({2, 3, 2}, Activation::Linear);
  SplitMix64 g(3);
  W w = W::zeros(lin, 1);
  w.W(1) = gaussian_matrix(g, 3, 2);
  w.W(2) = gaussian_matrix(g, 2, 3);
  const SamplerSpec s{InputLaw::BoundedSubGaussian, 1.5, 2, 9};
  const Dataset a = make_dataset(s, {lin, w, 0.1}, 30, 1), b = make_dataset(s, {lin, w, 0.1}, 10, 2);
  CHECK(a.size() == 30);
  CHECK(a.y(4) == a.targets.row(4).transpose());
  const Dataset c = concat(a, b);
  CHECK(c.size() == 40);
  CHECK(c.inputs.bottomRows(10) == b.inputs);

  const auto dir = std::filesystem::temp_directory_path() / "lp_test_data";
  std::filesystem::create_directories(dir);
  save_dataset(a, dir / "a.lpd");
  const Dataset r = load_dataset(dir / "a.lpd");
  CHECK(r.inputs == a.inputs);
  CHECK(r.targets == a.targets);
  CHECK(r.sampler.seed == 9);
  CHECK(r.sampler.tau == 1.5);
  REQUIRE(r.teacher.has_value());
  CHECK(r.teacher->noise == 0.1);
  CHECK(r.teacher->weights.flatten() == w.flatten());
  export_csv(a, dir / "a.csv");
  CHECK(std::filesystem::file_size(dir / "a.csv") > 0);
  CHECK_THROWS(load_dataset(dir / "a.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("input law names") {
  CHECK(parse_input_law("rademacher") == InputLaw::BoundedSubGaussian);
  CHECK(parse_input_law("gaussian") == InputLaw::IIDGaussian);
  CHECK(to_string(InputLaw::IIDGaussian) == "gaussian");
  CHECK_THROWS_AS(parse_input_law("cauchy"), std::invalid_argument);
}
