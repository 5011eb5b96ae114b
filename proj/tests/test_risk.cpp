#include "lp/risk.hpp"
#include "lp/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace lp;
using W = WeightPoint<double>;

namespace {

const Architecture kScalar({1, 1, 1}, Activation::Linear);

W scalar_point(double a, double b, double r = 10) {
  W w = W::zeros(kScalar, r);
  w.W(1)(0, 0) = a;
  w.W(2)(0, 0) = b;
  return w;
}

W random_point(const Architecture& arch, double r, SplitMix64& g) {
  W w = W::zeros(arch, r);
  for (int j = 1; j <= arch.depth(); ++j)
    w.W(j) = uniform_ball(g, arch.layer_size(j), r).reshaped(arch.width(j), arch.width(j - 1));
  return w;
}

Dataset two_point_scalar() {
  Dataset d;
  d.inputs = Eigen::Vector2d(1, -1);
  d.targets = Eigen::Vector2d(6, -6);
  d.sampler = {InputLaw::BoundedSubGaussian, 1, 1, 0};
  return d;
}

}  // namespace

TEST_CASE("empirical risk on the two-point scalar dataset") {
  const Dataset d = two_point_scalar();
  CHECK(empirical_risk(kScalar, scalar_point(2, 3), d) == 0.0);
  CHECK(empirical_gradient(kScalar, scalar_point(2, 3), d).isZero(0));
  CHECK(empirical_risk(kScalar, scalar_point(2, 2), d) == 2.0);
}

TEST_CASE("one-sample datasets reduce to the single-sample formulas") {
  SplitMix64 g(1);
  for (auto act : {Activation::Linear, Activation::Sigmoid}) {
    const Architecture a({2, 3, 2}, act);
    const W w = random_point(a, 2, g);
    Dataset d;
    d.inputs = gaussian_vector(g, 2).transpose();
    d.targets = gaussian_vector(g, 2).transpose();
    const auto t = forward<double>(a, w, d.x(0), d.y(0));
    CHECK(empirical_risk(a, w, d) == doctest::Approx(loss(t)).epsilon(1e-14));
    CHECK((empirical_gradient(a, w, d) - gradient(a, t, w)).norm() <= 1e-14 * (1 + gradient(a, t, w).norm()));
    CHECK((empirical_hessian(a, w, d) - hessian(a, t, w)).norm() <= 1e-13 * (1 + hessian(a, t, w).norm()));
  }
  CHECK_THROWS_AS(empirical_risk(kScalar, scalar_point(1, 1), Dataset{}), std::invalid_argument);
}

TEST_CASE("moment form agrees with per-sample means for linear nets") {
  SplitMix64 g(2);
  for (int k = 0; k < 10; ++k) {
    const Architecture a({3, 2, 4, 2}, Activation::Linear);
    const W w = random_point(a, 1.5, g);
    const Teacher t{a, random_point(a, 1, g), 0.2};
    const Dataset d = make_dataset({InputLaw::IIDGaussian, 1, 3, 5}, t, 200, static_cast<std::uint64_t>(k));
    const SampleRisk fast(a, d), slow(a, d, true);
    CHECK(fast.value(w) == doctest::Approx(slow.value(w)).epsilon(1e-12));
    CHECK((fast.gradient(w) - slow.gradient(w)).norm() <= 1e-11 * (1 + slow.gradient(w).norm()));
    CHECK((fast.hessian(w) - slow.hessian(w)).norm() <= 1e-11 * (1 + slow.hessian(w).norm()));
  }
}

TEST_CASE("noiseless teacher: zero risk and gradient at the teacher") {
  SplitMix64 g(3);
  for (auto act : {Activation::Linear, Activation::Sigmoid}) {
    const Architecture a({2, 3, 2}, act);
    const Teacher t{a, random_point(a, 2, g), 0};
    const Dataset d = make_dataset({InputLaw::IIDGaussian, 1, 2, 1}, t, 64);
    CHECK(empirical_risk(a, t.weights, d) <= 1e-30);
    CHECK(empirical_gradient(a, t.weights, d).norm() <= 1e-14);
  }
}

TEST_CASE("pairwise summation is fixed-order and reproducible") {
  SplitMix64 g(4);
  const Architecture a({3, 4, 2}, Activation::Sigmoid);
  const W w = random_point(a, 2, g);
  const Teacher t{a, random_point(a, 2, g), 0.1};
  const Dataset d1 = make_dataset({InputLaw::IIDGaussian, 1, 3, 8}, t, 1000, 3);
  const Dataset d2 = make_dataset({InputLaw::IIDGaussian, 1, 3, 8}, t, 1000, 3);
  CHECK(empirical_risk(a, w, d1) == empirical_risk(a, w, d2));
  CHECK(empirical_hessian(a, w, d1) == empirical_hessian(a, w, d2));
  CHECK(pairwise_sum<double>(0, 100, [](long i) { return static_cast<double>(i); }) == 4950.0);
}

TEST_CASE("population oracles") {
  W teacher = scalar_point(2, 3);
  const Teacher t{kScalar, teacher, 0};
  const auto exact = PopulationOracle::exact_linear(t, 1.0);
  const auto at_teacher = population_risk(exact, kScalar, teacher);
  CHECK(at_teacher.value == 0.0);
  CHECK(at_teacher.stderr == 0.0);
  CHECK(population_risk(exact, kScalar, scalar_point(2, 2)).value == doctest::Approx(2));

  const auto mc = PopulationOracle::monte_carlo({InputLaw::IIDGaussian, 1, 1, 3}, t, 1000000);
  const auto e = population_risk(mc, kScalar, scalar_point(2, 2));
  CHECK(e.stderr > 0);
  CHECK(std::abs(e.value - 2) <= 3 * e.stderr);

  const Architecture sig({1, 1, 1}, Activation::Sigmoid);
  CHECK_THROWS_AS(exact.surface(sig), std::invalid_argument);
  CHECK_THROWS_AS(PopulationOracle::exact_linear({kScalar, teacher, 0.1}, 1.0), std::invalid_argument);
}

TEST_CASE("exact and Monte-Carlo oracles agree on random linear configurations") {
  SplitMix64 g(5);
  int agree = 0;
  for (int k = 0; k < 50; ++k) {
    const Architecture a({2, 2 + int(g() % 3), 2}, Activation::Linear);
    const Teacher t{a, random_point(a, 1.5, g), 0};
    const auto law = k % 2 ? InputLaw::IIDGaussian : InputLaw::BoundedSubGaussian;
    const SamplerSpec s{law, 0.5 + uniform01(g), 2, static_cast<std::uint64_t>(100 + k)};
    const auto exact = PopulationOracle::exact_linear(t, s.tau);
    const auto mc = PopulationOracle::monte_carlo(s, t, 20000);
    const W w = random_point(a, 1.5, g);
    const auto ee = population_risk(exact, a, w), em = population_risk(mc, a, w);
    agree += std::abs(ee.value - em.value) <= 4 * em.stderr;
  }
  CHECK(agree == 50);
}

TEST_CASE("exact population derivatives match differences of the exact risk") {
  SplitMix64 g(6);
  const Architecture a({2, 3, 2, 2}, Activation::Linear);
  const Teacher t{a, random_point(a, 1, g), 0};
  const auto pop = PopulationOracle::exact_linear(t, 1.3).surface(a);
  const W w = random_point(a, 1, g);
  const Eigen::VectorXd fd = fd_gradient(
      [&](const Eigen::VectorXd& p) { return pop->value(W::from_flat(a, p, 1)); }, w.flatten());
  CHECK(relative_error(pop->gradient(w), fd) <= 1e-7);
  const Eigen::MatrixXd fh = fd_hessian(
      [&](const Eigen::VectorXd& p) { return pop->gradient(W::from_flat(a, p, 1)); }, w.flatten());
  CHECK(relative_error(pop->hessian(w), fh) <= 1e-6);
}

TEST_CASE("sup gap null cases") {
  // The oracle's own Monte-Carlo sample used as the dataset.
  SplitMix64 g(7);
  const Architecture a({2, 2, 1}, Activation::Sigmoid);
  const Teacher t{a, random_point(a, 2, g), 0.1};
  const auto mc = PopulationOracle::monte_carlo({InputLaw::IIDGaussian, 1, 2, 4}, t, 500);
  GapBudget b;
  b.probes = 32;
  b.ascent_steps = 10;
  for (auto q : {GapQuantity::Loss, GapQuantity::GradNorm, GapQuantity::HessOpNorm})
    CHECK(sup_gap(a, 2, *mc.sample(), mc, q, b).sup_gap <= 1e-10);

  // Scalar linear net under Rademacher inputs: x^2 = 1, so empirical and population risks coincide.
  const Teacher st{kScalar, scalar_point(2, 3, 4), 0};
  Dataset one;
  one.inputs = Eigen::MatrixXd::Ones(1, 1);
  one.targets = Eigen::MatrixXd::Constant(1, 1, 6);
  const auto exact = PopulationOracle::exact_linear(st, 1.0);
  CHECK(sup_gap(kScalar, 4, one, exact, GapQuantity::Loss, b).sup_gap <= 1e-12);
}

TEST_CASE("sup gap bookkeeping") {
  SplitMix64 g(8);
  const Architecture a({2, 3, 2}, Activation::Linear);
  const Teacher t{a, random_point(a, 1, g), 0};
  const SamplerSpec s{InputLaw::BoundedSubGaussian, 1, 2, 2};
  const auto oracle = PopulationOracle::exact_linear(t, 1.0);
  const Dataset d = make_dataset(s, t, 64);
  GapBudget b;
  b.probes = 40;
  b.ascent = false;
  const auto est = sup_gap(a, 1, d, oracle, GapQuantity::Loss, b);
  CHECK(est.probes == 40);
  CHECK(est.method == GapMethod::NetSample);
  CHECK(est.argmax.in_omega(1e-12));
  const SampleRisk emp(a, d);
  const auto pop = oracle.surface(a);
  for (const auto& w : probe_points(a, 1, b)) CHECK(gap_at(emp, *pop, GapQuantity::Loss, w) <= est.sup_gap);
  b.ascent = true;
  const auto asc = sup_gap(a, 1, d, oracle, GapQuantity::Loss, b);
  CHECK(asc.sup_gap >= est.sup_gap);
  CHECK(asc.argmax.in_omega(1e-12));
  CHECK(asc.method == GapMethod::NetSampleWithAscent);
  b.probes = 0;
  CHECK_THROWS_AS(sup_gap(a, 1, d, oracle, GapQuantity::Loss, b), std::invalid_argument);
}

TEST_CASE("probe points: boundary shell then interior") {
  const Architecture a({2, 3, 2}, Activation::Linear);
  GapBudget b;
  b.probes = 10;
  b.boundary_fraction = 0.3;
  b.seed = 4;
  const auto p = probe_points(a, 2, b);
  REQUIRE(p.size() == 10);
  for (int k = 0; k < 3; ++k)
    for (int j = 1; j <= 2; ++j) CHECK(p[k].W(j).norm() == doctest::Approx(2));
  for (const auto& w : p) CHECK(w.in_omega(1e-12));
  CHECK(probe_points(a, 2, b)[5].flatten() == p[5].flatten());
}

TEST_CASE("sup gap decreases when n quadruples") {
  SplitMix64 g(9);
  const Architecture a({2, 3, 2}, Activation::Linear);
  const Teacher t{a, random_point(a, 0.8, g), 0};
  const SamplerSpec s{InputLaw::BoundedSubGaussian, 1, 2, 12};
  const auto oracle = PopulationOracle::exact_linear(t, 1.0);
  GapBudget b;
  b.probes = 64;
  b.seed = 1;
  auto median_gap = [&](long n) {
    std::vector<double> v;
    for (int k = 0; k < 20; ++k)
      v.push_back(sup_gap(a, 1, make_dataset(s, t, n, static_cast<std::uint64_t>(k) + 1000 * n), oracle,
                          GapQuantity::Loss, b)
                      .sup_gap);
    std::nth_element(v.begin(), v.begin() + 10, v.end());
    return v[10];
  };
  CHECK(median_gap(1024) < median_gap(256));
}

TEST_CASE("fixed-point gradient gap shrinks with n") {
  SplitMix64 g(10);
  const Architecture a({2, 2, 2}, Activation::Sigmoid);
  const Teacher t{a, random_point(a, 2, g), 0.1};
  const SamplerSpec s{InputLaw::IIDGaussian, 1, 2, 3};
  const auto oracle = PopulationOracle::monte_carlo(s, t, 200000, 99);
  const auto pop = oracle.surface(a);
  const W w = random_point(a, 2, g);
  auto median = [&](long n) {
    std::vector<double> v;
    for (int k = 0; k < 21; ++k)
      v.push_back(gap_at(SampleRisk(a, make_dataset(s, t, n, static_cast<std::uint64_t>(k) + 7 * n)), *pop,
                         GapQuantity::GradNorm, w));
    std::nth_element(v.begin(), v.begin() + 10, v.end());
    return v[10];
  };
  CHECK(median(4000) < median(250));
}

TEST_CASE("constrained solver reaches KKT points on the boundary") {
  // min 1/2 (w1 w2 - 6)^2 over |w1|, |w2| <= 2: the optimum w1 w2 = 4 has both layers active.
  Dataset d = two_point_scalar();
  const SampleRisk risk(kScalar, d);
  SolverOptions o;
  o.mode = SolverMode::Constrained;
  o.tol = 1e-12;
  const auto res = solve_stationary(risk, scalar_point(0.5, 0.7, 2), o);
  REQUIRE(res.converged);
  CHECK(res.active_layers == 2);
  CHECK(std::abs(res.w.W(1)(0, 0) * res.w.W(2)(0, 0)) == doctest::Approx(4));
  const auto k = kkt_state(kScalar, res.w, risk.gradient(res.w));
  CHECK(k.residual.norm() <= 1e-12);
  CHECK(k.multiplier.size() == 2);
  for (double m : k.multiplier) CHECK(m > 0);

  // The unconstrained descent stalls on the sphere with a nonzero gradient.
  o.mode = SolverMode::Descent;
  CHECK_FALSE(solve_stationary(risk, scalar_point(0.5, 0.7, 2), o).converged);
}

TEST_CASE("gradient-norm solver reaches a saddle") {
  // 1/2 (w1 w2 - 6)^2 has a saddle at the origin.
  const SampleRisk risk(kScalar, two_point_scalar());
  SolverOptions o;
  o.mode = SolverMode::GradNorm;
  o.tol = 1e-10;
  const auto res = solve_stationary(risk, scalar_point(0.05, -0.03), o);
  REQUIRE(res.converged);
  CHECK(res.w.flatten().norm() <= 1e-6);
}

TEST_CASE("stability on a realisable noiseless linear task is zero") {
  SplitMix64 g(11);
  StabilityConfig c;
  c.arch = Architecture({2, 2, 1}, Activation::Linear);
  c.teacher = {c.arch, random_point(c.arch, 1, g), 0};
  c.sampler = {InputLaw::IIDGaussian, 1, 2, 5};
  c.n = 8;
  c.trials = 4;
  c.n_pop = 100;
  c.start = c.teacher.weights;
  c.solver.mode = SolverMode::Constrained;
  const auto r = loo_stability(c);
  CHECK(r.trials_used == 4);
  CHECK(std::abs(r.stability) <= 1e-20);
  CHECK(std::abs(r.generalization) <= 1e-20);
  c.n = 1;
  CHECK_THROWS_AS(loo_stability(c), std::invalid_argument);
}

TEST_CASE("tail experiment") {
  SplitMix64 g(12);
  const Architecture a({2, 3, 2}, Activation::Linear);
  const Teacher t{a, random_point(a, 1, g), 0};
  const SamplerSpec s{InputLaw::BoundedSubGaussian, 1, 2, 6};
  const auto oracle = PopulationOracle::exact_linear(t, 1.0);
  const W w = random_point(a, 1, g);
  for (const auto& row : tail_experiment(a, w, s, t, oracle, {4, 16}, 1e6, 50)) CHECK(row.exceed == 0);

  const auto r1 = tail_experiment(a, w, s, t, oracle, {8}, 0.002, 500);
  const auto r2 = tail_experiment(a, w, s, t, oracle, {8}, 0.002, 1000);
  CHECK(r1[0].fraction > 0);
  CHECK(r2[0].fraction >= r1[0].ci_low);
  CHECK(r2[0].fraction <= r1[0].ci_high);
  CHECK_THROWS_AS(tail_experiment(a, w, s, t, oracle, {8}, 0, 10), std::invalid_argument);
}

TEST_CASE("gap quantity names") {
  CHECK(parse_gap_quantity("loss") == GapQuantity::Loss);
  CHECK(parse_gap_quantity("grad") == GapQuantity::GradNorm);
  CHECK(parse_gap_quantity("hess") == GapQuantity::HessOpNorm);
  CHECK_THROWS_AS(parse_gap_quantity("value"), std::invalid_argument);
}
