#include "lp/landscape.hpp"
#include "lp/rng.hpp"

#include <doctest.h>

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

StationaryRecord record_at(const W& w, int index, bool degenerate = false) {
  StationaryRecord r;
  r.w = w;
  r.spectrum = Eigen::Vector2d(index > 0 ? -1.0 : 1.0, degenerate ? 0.0 : 2.0);
  r.info = classify_spectrum(r.spectrum, 1e-3);
  return r;
}

}  // namespace

TEST_CASE("the origin of a deep linear net is a degenerate stationary point") {
  // With l >= 3 every Hessian block carries a chain product through some zero layer.
  SplitMix64 g(1);
  const Architecture a({2, 3, 2, 2}, Activation::Linear);
  const Teacher t{a, random_point(a, 1, g), 0};
  const auto pop = PopulationOracle::exact_linear(t, 1.0).surface(a);
  const auto rec = describe_point(*pop, W::zeros(a, 1), 1e-3, Source::Population);
  CHECK(rec.grad_norm == 0.0);
  CHECK(rec.degenerate());
  CHECK(rec.spectrum.size() == a.weight_dim());
  CHECK(rec.spectrum.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rec.source == Source::Population);
}

TEST_CASE("scalar population point (2, 3) is stationary and degenerate") {
  // J(w) = 1/2 (w1 w2 - 6)^2 under unit-variance inputs: Hessian [[9, 6], [6, 4]] is singular.
  const Teacher t{kScalar, scalar_point(2, 3), 0};
  const auto pop = PopulationOracle::exact_linear(t, 1.0).surface(kScalar);
  const auto rec = describe_point(*pop, scalar_point(2, 3), 1e-3, Source::Population);
  CHECK(rec.grad_norm == 0.0);
  CHECK(rec.degenerate());
  CHECK(rec.spectrum(0) == doctest::Approx(0).epsilon(1e-12));
  CHECK(rec.spectrum(1) == doctest::Approx(13));
}

TEST_CASE("find_stationary locates the teacher and merges duplicates") {
  SplitMix64 g(2);
  const Architecture a({2, 2, 1}, Activation::Sigmoid);
  const Teacher t{a, random_point(a, 2, g), 0};
  const Dataset d = make_dataset({InputLaw::IIDGaussian, 1, 2, 3}, t, 256);
  const SampleRisk risk(a, d);
  StationaryOptions o;
  o.solver.tol = 1e-10;
  W near = t.weights;
  near.W(1)(0, 0) += 1e-3;
  const auto s = find_stationary(risk, {t.weights, near, t.weights}, o, Source::Empirical);
  REQUIRE(s.diagnostics.size() == 3);
  REQUIRE(s.records.size() == 1);
  CHECK(s.records[0].grad_norm <= 1e-10);
  CHECK((s.records[0].w.flatten() - t.weights.flatten()).norm() <= 1e-6);
}

TEST_CASE("pairing") {
  const std::vector<StationaryRecord> emp{record_at(scalar_point(2, 3), 0), record_at(scalar_point(-2, -3), 0),
                                          record_at(scalar_point(5, 5), 1)};
  const std::vector<StationaryRecord> pop{record_at(scalar_point(2, 3), 0), record_at(scalar_point(-2, -3.1), 0),
                                          record_at(scalar_point(0, 0), 1, true)};
  const auto r = pair_points(emp, pop, 1e-3, 0.5);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0].distance == 0.0);
  CHECK(r.pairs[1].distance == doctest::Approx(0.1));
  CHECK(r.pairs[0].index_equal);
  CHECK(r.indices_agree());
  REQUIRE(r.unmatched_empirical.size() == 1);
  CHECK(r.unmatched_empirical[0].w.W(1)(0, 0) == 5.0);
  REQUIRE(r.unmatched_population.size() == 1);
  CHECK(r.unmatched_population[0].degenerate());
  CHECK_THROWS_AS(pair_points(emp, pop, 1e-3, 0), std::invalid_argument);
  CHECK_THROWS_AS(pair_points(emp, pop, 1e-3, -1), std::invalid_argument);
}

TEST_CASE("pairing is greedy by distance and flags ambiguity") {
  const std::vector<StationaryRecord> emp{record_at(scalar_point(0, 0), 0), record_at(scalar_point(0, 0.3), 0)};
  const std::vector<StationaryRecord> pop{record_at(scalar_point(0, 0.25), 0)};
  const auto r = pair_points(emp, pop, 1e-3, 1.0);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].empirical.w.W(2)(0, 0) == 0.3);
  CHECK(r.unmatched_empirical.size() == 1);
  CHECK(r.ambiguous >= 1);
}

TEST_CASE("index disagreement between non-degenerate points is detected") {
  const auto r = pair_points({record_at(scalar_point(1, 1), 0)}, {record_at(scalar_point(1, 1), 1)}, 1e-3, 1.0);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].both_nondegenerate);
  CHECK_FALSE(r.indices_agree());
}

TEST_CASE("degenerate gradient audit: exact zeros") {
  const SamplerSpec s{InputLaw::BoundedSubGaussian, 1, 1, 4};
  // Noiseless scalar teacher 6 evaluated at (2, 3): every sample residual is zero.
  const Teacher t{kScalar, scalar_point(2, 3), 0};
  for (const auto& row : degenerate_gradient_audit(kScalar, scalar_point(2, 3), s, t, {16, 64}, 5)) {
    CHECK(row.grad_norms.size() == 5);
    CHECK(row.median == 0.0);
  }
  // At w = 0 every chain product vanishes, so the empirical gradient does too.
  const Architecture a({2, 2, 2}, Activation::Linear);
  SplitMix64 g(3);
  const Teacher ta{a, random_point(a, 1, g), 0};
  for (const auto& row : degenerate_gradient_audit(a, W::zeros(a, 1), {InputLaw::IIDGaussian, 1, 2, 1}, ta, {8}, 3))
    CHECK(row.q75 == 0.0);
  CHECK_THROWS_AS(degenerate_gradient_audit(a, W::zeros(a, 1), s, ta, {8}, 0), std::invalid_argument);
}

TEST_CASE("quantile interpolates linearly") {
  CHECK(quantile({3, 1, 2}, 0.5) == 2.0);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({1, 2, 3, 4}, 0.0) == 1.0);
  CHECK(quantile({1, 2, 3, 4}, 1.0) == 4.0);
  CHECK(quantile({0, 10}, 0.25) == 2.5);
}
