#include "experiments.hpp"

#include "lp/bounds.hpp"
#include "lp/landscape.hpp"
#include "lp/parallel.hpp"
#include "lp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lp::detail {

namespace {

using W = WeightPoint<double>;

// ---------------------------------------------------------------------------
// config helpers

Architecture arch_of(const Json& c) {
  return Architecture::parse(c.at("arch").get<std::string>(),
                             parse_activation(c.value("activation", std::string("linear"))));
}

std::vector<long> grid_of(const Json& g) {
  if (g.is_string()) return parse_grid(g.get<std::string>());
  return g.get<std::vector<long>>();
}

std::uint64_t seed_of(const Json& c) { return c.at("seed").get<std::uint64_t>(); }

double thr(const Json& c, const char* name) { return c.at("thresholds").at(name).get<double>(); }

W random_point(const Architecture& arch, double radius, SplitMix64& g, bool boundary) {
  auto w = W::zeros(arch, radius);
  for (int j = 1; j <= arch.depth(); ++j) {
    const Eigen::VectorXd v = boundary ? Eigen::VectorXd(radius * uniform_sphere(g, arch.layer_size(j)))
                                       : uniform_ball(g, arch.layer_size(j), radius);
    w.W(j) = v.reshaped(arch.width(j), arch.width(j - 1));
  }
  return w;
}

W point_from(const Architecture& arch, const Json& flat, double radius) {
  const auto v = flat.get<std::vector<double>>();
  return W::from_flat(arch, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())), radius);
}

/// {"weights": [...]} or {"seed": s, "scale": x} (every layer at norm x r).
Teacher teacher_of(const Json& c, const Architecture& arch, double radius) {
  const Json& t = c.at("teacher");
  Teacher teacher;
  teacher.arch = arch;
  teacher.noise = t.value("noise", 0.0);
  if (t.contains("weights")) {
    teacher.weights = point_from(arch, t["weights"], radius);
  } else {
    SplitMix64 g(t.value("seed", std::uint64_t{0}), 0x7465616368ULL, 0);
    teacher.weights = random_point(arch, radius * t.value("scale", 0.8), g, true);
    teacher.weights.radius = radius;
  }
  if (!teacher.weights.in_omega(1e-9)) throw std::invalid_argument("teacher weights lie outside Omega");
  return teacher;
}

SamplerSpec sampler_of(const Json& c, int d0) {
  SamplerSpec s;
  s.kind = parse_input_law(c.value("law", std::string("rademacher")));
  s.tau = c.at("tau").get<double>();
  s.d0 = d0;
  s.seed = seed_of(c);
  return s;
}

Json to_json(const W& w) {
  const Eigen::VectorXd f = w.flatten();
  return std::vector<double>(f.data(), f.data() + f.size());
}

Json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Assertion check_le(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

Assertion check_in(std::string name, double value, double lo, double hi) {
  return {std::move(name), value >= lo && value <= hi, value, hi,
          "expected in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"};
}

Assertion check_true(std::string name, bool ok, std::string detail = {}) {
  return {std::move(name), ok, ok ? 1.0 : 0.0, 1.0, std::move(detail)};
}

std::uint64_t trial_id(std::size_t grid_index, long trial) {
  return (static_cast<std::uint64_t>(grid_index) << 32) | static_cast<std::uint64_t>(trial);
}

// ---------------------------------------------------------------------------
// grad-check / hess-check

struct RandomCase {
  Architecture arch;
  W w;
  Eigen::VectorXd x, y;
};

RandomCase random_case(const Json& c, Activation act, long k) {
  SplitMix64 g(seed_of(c), act == Activation::Linear ? 1 : 2, static_cast<std::uint64_t>(k));
  const int max_w = c.at("max_width").get<int>(), max_l = c.at("max_depth").get<int>();
  const int l = 2 + static_cast<int>(g() % static_cast<std::uint64_t>(max_l - 1));
  std::vector<int> dims;
  for (int j = 0; j <= l; ++j) dims.push_back(1 + static_cast<int>(g() % static_cast<std::uint64_t>(max_w)));
  RandomCase rc{Architecture(dims, act), {}, {}, {}};
  const double r = c.at("radius").get<double>();
  rc.w = random_point(rc.arch, r, g, false);
  rc.x = gaussian_vector(g, dims.front());
  if (act == Activation::Linear) {
    rc.y = gaussian_vector(g, dims.back());
  } else {
    rc.y.resize(dims.back());
    for (auto& v : rc.y) v = uniform01(g);
  }
  return rc;
}

std::vector<Activation> activations_of(const Json& c) {
  std::vector<Activation> acts;
  for (const auto& a : c.at("activations")) acts.push_back(parse_activation(a.get<std::string>()));
  return acts;
}

Json grad_check_defaults() {
  return {{"experiment", "grad-check"}, {"cases", 100},        {"activations", {"linear", "sigmoid"}},
          {"max_width", 7},             {"max_depth", 4},      {"radius", 2.0},
          {"seed", 1},                  {"fd_step", 1e-5},     {"thresholds", {{"max_rel_err", 1e-6}}}};
}

ExperimentOutput grad_check(const Json& c) {
  ExperimentOutput out;
  out.table.header = {"case_id", "activation", "arch", "max_rel_err", "pass"};
  const long cases = c.at("cases").get<long>();
  const double h = c.at("fd_step").get<double>(), tol = thr(c, "max_rel_err");
  Json records = Json::array();
  for (auto act : activations_of(c)) {
    std::vector<double> err(static_cast<std::size_t>(cases));
    std::vector<std::string> archs(static_cast<std::size_t>(cases));
    parallel_for(cases, [&](long k) {
      const auto rc = random_case(c, act, k);
      const Eigen::VectorXd g = gradient(rc.arch, forward<double>(rc.arch, rc.w, rc.x, rc.y), rc.w);
      const Eigen::VectorXd fd = fd_gradient(
          [&](const Eigen::VectorXd& p) {
            return loss(forward<double>(rc.arch, W::from_flat(rc.arch, p, rc.w.radius), rc.x, rc.y));
          },
          rc.w.flatten(), h);
      err[static_cast<std::size_t>(k)] = relative_error(g, fd);
      archs[static_cast<std::size_t>(k)] = rc.arch.to_string();
    });
    double worst = 0;
    for (long k = 0; k < cases; ++k) {
      const double e = err[static_cast<std::size_t>(k)];
      worst = std::max(worst, e);
      const std::string id = to_string(act) + "-" + std::to_string(k);
      records.push_back({{"case_id", id}, {"max_rel_err", e}, {"pass", e <= tol}});
      out.table.rows.push_back({id, to_string(act), archs[static_cast<std::size_t>(k)], e, e <= tol});
    }
    out.result[to_string(act)] = {{"cases", cases}, {"max_rel_err", worst}};
    out.assertions.push_back(check_le("gradient " + to_string(act) + " max relative error", worst, tol));
  }
  out.result["records"] = std::move(records);
  return out;
}

Json hess_check_defaults() {
  return {{"experiment", "hess-check"},
          {"cases", 50},
          {"activations", {"linear", "sigmoid"}},
          {"max_width", 5},
          {"max_depth", 4},
          {"radius", 2.0},
          {"seed", 2},
          {"fd_step", 1e-5},
          {"thresholds", {{"linear_rel_err", 1e-5}, {"sigmoid_rel_err", 1e-4}, {"symmetry", 1e-9}}}};
}

ExperimentOutput hess_check(const Json& c) {
  ExperimentOutput out;
  out.table.header = {"case_id", "activation", "arch", "max_rel_err", "asymmetry", "pass"};
  const long cases = c.at("cases").get<long>();
  const double h = c.at("fd_step").get<double>(), sym_tol = thr(c, "symmetry");
  Json records = Json::array();
  for (auto act : activations_of(c)) {
    const double tol = thr(c, act == Activation::Linear ? "linear_rel_err" : "sigmoid_rel_err");
    std::vector<double> err(static_cast<std::size_t>(cases)), asym(static_cast<std::size_t>(cases));
    std::vector<std::string> archs(static_cast<std::size_t>(cases));
    parallel_for(cases, [&](long k) {
      const auto rc = random_case(c, act, k);
      const Eigen::MatrixXd H = hessian(rc.arch, forward<double>(rc.arch, rc.w, rc.x, rc.y), rc.w);
      const Eigen::MatrixXd fd = fd_hessian(
          [&](const Eigen::VectorXd& p) {
            const auto w = W::from_flat(rc.arch, p, rc.w.radius);
            return gradient(rc.arch, forward<double>(rc.arch, w, rc.x, rc.y), w);
          },
          rc.w.flatten(), h);
      err[static_cast<std::size_t>(k)] = relative_error(H, fd);
      asym[static_cast<std::size_t>(k)] = (H - H.transpose()).cwiseAbs().maxCoeff();
      archs[static_cast<std::size_t>(k)] = rc.arch.to_string();
    });
    double worst = 0, worst_asym = 0;
    for (long k = 0; k < cases; ++k) {
      const auto K = static_cast<std::size_t>(k);
      worst = std::max(worst, err[K]);
      worst_asym = std::max(worst_asym, asym[K]);
      const std::string id = to_string(act) + "-" + std::to_string(k);
      const bool ok = err[K] <= tol && asym[K] <= sym_tol;
      records.push_back({{"case_id", id}, {"max_rel_err", err[K]}, {"pass", ok}});
      out.table.rows.push_back({id, to_string(act), archs[K], err[K], asym[K], ok});
    }
    out.result[to_string(act)] = {{"cases", cases}, {"max_rel_err", worst}, {"max_asymmetry", worst_asym}};
    out.assertions.push_back(check_le("hessian " + to_string(act) + " max relative error", worst, tol));
    out.assertions.push_back(check_le("hessian " + to_string(act) + " max asymmetry", worst_asym, sym_tol));
  }
  out.result["records"] = std::move(records);
  return out;
}

// ---------------------------------------------------------------------------
// hand-check: scalar net W1 = 2, W2 = 3, x = 1, y = 0

Json hand_check_defaults() {
  return {{"experiment", "hand-check"}, {"zeta", 0.1}, {"thresholds", {{"abs_err", 1e-10}}}};
}

ExperimentOutput hand_check(const Json& c) {
  ExperimentOutput out;
  const double tol = thr(c, "abs_err"), zeta = c.at("zeta").get<double>();
  const Architecture arch({1, 1, 1}, Activation::Linear);
  W w = W::zeros(arch, 10);
  w.W(1)(0, 0) = 2;
  w.W(2)(0, 0) = 3;
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(1), y = Eigen::VectorXd::Zero(1);
  const auto t = forward<double>(arch, w, x, y);
  const double f = loss(t);
  const Eigen::VectorXd g = gradient(arch, t, w);
  const Eigen::MatrixXd H = hessian(arch, t, w);
  const Eigen::VectorXd ev = spectrum(H);
  const auto info = classify_spectrum(ev, zeta);
  Eigen::MatrixXd Hx(2, 2);
  Hx << 9, 12, 12, 4;
  const double disc = std::sqrt(13.0 * 13.0 + 4 * 108.0);
  const Eigen::Vector2d evx((13 - disc) / 2, (13 + disc) / 2);

  out.result = {{"loss", f},
                {"gradient", to_json(g)},
                {"hessian", {{H(0, 0), H(0, 1)}, {H(1, 0), H(1, 1)}}},
                {"eigenvalues", to_json(ev)},
                {"index", info.index},
                {"degenerate", info.degenerate}};
  out.assertions.push_back(check_le("loss = 18", std::abs(f - 18), tol));
  out.assertions.push_back(check_le("gradient = (18, 12)", (g - Eigen::Vector2d(18, 12)).cwiseAbs().maxCoeff(), tol));
  out.assertions.push_back(check_le("hessian = [[9,12],[12,4]]", (H - Hx).cwiseAbs().maxCoeff(), tol));
  out.assertions.push_back(check_le("eigenvalues = (13 -+ sqrt(601))/2", (ev - evx).cwiseAbs().maxCoeff(), tol));
  out.assertions.push_back(check_true("index 1, non-degenerate", info.index == 1 && !info.degenerate));
  return out;
}

// ---------------------------------------------------------------------------
// norm-audit

Json norm_audit_defaults() {
  return {{"experiment", "norm-audit"},
          {"draws", 10000},
          {"seed", 3},
          {"linear", {{"arch", "3,4,3,2"}, {"radius", 1.5}, {"tau", 1.0}}},
          {"sigmoid", {{"arch", "3,4,3,2"}, {"radius", 5.0}, {"tau", 1.0}}},
          {"boundary_fraction", 0.5},
          {"thresholds", {{"violations", 0}}}};
}

ExperimentOutput norm_audit(const Json& c) {
  ExperimentOutput out;
  const long draws = c.at("draws").get<long>();
  const std::uint64_t seed = seed_of(c);
  const double bfrac = c.at("boundary_fraction").get<double>();
  const long allowed = c.at("thresholds").at("violations").get<long>();
  const auto D = static_cast<std::size_t>(draws);
  constexpr double slack = 1 + 1e-10;  // rounding only

  // Linear: chain norms and the calibrated gradient/Hessian bounds.
  {
    const Json& lc = c.at("linear");
    const Architecture arch = Architecture::parse(lc.at("arch").get<std::string>(), Activation::Linear);
    const double r = lc.at("radius").get<double>(), tau = lc.at("tau").get<double>();
    const int l = arch.depth();
    SamplerSpec sampler{InputLaw::BoundedSubGaussian, tau, arch.input_dim(), seed};
    Teacher teacher{arch, {}, 0};
    {
      SplitMix64 g(seed, 0x7465616368ULL, 0);
      teacher.weights = random_point(arch, r, g, false);
    }
    struct Draw {
      double grad, hess;
      long chain_violations;
    };
    auto draw_set = [&](std::uint64_t stream) {
      std::vector<Draw> v(D);
      const Eigen::MatrixXd X = sample_inputs(sampler, draws, stream);
      const Eigen::MatrixXd Y = teacher_targets(teacher, X);
      parallel_for(draws, [&](long k) {
        SplitMix64 g(seed, stream + 100, static_cast<std::uint64_t>(k));
        const W w = random_point(arch, r, g, uniform01(g) < bfrac);
        const auto t = forward<double>(arch, w, X.row(k).transpose(), Y.row(k).transpose());
        Draw d{gradient(arch, t, w).norm(), hessian(arch, t, w).norm(), 0};
        for (int s = 1; s <= l; ++s)
          for (int tt = 1; tt <= s; ++tt)
            if (chain_product(arch, t, w, s, tt).norm() > std::pow(r, s - tt + 1) * slack) ++d.chain_violations;
        v[static_cast<std::size_t>(k)] = d;
      });
      return v;
    };
    const auto train = draw_set(1), test = draw_set(2);
    BoundConfig bc;
    bc.arch = arch;
    bc.r = r;
    bc.tau = tau;
    bc.r_x = sampler.input_radius();
    std::vector<double> tg, th;
    for (const auto& d : train) {
      tg.push_back(d.grad);
      th.push_back(d.hess);
    }
    const double ct = calibrate_constant("c_t", tg, bc), ctp = calibrate_constant("c_t'", th, bc);
    bc.constants.set("c_t", ct, true);
    bc.constants.set("c_t'", ctp, true);
    const double gb = std::sqrt(alpha_g(bc)), hb = l * std::sqrt(alpha_l(bc));
    long gv = 0, hv = 0, cv = 0;
    double gmax = 0, hmax = 0;
    for (const auto& d : test) {
      gv += d.grad > gb;
      hv += d.hess > hb;
      gmax = std::max(gmax, d.grad);
      hmax = std::max(hmax, d.hess);
    }
    for (const auto& v : {train, test})
      for (const auto& d : v) cv += d.chain_violations;
    out.result["linear"] = {{"arch", arch.to_string()}, {"radius", r},  {"r_x", bc.r_x},  {"c_t", ct},
                            {"c_t'", ctp},              {"grad_bound", gb}, {"hess_bound", hb}, {"test_grad_max", gmax},
                            {"test_hess_max", hmax},    {"grad_violations", gv}, {"hess_violations", hv},
                            {"chain_violations", cv}};
    out.assertions.push_back(check_le("linear ||B_{s:t}||_F <= r^(s-t+1)", static_cast<double>(cv), allowed));
    out.assertions.push_back(
        check_le("linear ||grad f|| <= sqrt(alpha_g), calibrated c_t", static_cast<double>(gv), allowed));
    out.assertions.push_back(
        check_le("linear ||hess f||_F <= l sqrt(alpha_l), calibrated c_t'", static_cast<double>(hv), allowed));
  }

  // Sigmoid: chain norms, alpha and varsigma with exact constants.
  {
    const Json& sc = c.at("sigmoid");
    const Architecture arch = Architecture::parse(sc.at("arch").get<std::string>(), Activation::Sigmoid);
    const double r = sc.at("radius").get<double>(), tau = sc.at("tau").get<double>();
    const int l = arch.depth();
    SamplerSpec sampler{InputLaw::IIDGaussian, tau, arch.input_dim(), seed};
    const Eigen::MatrixXd X = sample_inputs(sampler, draws, 3);
    Eigen::MatrixXd Y(draws, arch.output_dim());
    for (long k = 0; k < draws; ++k) {
      SplitMix64 g(seed, 0x79ULL, static_cast<std::uint64_t>(k));
      for (int i = 0; i < arch.output_dim(); ++i) Y(k, i) = uniform01(g);
    }
    BoundConfig bc;
    bc.arch = arch;
    bc.r = r;
    bc.tau = tau;
    bc.constants.set("c_y", sigmoid_cy(Y));
    const double alpha = sigmoid_alpha(bc), varsigma = sigmoid_varsigma(bc);
    std::vector<double> gn(D), hn(D);
    std::vector<long> chain(D, 0);
    parallel_for(draws, [&](long k) {
      SplitMix64 g(seed, 200, static_cast<std::uint64_t>(k));
      const W w = random_point(arch, r, g, uniform01(g) < bfrac);
      const auto t = forward<double>(arch, w, X.row(k).transpose(), Y.row(k).transpose());
      const auto K = static_cast<std::size_t>(k);
      gn[K] = gradient(arch, t, w).norm();
      hn[K] = hessian(arch, t, w).norm();
      for (int s = 1; s <= l; ++s)
        for (int tt = s; tt <= l; ++tt)
          if (chain_product(arch, t, w, s, tt).norm() > std::pow(r / 4, tt - s + 1) * slack) ++chain[K];
    });
    long gv = 0, hv = 0, cv = 0;
    for (std::size_t k = 0; k < D; ++k) {
      gv += gn[k] > alpha * slack;
      hv += hn[k] > varsigma * slack;
      cv += chain[k];
    }
    const double gmax = *std::max_element(gn.begin(), gn.end()), hmax = *std::max_element(hn.begin(), hn.end());
    out.result["sigmoid"] = {{"arch", arch.to_string()}, {"radius", r},       {"c_y", bc.constants["c_y"]},
                             {"alpha", alpha},           {"varsigma", varsigma}, {"grad_max", gmax},
                             {"hess_max", hmax},         {"grad_violations", gv}, {"hess_violations", hv},
                             {"chain_violations", cv}};
    out.assertions.push_back(check_le("sigmoid ||B_{s:t}||_F <= (r/4)^(t-s+1)", static_cast<double>(cv), allowed));
    out.assertions.push_back(check_le("sigmoid ||grad f|| <= alpha", static_cast<double>(gv), allowed));
    out.assertions.push_back(check_le("sigmoid ||hess f||_F <= varsigma", static_cast<double>(hv), allowed));
  }

  // G and P_k operator inequalities on random (u, M).
  {
    long gv = 0, pv = 0;
    for (long k = 0; k < draws; ++k) {
      SplitMix64 g(seed, 300, static_cast<std::uint64_t>(k));
      const int n = 1 + static_cast<int>(g() % 6), m = 1 + static_cast<int>(g() % 4);
      const Eigen::VectorXd u = gaussian_vector(g, n, 3.0);
      const Eigen::MatrixXd M = gaussian_matrix(g, n, m);
      gv += (slope_operator(u) * M).squaredNorm() > M.squaredNorm() / 16 * slack;
      pv += (curvature_operator(u) * M).squaredNorm() > 64.0 / 6561.0 * M.squaredNorm() * slack;
    }
    out.result["operators"] = {{"G_violations", gv}, {"P_violations", pv}};
    out.assertions.push_back(check_le("||G(u) M||_F^2 <= ||M||_F^2 / 16", static_cast<double>(gv), allowed));
    out.assertions.push_back(check_le("||P_k M||_F^2 <= 2^6/3^8 ||M||_F^2", static_cast<double>(pv), allowed));
  }
  out.result["draws"] = draws;
  return out;
}

// ---------------------------------------------------------------------------
// gap-rate

Json gap_rate_defaults() {
  return {{"experiment", "gap-rate"},
          {"arch", "4,4,3"},
          {"activation", "linear"},
          {"radius", 1.0},
          {"tau", 1.0},
          {"law", "rademacher"},
          {"teacher", {{"seed", 11}, {"scale", 0.8}}},
          {"n_grid", {128, 256, 512, 1024, 2048, 4096, 8192}},
          {"trials", 100},
          {"probes", 256},
          {"quantity", "loss"},
          {"ascent", true},
          {"ascent_top", 4},
          {"ascent_steps", 50},
          {"boundary_fraction", 0.5},
          {"n_pop", 65536},
          {"seed", 5},
          {"thresholds", {{"slope_min", -0.65}, {"slope_max", -0.35}, {"rate_band", 3.0}}}};
}

ExperimentOutput gap_rate(const Json& c) {
  ExperimentOutput out;
  const Architecture arch = arch_of(c);
  const double r = c.at("radius").get<double>();
  const auto grid = grid_of(c.at("n_grid"));
  const long trials = c.at("trials").get<long>();
  const auto q = parse_gap_quantity(c.at("quantity").get<std::string>());
  const Teacher teacher = teacher_of(c, arch, r);
  const SamplerSpec sampler = sampler_of(c, arch.input_dim());

  GapBudget budget;
  budget.probes = c.at("probes").get<int>();
  budget.ascent = c.at("ascent").get<bool>();
  budget.ascent_top = c.at("ascent_top").get<int>();
  budget.ascent_steps = c.at("ascent_steps").get<int>();
  budget.boundary_fraction = c.at("boundary_fraction").get<double>();
  budget.seed = seed_of(c) + 1;  // the same probe set for every trial

  const bool exact = arch.activation() == Activation::Linear && teacher.noise == 0;
  const PopulationOracle oracle =
      exact ? PopulationOracle::exact_linear(teacher, sampler.tau)
            : PopulationOracle::monte_carlo(sampler, teacher, c.at("n_pop").get<long>(), 0xffffffffULL);
  const auto pop = oracle.surface(arch);

  out.table.header = {"n", "median_gap", "q25", "q75", "boundary_share"};
  std::vector<double> medians;
  Json rows = Json::array();
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const long n = grid[gi];
    std::vector<double> gaps(static_cast<std::size_t>(trials));
    std::vector<char> boundary(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](long t) {
      const Dataset data = make_dataset(sampler, teacher, n, trial_id(gi, t));
      const SampleRisk emp(arch, data);
      const auto est = sup_gap(emp, *pop, r, q, budget);
      gaps[static_cast<std::size_t>(t)] = est.sup_gap;
      boundary[static_cast<std::size_t>(t)] = est.argmax_on_boundary;
    });
    const double med = quantile(gaps, 0.5);
    const double share = static_cast<double>(std::count(boundary.begin(), boundary.end(), 1)) / trials;
    medians.push_back(med);
    out.table.rows.push_back({n, med, quantile(gaps, 0.25), quantile(gaps, 0.75), share});
    rows.push_back({{"n", n}, {"median_gap", med}, {"q25", quantile(gaps, 0.25)}, {"q75", quantile(gaps, 0.75)},
                    {"argmax_boundary_share", share}, {"gaps", gaps}});
  }
  const RateFit fit = fit_rate(grid, medians);
  out.result = {{"quantity", to_string(q)},
                {"oracle", to_string(oracle.kind())},
                {"method", to_string(budget.ascent ? GapMethod::NetSampleWithAscent : GapMethod::NetSample)},
                {"sup_is_lower_estimate", true},
                {"rows", rows},
                {"fit", {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"grid", fit.grid},
                         {"excluded", fit.excluded}}}};
  out.assertions.push_back(
      check_in("log-log slope of median sup gap", fit.slope, thr(c, "slope_min"), thr(c, "slope_max")));
  if (q == GapQuantity::Loss) {
    // gap * sqrt(n / (d ln(nl))) should stay within a constant band.
    std::vector<double> scaled;
    const double d = arch.weight_dim(), l = arch.depth();
    for (std::size_t i = 0; i < grid.size(); ++i)
      scaled.push_back(medians[i] * std::sqrt(grid[i] / (d * std::log(grid[i] * l))));
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    const double band = *lo > 0 ? *hi / *lo : INFINITY;
    out.result["rate_band"] = band;
    out.assertions.push_back(check_le("median gap * sqrt(n / (d ln nl)) band ratio", band, thr(c, "rate_band")));
  }
  return out;
}

// ---------------------------------------------------------------------------
// stationary-pair

Json stationary_pair_defaults() {
  return {{"experiment", "stationary-pair"},
          {"arch", "1,2,1"},
          {"activation", "sigmoid"},
          {"radius", 5.0},
          {"tau", 1.0},
          {"law", "gaussian"},
          {"teacher", {{"weights", {-0.2, -3.9, -2.9, 2.7}}, {"noise", 0.01}}},
          {"n_grid", {256, 1024, 4096}},
          {"trials", 10},
          {"n_pop", 65536},
          {"zeta", 1e-5},
          {"match_radius", 0.5},
          {"tol", 1e-9},
          {"max_iters", 100},
          {"seed", 7},
          {"constants", Json::object()},
          {"thresholds", {{"pair_fraction", 1.0}}}};
}

ExperimentOutput stationary_pair(const Json& c) {
  ExperimentOutput out;
  const Architecture arch = arch_of(c);
  const double r = c.at("radius").get<double>(), zeta = c.at("zeta").get<double>();
  const double match = c.at("match_radius").get<double>();
  const auto grid = grid_of(c.at("n_grid"));
  const long trials = c.at("trials").get<long>();
  const Teacher teacher = teacher_of(c, arch, r);
  const SamplerSpec sampler = sampler_of(c, arch.input_dim());

  StationaryOptions opt;
  opt.zeta = zeta;
  opt.solver.tol = c.at("tol").get<double>();
  opt.solver.max_iters = c.at("max_iters").get<int>();

  const auto oracle = PopulationOracle::monte_carlo(sampler, teacher, c.at("n_pop").get<long>(), 0xffffffffULL);
  const auto pop_surface = oracle.surface(arch);
  const auto pop = find_stationary(*pop_surface, {teacher.weights}, opt, Source::Population);
  if (pop.records.empty()) throw std::runtime_error("population search did not converge: " + pop.diagnostics[0].reason);
  const W& start = pop.records.front().w;

  BoundConfig bc;
  bc.arch = arch;
  bc.r = r;
  bc.tau = sampler.tau;
  for (auto& [k, v] : c.at("constants").items()) bc.constants.set(k, v.get<double>(), true);
  bc.constants.set("zeta", zeta);

  out.table.header = {"n",           "trial", "paired", "distance", "index_empirical", "index_population",
                      "min_abs_eig", "bound", "note"};
  Json rows = Json::array();
  std::vector<double> med_dist;
  bool all_equal = true;
  double worst_fraction = 1;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const long n = grid[gi];
    bc.n = n;
    const double bound = stationary_distance_bound(bc, Activation::Sigmoid);
    std::vector<PairingResult> res(static_cast<std::size_t>(trials));
    std::vector<std::string> notes(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](long t) {
      const Dataset data = make_dataset(sampler, teacher, n, trial_id(gi, t));
      const SampleRisk emp(arch, data);
      const auto found = find_stationary(emp, {start}, opt, Source::Empirical);
      const auto T = static_cast<std::size_t>(t);
      res[T] = pair_points(found.records, pop.records, zeta, match, bound);
      if (found.records.empty()) {
        notes[T] = "solver: " + found.diagnostics.front().reason;
      } else if (res[T].pairs.empty()) {
        notes[T] = "nearest stationary point at distance " +
                   std::to_string((found.records.front().w.flatten() - start.flatten()).norm());
      }
    });
    std::vector<double> dist;
    long paired = 0;
    for (long t = 0; t < trials; ++t) {
      const auto& p = res[static_cast<std::size_t>(t)];
      all_equal = all_equal && p.indices_agree();
      for (const auto& pr : p.pairs) {
        if (!pr.both_nondegenerate) all_equal = false;
        dist.push_back(pr.distance);
        out.table.rows.push_back({n, t, true, pr.distance, pr.empirical.index(), pr.population.index(),
                                  pr.empirical.info.min_abs, bound, ""});
      }
      if (p.pairs.empty())
        out.table.rows.push_back(
            {n, t, false, nullptr, nullptr, nullptr, nullptr, bound, notes[static_cast<std::size_t>(t)]});
      paired += !p.pairs.empty();
    }
    const double frac = static_cast<double>(paired) / trials;
    worst_fraction = std::min(worst_fraction, frac);
    const double md = dist.empty() ? NAN : quantile(dist, 0.5);
    med_dist.push_back(md);
    rows.push_back({{"n", n}, {"paired_fraction", frac}, {"median_distance", md}, {"distance_bound", bound},
                    {"distances", dist}});
  }
  const auto& pr = pop.records.front();
  out.result = {{"population",
                 {{"w", to_json(pr.w)}, {"grad_norm", pr.grad_norm}, {"spectrum", to_json(pr.spectrum)},
                  {"index", pr.index()}, {"degenerate", pr.degenerate()}, {"on_boundary", pr.on_boundary}}},
                {"rows", rows},
                {"bound_constants_calibrated", !c.at("constants").empty()}};
  out.assertions.push_back(
      {"every trial pairs its empirical minimiser", worst_fraction >= thr(c, "pair_fraction"), worst_fraction,
       thr(c, "pair_fraction"), "minimum over n of the paired fraction"});
  out.assertions.push_back(check_true("paired points are non-degenerate with equal index", all_equal));
  out.assertions.push_back({"median distance decreases from smallest to largest n",
                            med_dist.back() < med_dist.front(), med_dist.back(), med_dist.front(),
                            "median at largest n versus smallest n"});
  return out;
}

// ---------------------------------------------------------------------------
// loo-stability

Json loo_stability_defaults() {
  return {{"experiment", "loo-stability"},
          {"arch", "1,2,1"},
          {"activation", "sigmoid"},
          {"radius", 5.0},
          {"tau", 1.0},
          {"law", "gaussian"},
          {"teacher", {{"weights", {-0.2, -3.9, -2.9, 2.7}}, {"noise", 0.1}}},
          {"n", 64},
          {"trials", 200},
          {"n_pop", 4096},
          {"variant", "replace-one"},
          {"solver", "constrained"},
          {"tol", 1e-10},
          {"max_iters", 100},
          {"seed", 9},
          {"thresholds", {{"se_multiple", 2.0}, {"max_failed_fraction", 0.1}}}};
}

ExperimentOutput loo_stability_exp(const Json& c) {
  ExperimentOutput out;
  StabilityConfig sc;
  sc.arch = arch_of(c);
  const double r = c.at("radius").get<double>();
  sc.teacher = teacher_of(c, sc.arch, r);
  sc.sampler = sampler_of(c, sc.arch.input_dim());
  sc.n = c.at("n").get<long>();
  sc.trials = c.at("trials").get<int>();
  sc.n_pop = c.at("n_pop").get<long>();
  sc.start = sc.teacher.weights;
  sc.solver.tol = c.at("tol").get<double>();
  sc.solver.max_iters = c.at("max_iters").get<int>();
  const auto solver = c.at("solver").get<std::string>();
  if (solver == "constrained")
    sc.solver.mode = SolverMode::Constrained;
  else if (solver == "descent")
    sc.solver.mode = SolverMode::Descent;
  else
    throw std::invalid_argument("solver must be constrained or descent");
  const auto variant = c.at("variant").get<std::string>();
  if (variant == "replace-one")
    sc.variant = StabilityVariant::ReplaceOne;
  else if (variant == "leave-out")
    sc.variant = StabilityVariant::LeaveOut;
  else
    throw std::invalid_argument("variant must be replace-one or leave-out");

  const auto res = loo_stability(sc);
  const double diff = std::abs(res.stability - res.generalization);
  out.result = {{"variant", variant},
                {"stability", res.stability},
                {"stability_se", res.stability_se},
                {"generalization", res.generalization},
                {"generalization_se", res.generalization_se},
                {"combined_se", res.combined_se},
                {"abs_difference", diff},
                {"trials_used", res.trials_used},
                {"trials_failed", res.trials_failed}};
  out.table.header = {"trial", "stability", "generalization"};
  for (std::size_t k = 0; k < res.per_trial_stability.size(); ++k)
    out.table.rows.push_back({k, res.per_trial_stability[k], res.per_trial_generalization[k]});
  const double bound = thr(c, "se_multiple") * res.combined_se;
  out.assertions.push_back(check_le("|stability - generalization| <= k * combined SE", diff, bound));
  out.assertions.push_back(check_le("fraction of trials with a failed fit",
                                    static_cast<double>(res.trials_failed) / sc.trials, thr(c, "max_failed_fraction")));
  return out;
}

// ---------------------------------------------------------------------------
// degenerate-audit

Json degenerate_audit_defaults() {
  return {{"experiment", "degenerate-audit"},
          {"arch", "2,2,2"},
          {"activation", "linear"},
          {"radius", 3.0},
          {"tau", 1.0},
          {"law", "rademacher"},
          {"angle", 0.3},
          {"n_grid", {256, 4096}},
          {"trials", 20},
          {"zero_checks", 20},
          {"seed", 13},
          {"thresholds", {{"population_grad", 1e-12}}}};
}

ExperimentOutput degenerate_audit(const Json& c) {
  ExperimentOutput out;
  const Architecture arch = arch_of(c);
  if (arch.dims() != std::vector<int>{2, 2, 2} || arch.activation() != Activation::Linear)
    throw std::invalid_argument("degenerate-audit is defined for the linear 2,2,2 network");
  const double r = c.at("radius").get<double>(), th = c.at("angle").get<double>();
  const auto grid = grid_of(c.at("n_grid"));
  const long trials = c.at("trials").get<long>();
  const SamplerSpec sampler = sampler_of(c, 2);

  // Teacher map T = Q diag(2, 1) Q^T realised as W1 = T, W2 = I.
  Eigen::Matrix2d Q;
  Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Eigen::Matrix2d T = Q * Eigen::Vector2d(2, 1).asDiagonal() * Q.transpose();
  Teacher teacher{arch, W::zeros(arch, r), 0};
  teacher.weights.W(1) = T;
  teacher.weights.W(2) = Eigen::Matrix2d::Identity();

  // Saddle B = 2 q1 q1^T: W1 = a e1 q1^T, W2 = (2/a) q1 e1^T.
  const double a = std::sqrt(2.0);
  const Eigen::Vector2d q1 = Q.col(0), e1(1, 0);
  W point = W::zeros(arch, r);
  point.W(1) = a * e1 * q1.transpose();
  point.W(2) = (2 / a) * q1 * e1.transpose();

  const auto oracle = PopulationOracle::exact_linear(teacher, sampler.tau);
  const auto pop = oracle.surface(arch);
  const auto rec = describe_point(*pop, point, 1e-3, Source::Population);

  // grad J_n(0) vanishes identically.
  long nonzero = 0;
  for (long k = 0; k < c.at("zero_checks").get<long>(); ++k) {
    SplitMix64 g(seed_of(c), 0x7a65726fULL, static_cast<std::uint64_t>(k));
    std::vector<int> dims;
    const int l = 2 + static_cast<int>(g() % 3);
    for (int j = 0; j <= l; ++j) dims.push_back(1 + static_cast<int>(g() % 5));
    const Architecture za(dims, Activation::Linear);
    Teacher zt{za, random_point(za, 1.0, g, false), 0};
    SamplerSpec zs{InputLaw::IIDGaussian, 1.0, dims.front(), seed_of(c) + static_cast<std::uint64_t>(k)};
    const Dataset data = make_dataset(zs, zt, 32);
    const Eigen::VectorXd grad0 = empirical_gradient(za, W::zeros(za, 1.0), data);
    nonzero += (grad0.array() != 0.0).count() > 0;
  }

  const auto rows = degenerate_gradient_audit(arch, point, sampler, teacher, grid, static_cast<int>(trials));
  out.table.header = {"n", "median_grad_norm", "q25", "q75"};
  Json jr = Json::array();
  for (const auto& row : rows) {
    out.table.rows.push_back({row.n, row.median, row.q25, row.q75});
    jr.push_back({{"n", row.n}, {"median", row.median}, {"q25", row.q25}, {"q75", row.q75},
                  {"grad_norms", row.grad_norms}});
  }
  out.result = {{"point", to_json(point)},
                {"population_grad_norm", rec.grad_norm},
                {"population_spectrum", to_json(rec.spectrum)},
                {"population_degenerate", rec.degenerate()},
                {"zero_point_nonzero_gradients", nonzero},
                {"rows", jr}};
  out.assertions.push_back(check_le("population gradient vanishes at the audited point", rec.grad_norm,
                                    thr(c, "population_grad")));
  out.assertions.push_back(check_true("audited point is degenerate", rec.degenerate()));
  out.assertions.push_back(check_le("grad J_n(0) == 0 exactly", static_cast<double>(nonzero), 0));
  out.assertions.push_back({"median ||grad J_n|| decreases from smallest to largest n",
                            rows.back().median < rows.front().median, rows.back().median, rows.front().median,
                            "median at largest n versus smallest n"});
  return out;
}

// ---------------------------------------------------------------------------
// tail

Json tail_defaults() {
  return {{"experiment", "tail"},
          {"arch", "2,3,2"},
          {"activation", "linear"},
          {"radius", 1.0},
          {"tau", 1.0},
          {"law", "rademacher"},
          {"teacher", {{"seed", 17}, {"scale", 0.8}}},
          {"point_seed", 19},
          {"n_grid", {16, 64, 256, 1024}},
          {"t", 0.005},
          {"trials", 1000},
          {"n_pop", 65536},
          {"seed", 21},
          {"thresholds", {{"max_inversions", 1}}}};
}

ExperimentOutput tail(const Json& c) {
  ExperimentOutput out;
  const Architecture arch = arch_of(c);
  const double r = c.at("radius").get<double>();
  const Teacher teacher = teacher_of(c, arch, r);
  const SamplerSpec sampler = sampler_of(c, arch.input_dim());
  SplitMix64 g(c.at("point_seed").get<std::uint64_t>(), 0, 0);
  const W w = random_point(arch, r, g, false);
  const bool exact = arch.activation() == Activation::Linear && teacher.noise == 0;
  const auto oracle = exact ? PopulationOracle::exact_linear(teacher, sampler.tau)
                            : PopulationOracle::monte_carlo(sampler, teacher, c.at("n_pop").get<long>(), 0xffffffffULL);
  const auto rows = tail_experiment(arch, w, sampler, teacher, oracle, grid_of(c.at("n_grid")),
                                    c.at("t").get<double>(), c.at("trials").get<int>());
  out.table.header = {"n", "trials", "exceed", "fraction", "ci_low", "ci_high"};
  Json jr = Json::array();
  long inversions = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (i > 0 && row.fraction > rows[i - 1].fraction) ++inversions;
    out.table.rows.push_back({row.n, row.trials, row.exceed, row.fraction, row.ci_low, row.ci_high});
    jr.push_back({{"n", row.n}, {"fraction", row.fraction}, {"ci_low", row.ci_low}, {"ci_high", row.ci_high}});
  }
  // Spread of f(w, x) at the probe point, for reading t against the noise scale.
  const Dataset ref = make_dataset(sampler, teacher, 4096, 0xfffffffeULL);
  std::vector<double> f(static_cast<std::size_t>(ref.size()));
  for (long i = 0; i < ref.size(); ++i)
    f[static_cast<std::size_t>(i)] = loss(forward<double>(arch, w, ref.x(i), ref.y(i)));
  const Eigen::Map<const Eigen::ArrayXd> fa(f.data(), static_cast<Eigen::Index>(f.size()));
  const double sd = std::sqrt((fa - fa.mean()).square().sum() / static_cast<double>(f.size() - 1));
  out.result = {{"oracle", to_string(oracle.kind())},
                {"population_risk", population_risk(oracle, arch, w).value},
                {"loss_sd", sd},
                {"rows", jr},
                {"inversions", inversions}};
  out.assertions.push_back(
      check_le("exceedance nonincreasing in n (inversions)", static_cast<double>(inversions), thr(c, "max_inversions")));
  return out;
}

// ---------------------------------------------------------------------------
// net-norms

Json net_norms_defaults() {
  return {{"experiment", "net-norms"}, {"cases", 100}, {"epsilon", 0.25}, {"max_dim", 5}, {"seed", 23},
          {"thresholds", {{"violations", 0}}}};
}

ExperimentOutput net_norms(const Json& c) {
  ExperimentOutput out;
  const long cases = c.at("cases").get<long>();
  const double eps = c.at("epsilon").get<double>();
  const int max_dim = c.at("max_dim").get<int>();
  NetOptions opt;
  opt.seed = seed_of(c);
  out.table.header = {"case_id", "kind", "dim", "true_norm", "estimate", "ratio", "pass"};
  constexpr double tol = 1e-12;
  long viol = 0;
  for (long k = 0; k < cases; ++k) {
    SplitMix64 g(seed_of(c), 0x6e6574ULL, static_cast<std::uint64_t>(k));
    const int dim = 1 + static_cast<int>(g() % static_cast<std::uint64_t>(max_dim));
    const Eigen::VectorXd v = gaussian_vector(g, dim);
    const double nv = v.norm(), ev = net_vector_norm(v, eps, opt);
    const bool okv = ev >= nv * (1 - tol) && ev <= nv / (1 - eps) * (1 + tol);
    Eigen::MatrixXd X = gaussian_matrix(g, dim, dim);
    X = (0.5 * (X + X.transpose())).eval();
    const Eigen::VectorXd spec = spectrum(X);
    const double nx = std::max(std::abs(spec(0)), std::abs(spec(dim - 1)));
    const double ex = net_operator_norm(X, eps, opt);
    const bool okx = ex >= nx * (1 - tol) && ex <= nx / (1 - 2 * eps) * (1 + tol);
    viol += !okv + !okx;
    out.table.rows.push_back({k, "vector", dim, nv, ev, ev / nv, okv});
    out.table.rows.push_back({k, "operator", dim, nx, ex, ex / nx, okx});
  }
  out.result = {{"cases", cases}, {"epsilon", eps}, {"violations", viol}};
  out.assertions.push_back(check_le("net estimates within [norm, norm / (1 - eps)] and [norm, norm / (1 - 2 eps)]",
                                    static_cast<double>(viol), thr(c, "violations")));
  return out;
}

// ---------------------------------------------------------------------------
// bounds

Json bounds_defaults() {
  return {{"experiment", "bounds"},
          {"arch", "2,4,3"},
          {"activation", "linear"},
          {"radius", 1.0},
          {"tau", 1.0},
          {"n", 1024},
          {"eps_fail", 0.05},
          {"r_x", 0.0},
          {"zeta", 1.0},
          {"constants", Json::object()},
          {"sweep", ""},
          {"thresholds", {{"violations", 0}}}};
}

BoundConfig bound_config_of(const Json& c) {
  BoundConfig bc;
  bc.arch = arch_of(c);
  bc.r = c.at("radius").get<double>();
  bc.tau = c.at("tau").get<double>();
  bc.n = c.at("n").get<long>();
  bc.eps_fail = c.at("eps_fail").get<double>();
  bc.r_x = c.at("r_x").get<double>();
  for (auto& [k, v] : c.at("constants").items()) bc.constants.set(k, v.get<double>(), true);
  bc.constants.set("zeta", c.at("zeta").get<double>());
  return bc;
}

std::vector<double> bound_values(const BoundConfig& bc) {
  return {epsilon_linear(bc),
          epsilon_sigmoid(bc),
          grad_gap_bound(bc, Activation::Linear),
          grad_gap_bound(bc, Activation::Sigmoid),
          hess_gap_bound(bc, Activation::Linear),
          hess_gap_bound(bc, Activation::Sigmoid),
          stationary_distance_bound(bc, Activation::Linear),
          stationary_distance_bound(bc, Activation::Sigmoid)};
}

const std::vector<std::string>& bound_names() {
  static const std::vector<std::string> n{"eps_l",           "eps_n",           "grad_gap_linear",
                                          "grad_gap_sigmoid", "hess_gap_linear", "hess_gap_sigmoid",
                                          "dist_linear",      "dist_sigmoid"};
  return n;
}

/// Monotonicity grid: decreasing in n over [8, 10^6], nondecreasing in r
/// (r >= 1), l and width. Returns the list of violations.
std::vector<std::string> bound_monotonicity_violations() {
  std::vector<std::string> bad;
  auto cfg = [](std::vector<int> dims, double r, long n) {
    BoundConfig bc;
    bc.arch = Architecture(std::move(dims), Activation::Linear);
    bc.r = r;
    bc.n = n;
    return bc;
  };
  const auto& names = bound_names();
  for (double r : {1.0, 2.0, 4.0, 6.0}) {
    for (int w : {1, 3, 6}) {
      std::vector<double> prev;
      for (long n = 8; n <= 1000000; n *= 2) {
        const auto v = bound_values(cfg({w, w + 1, w}, r, n));
        for (std::size_t i = 0; !prev.empty() && i < v.size(); ++i)
          if (!(v[i] < prev[i]))
            bad.push_back(names[i] + " not decreasing in n at n=" + std::to_string(n));
        prev = v;
      }
    }
  }
  for (long n : {8L, 1000L, 1000000L}) {
    for (int w : {1, 3}) {
      std::vector<double> prev;
      for (double r : {1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 8.0}) {
        const auto v = bound_values(cfg({w, w, w}, r, n));
        for (std::size_t i = 0; !prev.empty() && i < v.size(); ++i)
          if (v[i] < prev[i]) bad.push_back(names[i] + " decreasing in r at r=" + std::to_string(r));
        prev = v;
      }
    }
    for (double r : {1.0, 3.0, 5.0}) {
      std::vector<double> prev;
      for (int l = 2; l <= 6; ++l) {
        const auto v = bound_values(cfg(std::vector<int>(static_cast<std::size_t>(l + 1), 2), r, n));
        for (std::size_t i = 0; !prev.empty() && i < v.size(); ++i)
          if (v[i] < prev[i]) bad.push_back(names[i] + " decreasing in l at l=" + std::to_string(l));
        prev = v;
      }
      prev.clear();
      for (int w = 1; w <= 6; ++w) {
        const auto v = bound_values(cfg({w, w, w}, r, n));
        for (std::size_t i = 0; !prev.empty() && i < v.size(); ++i)
          if (v[i] < prev[i]) bad.push_back(names[i] + " decreasing in width at w=" + std::to_string(w));
        prev = v;
      }
    }
  }
  return bad;
}

ExperimentOutput bounds_exp(const Json& c) {
  ExperimentOutput out;
  const BoundConfig bc = bound_config_of(c);
  const BoundReport b = bound_report(bc);
  Json thresholds = Json::object();
  for (const auto& [k, v] : b.thresholds) thresholds[claim_name(k)] = v;
  Json constants = Json::object();
  for (const auto& [k, v] : bc.constants.values) constants[k] = v;
  out.result = {{"derived",
                 {{"d", b.d},          {"l", b.l},           {"c_d", b.c_d},         {"c_r", b.c_r},
                  {"c_y", b.c_y},      {"width_factor", b.width_factor}, {"omega_f", b.omega_f},
                  {"omega_g", b.omega_g}, {"omega_h", b.omega_h}, {"alpha_g", b.alpha_g}, {"alpha_l", b.alpha_l},
                  {"alpha", b.alpha},  {"varsigma", b.varsigma}, {"beta", b.beta}}},
                {"bounds",
                 {{"eps_l", b.eps_l},
                  {"eps_n", b.eps_n},
                  {"grad_gap_linear", b.grad_gap_linear},
                  {"grad_gap_sigmoid", b.grad_gap_sigmoid},
                  {"hess_gap_linear", b.hess_gap_linear},
                  {"hess_gap_sigmoid", b.hess_gap_sigmoid},
                  {"dist_linear", b.dist_linear},
                  {"dist_sigmoid", b.dist_sigmoid}}},
                {"thresholds", thresholds},
                {"constants", constants},
                {"calibrated", bc.constants.calibrated},
                {"notes", b.notes}};
  const auto sweep = c.at("sweep").get<std::string>();
  if (!sweep.empty()) {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos || sweep.substr(0, eq) != "n") throw std::invalid_argument("sweep must be n=<range>");
    out.table.header = {"n"};
    for (const auto& n : bound_names()) out.table.header.push_back(n);
    for (long n : parse_grid(sweep.substr(eq + 1))) {
      BoundConfig s = bc;
      s.n = n;
      std::vector<Json> row{n};
      for (double v : bound_values(s)) row.emplace_back(v);
      out.table.rows.push_back(std::move(row));
    }
  }
  const auto bad = bound_monotonicity_violations();
  out.result["monotonicity_violations"] = bad;
  out.assertions.push_back(check_le("monotonicity grid in n, r, l, width", static_cast<double>(bad.size()),
                                    thr(c, "violations")));
  const double zeta = bc.constants["zeta"];
  const double lin = std::abs(b.dist_linear * zeta / 2 - b.grad_gap_linear) / b.grad_gap_linear;
  const double sig = std::abs(b.dist_sigmoid * zeta / 2 - b.grad_gap_sigmoid) / b.grad_gap_sigmoid;
  out.assertions.push_back(check_le("distance bound * zeta / 2 == gradient gap", std::max(lin, sig), 1e-15));
  return out;
}

}  // namespace

const std::vector<ExperimentDef>& registry() {
  static const std::vector<ExperimentDef> defs{
      {"grad-check", grad_check_defaults, grad_check},
      {"hess-check", hess_check_defaults, hess_check},
      {"hand-check", hand_check_defaults, hand_check},
      {"bounds", bounds_defaults, bounds_exp},
      {"gap-rate", gap_rate_defaults, gap_rate},
      {"stationary-pair", stationary_pair_defaults, stationary_pair},
      {"loo-stability", loo_stability_defaults, loo_stability_exp},
      {"norm-audit", norm_audit_defaults, norm_audit},
      {"tail", tail_defaults, tail},
      {"net-norms", net_norms_defaults, net_norms},
      {"degenerate-audit", degenerate_audit_defaults, degenerate_audit},
  };
  return defs;
}

}  // namespace lp::detail
