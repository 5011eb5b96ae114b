#include "lp/risk.hpp"
#include "lp/parallel.hpp"
#include "lp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace lp {

unsigned default_threads() {
  if (const char* env = std::getenv("LP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void require_nonempty(const Dataset& data) {
  if (data.size() < 1) throw std::invalid_argument("dataset is empty");
}

ForwardTrace<double> trace_of(const Architecture& arch, const WeightPoint<double>& w, const Dataset& data, long i) {
  return forward<double>(arch, w, data.inputs.row(i).transpose(), data.targets.row(i).transpose());
}

double sample_loss(const Architecture& arch, const WeightPoint<double>& w, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  return loss(forward<double>(arch, w, x, y));
}

/// Products P_k = B_{k:1} (P_0 = I) and C_k = B_{l:k+1} (C_l = I).
struct LinearChains {
  std::vector<Eigen::MatrixXd> P, C;
};

LinearChains linear_chains(const Architecture& arch, const WeightPoint<double>& w) {
  const int l = arch.depth();
  LinearChains c;
  c.P.resize(static_cast<std::size_t>(l + 1));
  c.C.resize(static_cast<std::size_t>(l + 1));
  c.P[0] = Eigen::MatrixXd::Identity(arch.input_dim(), arch.input_dim());
  for (int k = 1; k <= l; ++k) c.P[static_cast<std::size_t>(k)] = w.W(k) * c.P[static_cast<std::size_t>(k - 1)];
  c.C[static_cast<std::size_t>(l)] = Eigen::MatrixXd::Identity(arch.output_dim(), arch.output_dim());
  for (int k = l; k >= 2; --k) c.C[static_cast<std::size_t>(k - 1)] = c.C[static_cast<std::size_t>(k)] * w.W(k);
  return c;
}

void require_linear(const Architecture& arch) {
  if (arch.activation() != Activation::Linear) throw std::invalid_argument("moment form needs a linear network");
}

void check_moments(const Architecture& arch, const Moments& m) {
  if (m.Sxx.rows() != arch.input_dim() || m.Sxx.cols() != arch.input_dim() || m.Sxy.rows() != arch.input_dim() ||
      m.Sxy.cols() != arch.output_dim())
    throw ShapeError("moments do not match the architecture's input/output widths");
}

}  // namespace

Moments sample_moments(const Dataset& data) {
  require_nonempty(data);
  const double n = static_cast<double>(data.size());
  Moments m;
  m.Sxx = pairwise_sum<Eigen::MatrixXd>(0, data.size(), [&](long i) -> Eigen::MatrixXd {
            return data.inputs.row(i).transpose() * data.inputs.row(i);
          }) / n;
  m.Sxy = pairwise_sum<Eigen::MatrixXd>(0, data.size(), [&](long i) -> Eigen::MatrixXd {
            return data.inputs.row(i).transpose() * data.targets.row(i);
          }) / n;
  m.Syy = pairwise_sum<double>(0, data.size(), [&](long i) { return data.targets.row(i).squaredNorm(); }) / n;
  return m;
}

double empirical_risk(const Architecture& arch, const WeightPoint<double>& w, const Dataset& data) {
  require_nonempty(data);
  return pairwise_sum<double>(0, data.size(), [&](long i) { return loss(trace_of(arch, w, data, i)); }) /
         static_cast<double>(data.size());
}

Eigen::VectorXd empirical_gradient(const Architecture& arch, const WeightPoint<double>& w, const Dataset& data) {
  require_nonempty(data);
  return pairwise_sum<Eigen::VectorXd>(0, data.size(),
                                       [&](long i) { return gradient(arch, trace_of(arch, w, data, i), w); }) /
         static_cast<double>(data.size());
}

Eigen::MatrixXd empirical_hessian(const Architecture& arch, const WeightPoint<double>& w, const Dataset& data) {
  require_nonempty(data);
  return pairwise_sum<Eigen::MatrixXd>(0, data.size(),
                                       [&](long i) { return hessian(arch, trace_of(arch, w, data, i), w); }) /
         static_cast<double>(data.size());
}

double moment_risk(const Architecture& arch, const WeightPoint<double>& w, const Moments& m) {
  require_linear(arch);
  check_conforms(arch, w);
  check_moments(arch, m);
  const auto c = linear_chains(arch, w);
  const Eigen::MatrixXd& B = c.P.back();
  return 0.5 * (B * m.Sxx * B.transpose()).trace() - (B * m.Sxy).trace() + 0.5 * m.Syy;
}

Eigen::VectorXd moment_gradient(const Architecture& arch, const WeightPoint<double>& w, const Moments& m) {
  require_linear(arch);
  check_conforms(arch, w);
  check_moments(arch, m);
  const auto c = linear_chains(arch, w);
  const Eigen::MatrixXd E = c.P.back() * m.Sxx - m.Sxy.transpose();  // E[e x^T]
  Eigen::VectorXd g(arch.weight_dim());
  for (int j = 1; j <= arch.depth(); ++j) {
    const Eigen::MatrixXd G = c.C[static_cast<std::size_t>(j)].transpose() * E *
                              c.P[static_cast<std::size_t>(j - 1)].transpose();
    g.segment(arch.layer_offset(j), arch.layer_size(j)) = G.reshaped();
  }
  return g;
}

Eigen::MatrixXd moment_hessian(const Architecture& arch, const WeightPoint<double>& w, const Moments& m) {
  require_linear(arch);
  check_conforms(arch, w);
  check_moments(arch, m);
  const int l = arch.depth();
  const auto c = linear_chains(arch, w);
  const Eigen::MatrixXd E = c.P.back() * m.Sxx - m.Sxy.transpose();
  const auto at = [](const std::vector<Eigen::MatrixXd>& v, int k) -> const Eigen::MatrixXd& {
    return v[static_cast<std::size_t>(k)];
  };
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(arch.weight_dim(), arch.weight_dim());
  for (int j = 1; j <= l; ++j) {
    for (int i = j; i <= l; ++i) {
      Eigen::MatrixXd block =
          kron(at(c.P, j - 1) * m.Sxx * at(c.P, i - 1).transpose(), at(c.C, j).transpose() * at(c.C, i));
      if (i > j) {
        // E[a_{j-1} (C_i^T e)^T] and M = B_{i-1:j+1}
        const Eigen::MatrixXd K = at(c.P, j - 1) * E.transpose() * at(c.C, i);
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(arch.width(j), arch.width(j));
        for (int k = j + 1; k <= i - 1; ++k) M = w.W(k) * M;
        const int dj = arch.width(j), di = arch.width(i);
        for (int beta = 0; beta < arch.width(j - 1); ++beta)
          for (int alpha = 0; alpha < dj; ++alpha)
            for (int gamma = 0; gamma < arch.width(i - 1); ++gamma)
              for (int delta = 0; delta < di; ++delta)
                block(beta * dj + alpha, gamma * di + delta) += K(beta, delta) * M(gamma, alpha);
      }
      H.block(arch.layer_offset(j), arch.layer_offset(i), arch.layer_size(j), arch.layer_size(i)) = block;
      if (i > j)
        H.block(arch.layer_offset(i), arch.layer_offset(j), arch.layer_size(i), arch.layer_size(j)) =
            block.transpose();
    }
  }
  return H;
}

// ---------------------------------------------------------------------------

SampleRisk::SampleRisk(Architecture arch, Dataset data, bool per_sample)
    : arch_(std::move(arch)), data_(std::move(data)) {
  require_nonempty(data_);
  if (data_.inputs.cols() != arch_.input_dim() || data_.targets.cols() != arch_.output_dim())
    throw ShapeError("dataset shape does not match architecture " + arch_.to_string());
  moments_form_ = !per_sample && arch_.activation() == Activation::Linear;
  if (moments_form_) moments_ = sample_moments(data_);
}

double SampleRisk::value(const WeightPoint<double>& w) const {
  return moments_form_ ? moment_risk(arch_, w, moments_) : empirical_risk(arch_, w, data_);
}

Eigen::VectorXd SampleRisk::gradient(const WeightPoint<double>& w) const {
  return moments_form_ ? moment_gradient(arch_, w, moments_) : empirical_gradient(arch_, w, data_);
}

Eigen::MatrixXd SampleRisk::hessian(const WeightPoint<double>& w) const {
  return moments_form_ ? moment_hessian(arch_, w, moments_) : empirical_hessian(arch_, w, data_);
}

double SampleRisk::value_stderr(const WeightPoint<double>& w) const {
  const long n = data_.size();
  if (n < 2) return 0;
  std::vector<double> f(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = loss(trace_of(arch_, w, data_, i));
  const double mean = pairwise_sum<double>(0, n, [&](long i) { return f[static_cast<std::size_t>(i)]; }) / n;
  const double ss = pairwise_sum<double>(0, n, [&](long i) {
    const double d = f[static_cast<std::size_t>(i)] - mean;
    return d * d;
  });
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

MomentRisk::MomentRisk(Architecture arch, Moments m) : arch_(std::move(arch)), m_(std::move(m)) {
  require_linear(arch_);
  check_moments(arch_, m_);
}

std::string to_string(OracleKind k) { return k == OracleKind::ExactLinear ? "exact-linear" : "monte-carlo"; }

PopulationOracle PopulationOracle::exact_linear(const Teacher& teacher, const Eigen::MatrixXd& sigma) {
  if (teacher.arch.activation() != Activation::Linear)
    throw std::invalid_argument("exact oracle needs a linear teacher");
  if (teacher.noise != 0) throw std::invalid_argument("exact oracle needs a noiseless teacher");
  const Eigen::MatrixXd T = teacher_map(teacher);
  if (sigma.rows() != T.cols() || sigma.cols() != T.cols()) throw ShapeError("covariance does not match d_0");
  PopulationOracle o;
  o.kind_ = OracleKind::ExactLinear;
  o.moments_.Sxx = sigma;
  o.moments_.Sxy = sigma * T.transpose();
  o.moments_.Syy = (T * sigma * T.transpose()).trace();
  return o;
}

PopulationOracle PopulationOracle::exact_linear(const Teacher& teacher, double tau) {
  const int d0 = teacher.arch.input_dim();
  return exact_linear(teacher, Eigen::MatrixXd(tau * tau * Eigen::MatrixXd::Identity(d0, d0)));
}

PopulationOracle PopulationOracle::monte_carlo(const SamplerSpec& sampler, const Teacher& teacher, long n_pop,
                                               std::uint64_t trial) {
  return from_sample(make_dataset(sampler, teacher, n_pop, trial));
}

PopulationOracle PopulationOracle::from_sample(Dataset sample) {
  require_nonempty(sample);
  PopulationOracle o;
  o.kind_ = OracleKind::MonteCarlo;
  o.sample_ = std::make_shared<const Dataset>(std::move(sample));
  return o;
}

std::unique_ptr<RiskSurface> PopulationOracle::surface(const Architecture& arch) const {
  if (kind_ == OracleKind::ExactLinear) {
    if (arch.activation() != Activation::Linear)
      throw std::invalid_argument("exact linear oracle cannot evaluate a sigmoid network");
    return std::make_unique<MomentRisk>(arch, moments_);
  }
  return std::make_unique<SampleRisk>(arch, *sample_);
}

Estimate population_risk(const PopulationOracle& oracle, const Architecture& arch, const WeightPoint<double>& w) {
  const auto s = oracle.surface(arch);
  return {s->value(w), s->value_stderr(w)};
}

// ---------------------------------------------------------------------------

std::string to_string(GapQuantity q) {
  switch (q) {
    case GapQuantity::Loss: return "loss";
    case GapQuantity::GradNorm: return "grad";
    case GapQuantity::HessOpNorm: return "hess";
  }
  return "?";
}

GapQuantity parse_gap_quantity(std::string_view name) {
  if (name == "loss") return GapQuantity::Loss;
  if (name == "grad") return GapQuantity::GradNorm;
  if (name == "hess") return GapQuantity::HessOpNorm;
  throw std::invalid_argument("unknown gap quantity '" + std::string(name) + "' (loss, grad, hess)");
}

std::string to_string(GapMethod m) { return m == GapMethod::NetSample ? "net-sample" : "net-sample+ascent"; }

std::vector<WeightPoint<double>> probe_points(const Architecture& arch, double radius, const GapBudget& budget) {
  if (budget.probes < 1) throw std::invalid_argument("gap probing needs at least one probe");
  const int boundary = static_cast<int>(std::lround(budget.boundary_fraction * budget.probes));
  std::vector<WeightPoint<double>> out;
  out.reserve(static_cast<std::size_t>(budget.probes));
  for (int k = 0; k < budget.probes; ++k) {
    SplitMix64 g(budget.seed, 0x70726f6265ULL, static_cast<std::uint64_t>(k));
    auto w = WeightPoint<double>::zeros(arch, radius);
    for (int j = 1; j <= arch.depth(); ++j) {
      const Eigen::VectorXd v = k < boundary ? Eigen::VectorXd(radius * uniform_sphere(g, arch.layer_size(j)))
                                             : uniform_ball(g, arch.layer_size(j), radius);
      w.W(j) = v.reshaped(arch.width(j), arch.width(j - 1));
    }
    out.push_back(std::move(w));
  }
  return out;
}

double gap_at(const RiskSurface& emp, const RiskSurface& pop, GapQuantity q, const WeightPoint<double>& w) {
  switch (q) {
    case GapQuantity::Loss: return std::abs(emp.value(w) - pop.value(w));
    case GapQuantity::GradNorm: return (emp.gradient(w) - pop.gradient(w)).norm();
    case GapQuantity::HessOpNorm: {
      const Eigen::VectorXd ev = spectrum(emp.hessian(w) - pop.hessian(w));
      return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    }
  }
  return 0;
}

namespace {

/// Ascent direction for the gap at w.
Eigen::VectorXd gap_direction(const RiskSurface& emp, const RiskSurface& pop, GapQuantity q,
                              const WeightPoint<double>& w) {
  const Architecture& arch = emp.arch();
  switch (q) {
    case GapQuantity::Loss: {
      const double s = emp.value(w) - pop.value(w) >= 0 ? 1.0 : -1.0;
      return s * (emp.gradient(w) - pop.gradient(w));
    }
    case GapQuantity::GradNorm: {
      const Eigen::VectorXd dg = emp.gradient(w) - pop.gradient(w);
      const double n = dg.norm();
      if (n == 0) return Eigen::VectorXd::Zero(dg.size());
      return (emp.hessian(w) - pop.hessian(w)) * dg / n;
    }
    case GapQuantity::HessOpNorm: {
      // Third derivatives are not available in closed form; difference the gap.
      const Eigen::VectorXd flat = w.flatten();
      return fd_gradient(
          [&](const Eigen::VectorXd& p) {
            return gap_at(emp, pop, q, WeightPoint<double>::from_flat(arch, p, w.radius));
          },
          flat, 1e-5);
    }
  }
  return {};
}

}  // namespace

GapEstimate sup_gap(const RiskSurface& emp, const RiskSurface& pop, double radius, GapQuantity q,
                    const GapBudget& budget) {
  const auto probes = probe_points(emp.arch(), radius, budget);
  std::vector<double> gaps(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) gaps[k] = gap_at(emp, pop, q, probes[k]);

  std::vector<std::size_t> order(probes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return gaps[a] > gaps[b]; });

  GapEstimate est;
  est.probes = budget.probes;
  est.sup_gap = gaps[order[0]];
  est.argmax = probes[order[0]];
  est.method = GapMethod::NetSample;

  if (budget.ascent && budget.ascent_steps > 0) {
    est.method = GapMethod::NetSampleWithAscent;
    const int top = std::min<int>(budget.ascent_top, static_cast<int>(probes.size()));
    for (int k = 0; k < top; ++k) {
      auto w = probes[order[static_cast<std::size_t>(k)]];
      double cur = gaps[order[static_cast<std::size_t>(k)]];
      double step = 0.1 * radius;
      for (int it = 0; it < budget.ascent_steps && step > 1e-8 * radius; ++it) {
        const Eigen::VectorXd dir = gap_direction(emp, pop, q, w);
        const double dn = dir.norm();
        if (!(dn > 0)) break;
        const auto cand =
            WeightPoint<double>::from_flat(emp.arch(), w.flatten() + (step / dn) * dir, radius).projected();
        const double val = gap_at(emp, pop, q, cand);
        if (val > cur) {
          w = cand;
          cur = val;
          step *= 1.5;
        } else {
          step *= 0.5;
        }
      }
      if (cur > est.sup_gap) {
        est.sup_gap = cur;
        est.argmax = w;
      }
    }
  }
  if (q == GapQuantity::Loss) est.stderr = pop.value_stderr(est.argmax);  // oracle-induced only
  est.argmax_on_boundary = est.argmax.on_boundary(1e-6);
  return est;
}

GapEstimate sup_gap(const Architecture& arch, double radius, const Dataset& data, const PopulationOracle& oracle,
                    GapQuantity q, const GapBudget& budget) {
  const SampleRisk emp(arch, data);
  const auto pop = oracle.surface(arch);
  return sup_gap(emp, *pop, radius, q, budget);
}

// ---------------------------------------------------------------------------

KktState kkt_state(const Architecture& arch, const WeightPoint<double>& w, const Eigen::VectorXd& grad) {
  KktState k;
  k.residual = grad;
  const double r2 = w.radius * w.radius;
  for (int j = 1; j <= arch.depth(); ++j) {
    const auto off = arch.layer_offset(j), size = arch.layer_size(j);
    const Eigen::Map<const Eigen::VectorXd> wj(w.W(j).data(), size);
    const double n2 = wj.squaredNorm(), inner = grad.segment(off, size).dot(wj);
    if (n2 < r2 * (1 - 1e-10) || inner >= 0) continue;
    k.active.push_back(j);
    k.multiplier.push_back(-inner / r2);
    k.residual.segment(off, size) -= inner / n2 * wj;
  }
  return k;
}

namespace {

/// Riemannian Newton on the active spheres; inactive layers move freely and
/// are projected back onto Omega.
SolverResult solve_constrained(const RiskSurface& risk, WeightPoint<double> start, const SolverOptions& opt) {
  const Architecture& arch = risk.arch();
  SolverResult res;
  res.w = start.projected();
  const double radius = start.radius;
  auto retract = [&](const Eigen::VectorXd& flat, const std::vector<int>& active) {
    auto w = WeightPoint<double>::from_flat(arch, flat, radius);
    for (int j : active) w.W(j) *= radius / w.W(j).norm();
    return w.projected();
  };
  double f = risk.value(res.w);
  Eigen::VectorXd g = risk.gradient(res.w);
  KktState k = kkt_state(arch, res.w, g);
  for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
    res.grad_norm = k.residual.norm();
    res.active_layers = static_cast<int>(k.active.size());
    if (res.grad_norm <= opt.tol) {
      res.converged = true;
      res.reason = "converged";
      return res;
    }
    const Eigen::Index d = arch.weight_dim();
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d), Hr = risk.hessian(res.w);
    Eigen::VectorXd curvature = Eigen::VectorXd::Zero(d);
    for (std::size_t a = 0; a < k.active.size(); ++a) {
      const int j = k.active[a];
      const auto off = arch.layer_offset(j), size = arch.layer_size(j);
      const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(res.w.W(j).data(), size).normalized();
      P.block(off, off, size, size) -= u * u.transpose();
      curvature.segment(off, size).setConstant(k.multiplier[a]);
    }
    Hr = P * Hr * P;
    Hr += P * curvature.asDiagonal() * P;
    Hr += Eigen::MatrixXd::Identity(d, d) - P;  // radial directions: identity, zero right-hand side
    const double mu = std::max(0.0, 1e-6 - spectrum(0.5 * (Hr + Hr.transpose()))(0));
    const Eigen::VectorXd p = -(Hr + mu * Eigen::MatrixXd::Identity(d, d)).ldlt().solve(k.residual);
    const double slope = k.residual.dot(p);
    const Eigen::VectorXd x = res.w.flatten();
    bool moved = false;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      auto cand = retract(x + alpha * p, k.active);
      const double fc = risk.value(cand);
      Eigen::VectorXd gc = risk.gradient(cand);
      KktState kc = kkt_state(arch, cand, gc);
      bool accept = fc <= f + 1e-4 * alpha * slope;
      if (!accept && fc <= f + 1e-12 * std::max(1.0, std::abs(f))) accept = kc.residual.norm() < 0.5 * res.grad_norm;
      if (accept) {
        res.w = std::move(cand);
        f = fc;
        g = std::move(gc);
        k = std::move(kc);
        moved = true;
        break;
      }
    }
    if (!moved) {
      res.converged = res.grad_norm <= opt.tol;
      res.reason = res.converged ? "converged" : "line search failed";
      return res;
    }
  }
  res.grad_norm = k.residual.norm();
  res.active_layers = static_cast<int>(k.active.size());
  res.converged = res.grad_norm <= opt.tol;
  res.reason = res.converged ? "converged" : "iteration limit";
  return res;
}

}  // namespace

SolverResult solve_stationary(const RiskSurface& risk, WeightPoint<double> start, const SolverOptions& opt) {
  if (!(opt.tol > 0)) throw std::invalid_argument("solver tolerance must be positive");
  const Architecture& arch = risk.arch();
  check_conforms(arch, start);
  if (opt.mode == SolverMode::Constrained) return solve_constrained(risk, std::move(start), opt);
  SolverResult res;
  res.w = opt.project ? start.projected() : start;
  const double radius = start.radius;
  auto make = [&](const Eigen::VectorXd& flat) {
    auto w = WeightPoint<double>::from_flat(arch, flat, radius);
    return opt.project ? w.projected() : w;
  };

  Eigen::VectorXd g = risk.gradient(res.w);
  double f = risk.value(res.w);
  double lm = -1;  // Levenberg-Marquardt damping, set on first use
  for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
    res.grad_norm = g.norm();
    if (res.grad_norm <= opt.tol) {
      res.converged = true;
      res.reason = "converged";
      return res;
    }
    const Eigen::MatrixXd H = risk.hessian(res.w);
    const Eigen::VectorXd x = res.w.flatten();
    bool moved = false;
    if (opt.mode == SolverMode::Descent) {
      const Eigen::VectorXd ev = spectrum(H);
      const double mu = std::max(0.0, 1e-6 - ev(0));
      const Eigen::MatrixXd Hs = H + mu * Eigen::MatrixXd::Identity(H.rows(), H.cols());
      const Eigen::VectorXd p = -Hs.ldlt().solve(g);
      const double slope = g.dot(p);
      for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
        auto cand = make(x + alpha * p);
        const double fc = risk.value(cand);
        bool accept = fc <= f + 1e-4 * alpha * slope;
        Eigen::VectorXd gc;
        if (!accept && fc <= f + 1e-12 * std::max(1.0, std::abs(f))) {
          // Near a minimiser the decrease drops below rounding; accept
          // steps that still shrink the gradient.
          gc = risk.gradient(cand);
          accept = gc.norm() < 0.5 * res.grad_norm;
        }
        if (accept) {
          res.w = std::move(cand);
          f = fc;
          g = gc.size() ? gc : risk.gradient(res.w);
          moved = true;
          break;
        }
      }
    } else {
      const Eigen::MatrixXd HtH = H.transpose() * H;
      if (lm < 0) lm = 1e-3 * std::max(1e-12, HtH.diagonal().maxCoeff());
      const Eigen::VectorXd Htg = H.transpose() * g;
      for (int tries = 0; tries < 40; ++tries) {
        const Eigen::MatrixXd A = HtH + lm * Eigen::MatrixXd::Identity(H.rows(), H.cols());
        const Eigen::VectorXd p = -A.ldlt().solve(Htg);
        auto cand = make(x + p);
        Eigen::VectorXd gc = risk.gradient(cand);
        if (gc.norm() < res.grad_norm) {
          res.w = std::move(cand);
          g = std::move(gc);
          f = risk.value(res.w);
          lm = std::max(1e-15, lm * 0.3);
          moved = true;
          break;
        }
        lm *= 10;
      }
    }
    if (!moved) {
      res.grad_norm = g.norm();
      res.converged = res.grad_norm <= opt.tol;
      res.reason = res.converged ? "converged" : "line search failed";
      return res;
    }
  }
  res.grad_norm = g.norm();
  res.converged = res.grad_norm <= opt.tol;
  res.reason = res.converged ? "converged" : "iteration limit";
  return res;
}

// ---------------------------------------------------------------------------

StabilityResult loo_stability(const StabilityConfig& cfg) {
  if (cfg.n < 2) throw std::invalid_argument("stability needs n >= 2");
  if (cfg.trials < 2) throw std::invalid_argument("stability needs at least two trials");
  const auto T = static_cast<std::size_t>(cfg.trials);
  std::vector<double> stab(T), gen(T);
  std::vector<char> ok(T, 0);

  parallel_for(cfg.trials, [&](long t) {
    const auto base = static_cast<std::uint64_t>(t) * 4;
    const Dataset S = make_dataset(cfg.sampler, cfg.teacher, cfg.n, base);
    const Dataset fresh = make_dataset(cfg.sampler, cfg.teacher, cfg.n, base + 1);
    const Dataset pop = make_dataset(cfg.sampler, cfg.teacher, cfg.n_pop, base + 2);

    const auto full = solve_stationary(SampleRisk(cfg.arch, S), cfg.start, cfg.solver);
    if (!full.converged) return;
    double s = 0;
    for (long i = 0; i < cfg.n; ++i) {
      Dataset Si = S;
      if (cfg.variant == StabilityVariant::ReplaceOne) {
        Si.inputs.row(i) = fresh.inputs.row(i);
        Si.targets.row(i) = fresh.targets.row(i);
      } else {
        Si.inputs.resize(cfg.n - 1, S.inputs.cols());
        Si.targets.resize(cfg.n - 1, S.targets.cols());
        for (long k = 0, r = 0; k < cfg.n; ++k)
          if (k != i) {
            Si.inputs.row(r) = S.inputs.row(k);
            Si.targets.row(r++) = S.targets.row(k);
          }
      }
      const auto fit = solve_stationary(SampleRisk(cfg.arch, Si), cfg.start, cfg.solver);
      if (!fit.converged) return;
      const Dataset& eval = cfg.variant == StabilityVariant::ReplaceOne ? S : fresh;
      const Eigen::VectorXd x = eval.x(i), y = eval.y(i);
      s += sample_loss(cfg.arch, fit.w, x, y) - sample_loss(cfg.arch, full.w, x, y);
    }
    const auto k = static_cast<std::size_t>(t);
    stab[k] = s / static_cast<double>(cfg.n);
    gen[k] = empirical_risk(cfg.arch, full.w, pop) - empirical_risk(cfg.arch, full.w, S);
    ok[k] = 1;
  });

  StabilityResult res;
  for (std::size_t k = 0; k < T; ++k) {
    if (!ok[k]) {
      ++res.trials_failed;
      continue;
    }
    res.per_trial_stability.push_back(stab[k]);
    res.per_trial_generalization.push_back(gen[k]);
  }
  res.trials_used = static_cast<int>(res.per_trial_stability.size());
  auto mean_se = [](const std::vector<double>& v) -> std::pair<double, double> {
    const long n = static_cast<long>(v.size());
    if (n == 0) return {0.0, 0.0};
    const double m = pairwise_sum<double>(0, n, [&](long i) { return v[static_cast<std::size_t>(i)]; }) / n;
    if (n < 2) return {m, 0.0};
    const double ss = pairwise_sum<double>(0, n, [&](long i) {
      const double d = v[static_cast<std::size_t>(i)] - m;
      return d * d;
    });
    return {m, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
  };
  std::tie(res.stability, res.stability_se) = mean_se(res.per_trial_stability);
  std::tie(res.generalization, res.generalization_se) = mean_se(res.per_trial_generalization);
  res.combined_se = std::hypot(res.stability_se, res.generalization_se);
  return res;
}

// ---------------------------------------------------------------------------

std::vector<TailRow> tail_experiment(const Architecture& arch, const WeightPoint<double>& w, const SamplerSpec& sampler,
                                     const Teacher& teacher, const PopulationOracle& oracle,
                                     const std::vector<long>& n_grid, double t, int trials) {
  if (!(t > 0)) throw std::invalid_argument("tail threshold t must be positive");
  if (trials < 1) throw std::invalid_argument("tail experiment needs at least one trial");
  const double J = population_risk(oracle, arch, w).value;
  std::vector<TailRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const long n = n_grid[g];
    std::vector<char> hit(static_cast<std::size_t>(trials), 0);
    parallel_for(trials, [&](long k) {
      const auto trial = (static_cast<std::uint64_t>(g) << 32) | static_cast<std::uint64_t>(k);
      const Dataset data = make_dataset(sampler, teacher, n, trial);
      hit[static_cast<std::size_t>(k)] = std::abs(empirical_risk(arch, w, data) - J) > t;
    });
    TailRow row;
    row.n = n;
    row.trials = trials;
    row.exceed = static_cast<int>(std::count(hit.begin(), hit.end(), 1));
    row.fraction = static_cast<double>(row.exceed) / trials;
    const double z = 1.959963984540054, p = row.fraction, m = trials;
    const double centre = (p + z * z / (2 * m)) / (1 + z * z / m);
    const double half = z / (1 + z * z / m) * std::sqrt(p * (1 - p) / m + z * z / (4 * m * m));
    row.ci_low = std::max(0.0, centre - half);
    row.ci_high = std::min(1.0, centre + half);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lp
