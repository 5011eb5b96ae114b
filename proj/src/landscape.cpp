#include "lp/landscape.hpp"
#include "lp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lp {

std::string to_string(Source s) { return s == Source::Empirical ? "empirical" : "population"; }

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

StationaryRecord describe_point(const RiskSurface& risk, const WeightPoint<double>& w, double zeta, Source source) {
  StationaryRecord rec;
  rec.w = w;
  rec.grad_norm = risk.gradient(w).norm();
  rec.spectrum = spectrum(risk.hessian(w));
  rec.info = classify_spectrum(rec.spectrum, zeta);
  rec.source = source;
  rec.on_boundary = w.on_boundary(1e-6);
  return rec;
}

StationarySearch find_stationary(const RiskSurface& risk, const std::vector<WeightPoint<double>>& starts,
                                 const StationaryOptions& opt, Source source) {
  if (!(opt.solver.tol > 0)) throw std::invalid_argument("solver tolerance must be positive");
  const auto S = starts.size();
  std::vector<SolverResult> results(S);
  parallel_for(static_cast<long>(S), [&](long k) {
    results[static_cast<std::size_t>(k)] = solve_stationary(risk, starts[static_cast<std::size_t>(k)], opt.solver);
  });

  const double merge =
      opt.merge_radius >= 0 ? opt.merge_radius : 1e-5 * std::sqrt(static_cast<double>(risk.arch().weight_dim()));
  StationarySearch out;
  for (std::size_t k = 0; k < S; ++k) {
    const auto& r = results[k];
    StartDiagnostic diag{static_cast<int>(k), r.converged, r.grad_norm, r.iterations, r.reason};
    if (r.converged) {
      auto rec = describe_point(risk, r.w, opt.zeta, source);
      if (rec.grad_norm > opt.solver.tol) {
        diag.converged = false;
        diag.reason = "independent gradient check failed";
      } else {
        rec.start = static_cast<int>(k);
        rec.iterations = r.iterations;
        const Eigen::VectorXd flat = rec.w.flatten();
        const bool dup = std::any_of(out.records.begin(), out.records.end(), [&](const StationaryRecord& o) {
          return (o.w.flatten() - flat).norm() <= merge;
        });
        if (!dup) out.records.push_back(std::move(rec));
      }
    }
    out.diagnostics.push_back(std::move(diag));
  }
  return out;
}

bool PairingResult::indices_agree() const {
  return std::all_of(pairs.begin(), pairs.end(),
                     [](const StationaryPair& p) { return !p.both_nondegenerate || p.index_equal; });
}

PairingResult pair_points(const std::vector<StationaryRecord>& emp, const std::vector<StationaryRecord>& pop,
                          double zeta, double match_radius, double bound) {
  if (!(match_radius > 0)) throw std::invalid_argument("match radius must be positive");
  struct Candidate {
    double dist;
    std::size_t e, p;
  };
  std::vector<Candidate> cand;
  std::vector<int> emp_hits(emp.size(), 0), pop_hits(pop.size(), 0);
  for (std::size_t e = 0; e < emp.size(); ++e)
    for (std::size_t p = 0; p < pop.size(); ++p) {
      const double d = (emp[e].w.flatten() - pop[p].w.flatten()).norm();
      if (d <= match_radius) {
        cand.push_back({d, e, p});
        ++emp_hits[e];
        ++pop_hits[p];
      }
    }
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) { return a.dist < b.dist; });

  PairingResult res;
  res.bound = bound;
  std::vector<char> used_e(emp.size(), 0), used_p(pop.size(), 0);
  for (const auto& c : cand) {
    if (used_e[c.e] || used_p[c.p]) continue;
    used_e[c.e] = used_p[c.p] = 1;
    StationaryPair pr;
    pr.empirical = emp[c.e];
    pr.population = pop[c.p];
    pr.distance = c.dist;
    const auto ie = classify_spectrum(pr.empirical.spectrum, zeta);
    const auto ip = classify_spectrum(pr.population.spectrum, zeta);
    pr.both_nondegenerate = !ie.degenerate && !ip.degenerate;
    pr.index_equal = ie.index == ip.index;
    pr.ambiguous = emp_hits[c.e] > 1 || pop_hits[c.p] > 1;
    pr.boundary_active = pr.empirical.on_boundary || pr.population.on_boundary;
    pr.within_bound = std::isnan(bound) || pr.distance <= bound;
    if (pr.ambiguous) ++res.ambiguous;
    res.pairs.push_back(std::move(pr));
  }
  for (std::size_t e = 0; e < emp.size(); ++e)
    if (!used_e[e]) res.unmatched_empirical.push_back(emp[e]);
  for (std::size_t p = 0; p < pop.size(); ++p)
    if (!used_p[p]) res.unmatched_population.push_back(pop[p]);
  return res;
}

std::vector<AuditRow> degenerate_gradient_audit(const Architecture& arch, const WeightPoint<double>& point,
                                                const SamplerSpec& sampler, const Teacher& teacher,
                                                const std::vector<long>& n_grid, int trials) {
  if (trials < 1) throw std::invalid_argument("audit needs at least one trial");
  std::vector<AuditRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    AuditRow row;
    row.n = n_grid[g];
    row.grad_norms.resize(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](long k) {
      const auto trial = (static_cast<std::uint64_t>(g) << 32) | static_cast<std::uint64_t>(k);
      const Dataset data = make_dataset(sampler, teacher, row.n, trial);
      row.grad_norms[static_cast<std::size_t>(k)] = empirical_gradient(arch, point, data).norm();
    });
    row.median = quantile(row.grad_norms, 0.5);
    row.q25 = quantile(row.grad_norms, 0.25);
    row.q75 = quantile(row.grad_norms, 0.75);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lp
