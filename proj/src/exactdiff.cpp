#include "lp/exactdiff.hpp"
#include "lp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lp {

namespace {

double step_for(double h, double wi) { return h * std::max(1.0, std::abs(wi)); }

void require_positive_step(double h) {
  if (!(h > 0)) throw std::invalid_argument("finite-difference step must be positive");
}

void require_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& H) {
  if (H.rows() != H.cols()) throw std::invalid_argument("matrix is not square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale)
    throw std::invalid_argument("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
}

}  // namespace

Eigen::VectorXd fd_gradient(const ScalarFn& f, const Eigen::VectorXd& w, double h) {
  require_positive_step(h);
  Eigen::VectorXd g(w.size());
  Eigen::VectorXd p = w;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double s = step_for(h, w(i));
    p(i) = w(i) + s;
    const double fp = f(p);
    p(i) = w(i) - s;
    const double fm = f(p);
    p(i) = w(i);
    g(i) = (fp - fm) / (2 * s);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const VectorFn& grad, const Eigen::VectorXd& w, double h) {
  require_positive_step(h);
  const Eigen::Index d = w.size();
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd p = w;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double s = step_for(h, w(i));
    p(i) = w(i) + s;
    const Eigen::VectorXd gp = grad(p);
    p(i) = w(i) - s;
    const Eigen::VectorXd gm = grad(p);
    p(i) = w(i);
    H.col(i) = (gp - gm) / (2 * s);
  }
  return 0.5 * (H + H.transpose());
}

double relative_error(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& ref,
                      double floor) {
  if (a.rows() != ref.rows() || a.cols() != ref.cols()) throw std::invalid_argument("relative_error: shape mismatch");
  return (a - ref).norm() / std::max(ref.norm(), floor);
}

Eigen::VectorXd spectrum(const Eigen::Ref<const Eigen::MatrixXd>& H) {
  require_symmetric(H);
  const Eigen::MatrixXd S = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen-decomposition failed");
  return es.eigenvalues();  // ascending
}

IndexInfo classify_spectrum(const Eigen::VectorXd& ev, double zeta) {
  IndexInfo info;
  info.min_abs = ev.size() ? ev.cwiseAbs().minCoeff() : 0.0;
  for (double l : ev) {
    if (l < -1e-12)
      ++info.index;
    else if (l > 1e-12)
      ++info.positive;
    else
      ++info.zero;
    if (std::abs(l) < zeta) ++info.near_zero;
  }
  info.degenerate = info.min_abs < zeta;
  return info;
}

IndexInfo index_of(const Eigen::Ref<const Eigen::MatrixXd>& H, double zeta) {
  return classify_spectrum(spectrum(H), zeta);
}

std::vector<Eigen::VectorXd> sphere_net(int dim, double eps, const NetOptions& opt) {
  if (dim < 1) throw std::invalid_argument("net dimension must be positive");
  if (dim > opt.max_dim)
    throw std::invalid_argument("net dimension " + std::to_string(dim) + " exceeds cap " +
                                std::to_string(opt.max_dim));
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("net radius must lie in (0, 1)");

  std::vector<Eigen::VectorXd> net;
  if (dim == 1) {
    net.push_back(Eigen::VectorXd::Constant(1, 1.0));
    net.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return net;
  }
  if (dim <= opt.lattice_max_dim) {
    // Grid of spacing 2/m on each face of [-1,1]^dim. Every face point is
    // within sqrt(dim-1)/m of the grid, and normalising is 1-Lipschitz
    // outside the unit ball, so the projected grid is an eps-cover.
    const int m = static_cast<int>(std::ceil(std::sqrt(dim - 1.0) / eps));
    long cells = 1;
    for (int k = 0; k < dim - 1; ++k) cells *= (m + 1);
    for (int axis = 0; axis < dim; ++axis)
      for (double sign : {-1.0, 1.0})
        for (long c = 0; c < cells; ++c) {
          Eigen::VectorXd p(dim);
          long rest = c;
          for (int k = 0; k < dim; ++k) {
            if (k == axis) {
              p(k) = sign;
              continue;
            }
            p(k) = -1.0 + 2.0 * static_cast<double>(rest % (m + 1)) / m;
            rest /= (m + 1);
          }
          net.push_back(p / p.norm());
        }
    return net;
  }
  SplitMix64 g(opt.seed, static_cast<std::uint64_t>(dim), 0);
  net.reserve(static_cast<std::size_t>(opt.samples));
  for (int i = 0; i < opt.samples; ++i) net.push_back(uniform_sphere(g, dim));
  return net;
}

double net_vector_norm(const Eigen::VectorXd& v, double eps, const NetOptions& opt) {
  const auto net = sphere_net(static_cast<int>(v.size()), eps, opt);
  double best = 0;
  for (const auto& l : net) best = std::max(best, l.dot(v));
  return best / (1 - eps);
}

double net_operator_norm(const Eigen::MatrixXd& X, double eps, const NetOptions& opt) {
  if (!(eps > 0 && eps < 0.5)) throw std::invalid_argument("operator net radius must lie in (0, 1/2)");
  require_symmetric(X);
  const auto net = sphere_net(static_cast<int>(X.rows()), eps, opt);
  double best = 0;
  for (const auto& l : net) best = std::max(best, std::abs(l.dot(X * l)));
  return best / (1 - 2 * eps);
}

}  // namespace lp
