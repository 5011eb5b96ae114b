#pragma once

#include "lp/model.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <functional>
#include <vector>

namespace lp {

/// Kronecker product A (x) B.
template <typename DA, typename DB>
MatrixX<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  MatrixX<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Gradient layout: vec(dF/dW^(j)) blocks concatenated in layer order, the
/// same column-major convention as `WeightPoint::flatten`.
template <typename Scalar>
Eigen::Map<const MatrixX<Scalar>> gradient_block(const Architecture& arch, const VectorX<Scalar>& g, int j) {
  return {g.data() + arch.layer_offset(j), arch.width(j), arch.width(j - 1)};
}

/// Hessian block d^2 f / (dw^(s) dw^(t)^T), shape (d_s d_{s-1}) x (d_t d_{t-1}).
template <typename Scalar>
auto hessian_block(const Architecture& arch, const MatrixX<Scalar>& h, int s, int t) {
  return h.block(arch.layer_offset(s), arch.layer_offset(t), arch.layer_size(s), arch.layer_size(t));
}

/// Deep linear network gradient:
///   grad_{w^(j)} f = ((B_{j-1:1} x) (x) B_{l:j+1}^T) e = (B_{j-1:1} x) (x) (B_{l:j+1}^T e).
/// B_{j-1:1} x is the cached activation v^(j-1); B_{l:j+1}^T e is accumulated
/// from the top layer down.
template <typename Scalar>
VectorX<Scalar> gradient_linear(const Architecture& arch, const ForwardTrace<Scalar>& t,
                                const WeightPoint<Scalar>& w) {
  const int l = arch.depth();
  VectorX<Scalar> g(arch.weight_dim());
  VectorX<Scalar> back = t.e;  // B_{l:j+1}^T e
  for (int j = l; j >= 1; --j) {
    g.segment(arch.layer_offset(j), arch.layer_size(j)) = kron(t.act(j - 1), back);
    if (j > 1) back = w.W(j).transpose() * back;
  }
  return g;
}

/// Sigmoid network gradient:
///   grad_{w^(j)} f = vec( (G(u^(j)) B_{j+1:l} (v^(l) - y)) (v^(j-1))^T ).
template <typename Scalar>
VectorX<Scalar> gradient_sigmoid(const Architecture& arch, const ForwardTrace<Scalar>& t,
                                 const WeightPoint<Scalar>& w) {
  const int l = arch.depth();
  VectorX<Scalar> g(arch.weight_dim());
  VectorX<Scalar> back = t.e;  // B_{j+1:l} e = df/dv^(j)
  for (int j = l; j >= 1; --j) {
    const VectorX<Scalar> delta = sigmoid_slope<Scalar>(t.preact(j)).cwiseProduct(back);
    g.segment(arch.layer_offset(j), arch.layer_size(j)) = kron(t.act(j - 1), delta);
    if (j > 1) back = w.W(j).transpose() * delta;
  }
  return g;
}

template <typename Scalar>
VectorX<Scalar> gradient(const Architecture& arch, const ForwardTrace<Scalar>& t, const WeightPoint<Scalar>& w) {
  return arch.activation() == Activation::Linear ? gradient_linear(arch, t, w) : gradient_sigmoid(arch, t, w);
}

/// Deep linear network Hessian assembled from the Kronecker blocks Q_{st}.
///
/// With a = v^(s-1) = B_{s-1:1} x and C_s = B_{l:s+1}:
///   s = t : (a_s a_s^T) (x) (C_s^T C_s)
///   s < t : (a_s a_t^T) (x) (C_s^T C_t) + a_s (x) B_{t-1:s+1}^T (x) (C_t^T e)^T
///   s > t : transpose of the (t, s) block.
template <typename Scalar>
MatrixX<Scalar> hessian_linear(const Architecture& arch, const ForwardTrace<Scalar>& t,
                               const WeightPoint<Scalar>& w) {
  using Matrix = MatrixX<Scalar>;
  const int l = arch.depth();
  std::vector<Matrix> C(static_cast<std::size_t>(l + 1));
  C[static_cast<std::size_t>(l)] = Matrix::Identity(arch.width(l), arch.width(l));
  for (int j = l; j >= 2; --j) C[static_cast<std::size_t>(j - 1)] = C[static_cast<std::size_t>(j)] * w.W(j);

  const int d = arch.weight_dim();
  Matrix H = Matrix::Zero(d, d);
  for (int s = 1; s <= l; ++s) {
    const auto& Cs = C[static_cast<std::size_t>(s)];
    const auto& a = t.act(s - 1);
    H.block(arch.layer_offset(s), arch.layer_offset(s), arch.layer_size(s), arch.layer_size(s)) =
        kron(a * a.transpose(), Cs.transpose() * Cs);
    Matrix mid = Matrix::Identity(arch.width(s), arch.width(s));  // B_{t-1:s+1}
    for (int tt = s + 1; tt <= l; ++tt) {
      if (tt > s + 1) mid = w.W(tt - 1) * mid;
      const auto& Ct = C[static_cast<std::size_t>(tt)];
      const VectorX<Scalar> back = Ct.transpose() * t.e;
      Matrix block = kron(a * t.act(tt - 1).transpose(), Cs.transpose() * Ct) +
                     kron(a, kron(mid.transpose(), back.transpose()));
      H.block(arch.layer_offset(s), arch.layer_offset(tt), arch.layer_size(s), arch.layer_size(tt)) = block;
      H.block(arch.layer_offset(tt), arch.layer_offset(s), arch.layer_size(tt), arch.layer_size(s)) =
          block.transpose();
    }
  }
  return H;
}

/// Sigmoid network Hessian.
///
/// For rows of layer j and columns of layer i >= j, write
///   R(j,k) = G(u^(j)) B_{j+1:k-1} (W^(k))^T   (= (du^(k)/du^(j))^T, R(j,j) = I),
///   m_k    = B_{k+1:l} e,  h_k = sigma''(u^(k)),  delta_i = G(u^(i)) m_i.
/// The block is the sum of the five product-rule terms:
///   Q1 + Q2 : (v^(j-1) v^(i-1)^T) (x) sum_{k>=i} R(j,k) diag(m_k h_k) R(i,k)^T
///   Q3      : v^(j-1) (x) (G(u^(j)) B_{j+1:i-1}) (x) delta_i^T        (i > j only)
///   Q4      : (v^(j-1) v^(i-1)^T) (x) G(u^(j)) B_{j+1:l} B_{i+1:l}^T G(u^(i))
///   Q5      : 0 for i >= j (v^(j-1) does not depend on W^(i))
/// and the i < j blocks follow by symmetry.
template <typename Scalar>
MatrixX<Scalar> hessian_sigmoid(const Architecture& arch, const ForwardTrace<Scalar>& t,
                                const WeightPoint<Scalar>& w) {
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;
  const int l = arch.depth();
  const auto L = static_cast<std::size_t>(l + 1);
  auto at = [](auto& v, int k) -> decltype(auto) { return v[static_cast<std::size_t>(k)]; };

  std::vector<Vector> slope(L), curv(L), back(L), delta(L);
  std::vector<Matrix> tail(L);  // tail[k] = G(u^(k)) B_{k+1:l}
  for (int k = 1; k <= l; ++k) {
    at(slope, k) = sigmoid_slope<Scalar>(t.preact(k));
    at(curv, k) = sigmoid_curvature<Scalar>(t.preact(k));
  }
  at(back, l) = t.e;
  Matrix suffix = Matrix::Identity(arch.width(l), arch.width(l));  // B_{k+1:l}
  for (int k = l; k >= 1; --k) {
    if (k < l) {
      at(back, k) = w.W(k + 1).transpose() * at(delta, k + 1);
      suffix = w.W(k + 1).transpose() * at(slope, k + 1).asDiagonal() * suffix;
    }
    at(delta, k) = at(slope, k).cwiseProduct(at(back, k));
    at(tail, k) = at(slope, k).asDiagonal() * suffix;
  }

  // R[j][k] for k >= j and prefix[j][k] = G(u^(j)) B_{j+1:k-1} for k > j.
  std::vector<std::vector<Matrix>> R(L, std::vector<Matrix>(L)), prefix(L, std::vector<Matrix>(L));
  for (int j = 1; j <= l; ++j) {
    at(R, j)[static_cast<std::size_t>(j)] = Matrix::Identity(arch.width(j), arch.width(j));
    Matrix p = at(slope, j).asDiagonal();
    for (int k = j + 1; k <= l; ++k) {
      at(prefix, j)[static_cast<std::size_t>(k)] = p;
      Matrix r = p * w.W(k).transpose();
      p = r * at(slope, k).asDiagonal();
      at(R, j)[static_cast<std::size_t>(k)] = std::move(r);
    }
  }

  const int d = arch.weight_dim();
  Matrix H = Matrix::Zero(d, d);
  for (int j = 1; j <= l; ++j) {
    for (int i = j; i <= l; ++i) {
      Matrix core = at(tail, j) * at(tail, i).transpose();  // Q4
      for (int k = i; k <= l; ++k) {                        // Q1 (k == j) and Q2
        const Vector weight = at(back, k).cwiseProduct(at(curv, k));
        core.noalias() += at(R, j)[static_cast<std::size_t>(k)] * weight.asDiagonal() *
                          at(R, i)[static_cast<std::size_t>(k)].transpose();
      }
      Matrix block = kron(t.act(j - 1) * t.act(i - 1).transpose(), core);
      if (i > j)  // Q3
        block += kron(t.act(j - 1), kron(at(prefix, j)[static_cast<std::size_t>(i)], at(delta, i).transpose()));
      H.block(arch.layer_offset(j), arch.layer_offset(i), arch.layer_size(j), arch.layer_size(i)) = block;
      if (i > j)
        H.block(arch.layer_offset(i), arch.layer_offset(j), arch.layer_size(i), arch.layer_size(j)) =
            block.transpose();
    }
  }
  return H;
}

template <typename Scalar>
MatrixX<Scalar> hessian(const Architecture& arch, const ForwardTrace<Scalar>& t, const WeightPoint<Scalar>& w) {
  return arch.activation() == Activation::Linear ? hessian_linear(arch, t, w) : hessian_sigmoid(arch, t, w);
}

/// G(u) as a dense diagonal matrix.
template <typename Scalar>
MatrixX<Scalar> slope_operator(const VectorX<Scalar>& u) {
  return sigmoid_slope<Scalar>(u).asDiagonal();
}

/// P_k: d_k^2 x d_k, entry sigma(u_s)(1-sigma(u_s))(1-2 sigma(u_s)) at
/// ((s-1) d_k + s, s) (1-based) and zero elsewhere, i.e. d vec(G(u)) / du.
template <typename Scalar>
MatrixX<Scalar> curvature_operator(const VectorX<Scalar>& u) {
  const Eigen::Index n = u.size();
  MatrixX<Scalar> p = MatrixX<Scalar>::Zero(n * n, n);
  const VectorX<Scalar> c = sigmoid_curvature<Scalar>(u);
  for (Eigen::Index s = 0; s < n; ++s) p(s * n + s, s) = c(s);
  return p;
}

// ---------------------------------------------------------------------------
// Finite-difference oracles. Step for coordinate i is h * max(1, |w_i|).

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd fd_gradient(const ScalarFn& f, const Eigen::VectorXd& w, double h = 1e-5);
/// Central differences of an analytic gradient, symmetrised.
Eigen::MatrixXd fd_hessian(const VectorFn& grad, const Eigen::VectorXd& w, double h = 1e-5);

/// ||a - ref||_2 / max(||ref||_2, floor).
double relative_error(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& ref,
                      double floor = 1e-10);

// ---------------------------------------------------------------------------
// Spectral classification of stationary points.

/// Eigenvalues in ascending order. Throws if H is not symmetric to ~1e-8.
Eigen::VectorXd spectrum(const Eigen::Ref<const Eigen::MatrixXd>& H);

struct IndexInfo {
  int index = 0;     // eigenvalues < -1e-12
  int positive = 0;  // eigenvalues > 1e-12
  int zero = 0;      // the rest; index + positive + zero = d
  int near_zero = 0; // |lambda| < zeta
  double min_abs = 0;
  bool degenerate = false;  // min |lambda| < zeta
};

IndexInfo classify_spectrum(const Eigen::VectorXd& eigenvalues, double zeta);
IndexInfo index_of(const Eigen::Ref<const Eigen::MatrixXd>& H, double zeta);

// ---------------------------------------------------------------------------
// epsilon-net norm estimators.

struct NetOptions {
  std::uint64_t seed = 0x5eed;
  int max_dim = 8;          // larger nets are rejected
  int lattice_max_dim = 3;  // deterministic covering up to this dimension
  int samples = 20000;      // sphere samples above lattice_max_dim
};

/// Unit vectors covering the sphere S^{dim-1}. Up to `lattice_max_dim` the
/// set is a guaranteed eps-covering (normalised grid on the faces of the
/// cube); above that it is a seeded uniform sample.
std::vector<Eigen::VectorXd> sphere_net(int dim, double eps, const NetOptions& opt = {});

/// (1/(1-eps)) max_{lambda in net} <lambda, v>.
double net_vector_norm(const Eigen::VectorXd& v, double eps, const NetOptions& opt = {});
/// (1/(1-2 eps)) max_{lambda in net} |<lambda, X lambda>| for symmetric X.
double net_operator_norm(const Eigen::MatrixXd& X, double eps, const NetOptions& opt = {});

}  // namespace lp
