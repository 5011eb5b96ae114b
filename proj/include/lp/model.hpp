#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lp {

enum class Activation { Linear, Sigmoid };

std::string to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Raised when an input does not conform to the network shape.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Layer widths d_0..d_l and the activation shared by every layer.
/// Networks are bias-free.
class Architecture {
 public:
  Architecture() = default;
  Architecture(std::vector<int> dims, Activation activation);

  /// Parses "3,5,4:sigmoid". The activation suffix is optional and
  /// defaults to `fallback`.
  static Architecture parse(std::string_view text, Activation fallback = Activation::Linear);
  std::string to_string() const;

  const std::vector<int>& dims() const { return dims_; }
  Activation activation() const { return activation_; }
  int depth() const { return static_cast<int>(dims_.size()) - 1; }
  int width(int j) const { return dims_.at(static_cast<std::size_t>(j)); }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }

  /// d_j * d_{j-1}, the number of entries of W^(j).
  int layer_size(int j) const { return width(j) * width(j - 1); }
  /// Offset of vec(W^(j)) inside the flattened weight vector.
  int layer_offset(int j) const;
  /// d = sum_j d_j d_{j-1}.
  int weight_dim() const { return layer_offset(depth() + 1); }
  /// max_j d_j over 0..l.
  int max_width() const;
  /// max_j d_j d_{j-1}.
  int max_layer_size() const;

  bool operator==(const Architecture&) const = default;

 private:
  std::vector<int> dims_;
  Activation activation_ = Activation::Linear;
};

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A point of R^d tagged with the per-layer radius r of the constraint set
/// Omega = { w : ||W^(j)||_F <= r for all j }.
///
/// The raw constructor does not enforce membership (finite-difference
/// probes step slightly outside); use `in_omega` or `WeightPoint::checked`.
template <typename Scalar>
struct WeightPoint {
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  std::vector<Matrix> layers;  // layers[j-1] holds W^(j), shape d_j x d_{j-1}
  Scalar radius{1};

  const Matrix& W(int j) const { return layers[static_cast<std::size_t>(j - 1)]; }
  Matrix& W(int j) { return layers[static_cast<std::size_t>(j - 1)]; }
  int depth() const { return static_cast<int>(layers.size()); }

  static WeightPoint zeros(const Architecture& arch, Scalar radius) {
    WeightPoint w;
    w.radius = radius;
    for (int j = 1; j <= arch.depth(); ++j) w.layers.push_back(Matrix::Zero(arch.width(j), arch.width(j - 1)));
    return w;
  }

  /// Inverse of `flatten`: column-major vec of each layer, concatenated in layer order.
  static WeightPoint from_flat(const Architecture& arch, const Eigen::Ref<const Vector>& flat, Scalar radius) {
    if (flat.size() != arch.weight_dim())
      throw ShapeError("flat weight vector has length " + std::to_string(flat.size()) + ", expected " +
                       std::to_string(arch.weight_dim()));
    WeightPoint w;
    w.radius = radius;
    for (int j = 1; j <= arch.depth(); ++j) {
      const int rows = arch.width(j), cols = arch.width(j - 1);
      w.layers.push_back(Eigen::Map<const Matrix>(flat.data() + arch.layer_offset(j), rows, cols));
    }
    return w;
  }

  /// Builds a point and rejects it unless it lies in Omega.
  static WeightPoint checked(std::vector<Matrix> layers, Scalar radius) {
    WeightPoint w{std::move(layers), radius};
    if (!(radius > Scalar(0))) throw std::invalid_argument("radius must be positive");
    for (int j = 1; j <= w.depth(); ++j)
      if (w.W(j).norm() > radius * (Scalar(1) + Scalar(1e-12)))
        throw std::invalid_argument("layer " + std::to_string(j) + " violates ||W||_F <= r");
    return w;
  }

  Vector flatten() const {
    Eigen::Index total = 0;
    for (const auto& m : layers) total += m.size();
    Vector flat(total);
    Eigen::Index off = 0;
    for (const auto& m : layers) {
      flat.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
      off += m.size();
    }
    return flat;
  }

  bool in_omega(Scalar rel_tol = Scalar(1e-12)) const {
    for (const auto& m : layers)
      if (m.norm() > radius * (Scalar(1) + rel_tol)) return false;
    return true;
  }

  /// Per-layer radial rescale onto the Frobenius ball of radius r.
  WeightPoint projected() const {
    WeightPoint w = *this;
    for (auto& m : w.layers) {
      const Scalar n = m.norm();
      if (n > radius) m *= radius / n;
    }
    return w;
  }

  /// True when some layer sits on the sphere ||W^(j)||_F = r.
  bool on_boundary(Scalar rel_tol = Scalar(1e-9)) const {
    for (const auto& m : layers)
      if (m.norm() >= radius * (Scalar(1) - rel_tol)) return true;
    return false;
  }
};

template <typename Scalar>
void check_conforms(const Architecture& arch, const WeightPoint<Scalar>& w) {
  if (w.depth() != arch.depth())
    throw ShapeError("weight point has " + std::to_string(w.depth()) + " layers, architecture has " +
                     std::to_string(arch.depth()));
  for (int j = 1; j <= arch.depth(); ++j)
    if (w.W(j).rows() != arch.width(j) || w.W(j).cols() != arch.width(j - 1))
      throw ShapeError("layer " + std::to_string(j) + " has shape " + std::to_string(w.W(j).rows()) + "x" +
                       std::to_string(w.W(j).cols()) + ", expected " + std::to_string(arch.width(j)) + "x" +
                       std::to_string(arch.width(j - 1)));
}

/// sigma(a) = 1/(1+exp(-a)), evaluated on the branch that cannot overflow.
template <typename Scalar>
Scalar sigmoid(Scalar a) {
  using std::exp;
  if (a >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-a));
  const Scalar z = exp(a);
  return z / (Scalar(1) + z);
}

/// Per-layer pre-activations u^(j), activations v^(j) (v^(0) = x) and the
/// output error e = v^(l) - y. Layer indices are 1-based as in the math.
template <typename Scalar>
struct ForwardTrace {
  using Vector = VectorX<Scalar>;

  Activation activation = Activation::Linear;
  std::vector<Vector> u;  // u[0] unused
  std::vector<Vector> v;  // v[0] = x
  Vector y;
  Vector e;

  int depth() const { return static_cast<int>(u.size()) - 1; }
  const Vector& input() const { return v.front(); }
  const Vector& output() const { return v.back(); }
  const Vector& preact(int j) const { return u[static_cast<std::size_t>(j)]; }
  const Vector& act(int j) const { return v[static_cast<std::size_t>(j)]; }
};

template <typename Scalar>
ForwardTrace<Scalar> forward(const Architecture& arch, const WeightPoint<Scalar>& w,
                             const Eigen::Ref<const VectorX<Scalar>>& x,
                             const Eigen::Ref<const VectorX<Scalar>>& y) {
  check_conforms(arch, w);
  if (x.size() != arch.input_dim())
    throw ShapeError("input has length " + std::to_string(x.size()) + ", layer 1 expects " +
                     std::to_string(arch.input_dim()));
  if (y.size() != arch.output_dim())
    throw ShapeError("target has length " + std::to_string(y.size()) + ", layer " +
                     std::to_string(arch.depth()) + " outputs " + std::to_string(arch.output_dim()));
  const int l = arch.depth();
  ForwardTrace<Scalar> t;
  t.activation = arch.activation();
  t.u.resize(static_cast<std::size_t>(l + 1));
  t.v.resize(static_cast<std::size_t>(l + 1));
  t.v[0] = x;
  for (int j = 1; j <= l; ++j) {
    const auto J = static_cast<std::size_t>(j);
    t.u[J] = w.W(j) * t.v[J - 1];
    if (arch.activation() == Activation::Linear) {
      t.v[J] = t.u[J];
    } else {
      t.v[J] = t.u[J].unaryExpr([](Scalar a) { return sigmoid(a); });
    }
  }
  t.y = y;
  t.e = t.v.back() - y;
  return t;
}

/// f = 1/2 ||e||^2.
template <typename Scalar>
Scalar loss(const ForwardTrace<Scalar>& t) {
  return Scalar(0.5) * t.e.squaredNorm();
}

/// Diagonal of G(u): sigma(u_i)(1 - sigma(u_i)).
template <typename Scalar>
VectorX<Scalar> sigmoid_slope(const VectorX<Scalar>& u) {
  return u.unaryExpr([](Scalar a) {
    const Scalar s = sigmoid(a);
    return s * (Scalar(1) - s);
  });
}

/// Second-derivative factors sigma(u_i)(1 - sigma(u_i))(1 - 2 sigma(u_i)).
template <typename Scalar>
VectorX<Scalar> sigmoid_curvature(const VectorX<Scalar>& u) {
  return u.unaryExpr([](Scalar a) {
    const Scalar s = sigmoid(a);
    return s * (Scalar(1) - s) * (Scalar(1) - Scalar(2) * s);
  });
}

/// A_i = (W^(i))^T G(u^(i)), the sigmoid layer factor of shape d_{i-1} x d_i.
template <typename Scalar>
MatrixX<Scalar> sigmoid_layer_factor(const ForwardTrace<Scalar>& t, const WeightPoint<Scalar>& w, int i) {
  return w.W(i).transpose() * sigmoid_slope<Scalar>(t.preact(i)).asDiagonal();
}

/// Chain product B_{s:t}.
///
/// Linear: W^(s) W^(s-1) ... W^(t) (d_s x d_{t-1}); the identity of size d_s
/// when s = t - 1.
/// Sigmoid: A_s A_{s+1} ... A_t (d_{s-1} x d_t); the identity of size d_t
/// when s = t + 1.
template <typename Scalar>
MatrixX<Scalar> chain_product(const Architecture& arch, const ForwardTrace<Scalar>& trace,
                              const WeightPoint<Scalar>& w, int s, int t) {
  using Matrix = MatrixX<Scalar>;
  const int l = arch.depth();
  if (arch.activation() == Activation::Linear) {
    if (s < 0 || s > l || t < 1 || t > l + 1 || s < t - 1)
      throw std::out_of_range("linear chain product B_{" + std::to_string(s) + ":" + std::to_string(t) +
                              "} out of range for depth " + std::to_string(l));
    Matrix b = Matrix::Identity(arch.width(s), arch.width(s));
    for (int k = s; k >= t; --k) b = b * w.W(k);
    return b;
  }
  if (s < 1 || s > l + 1 || t < 0 || t > l || s > t + 1)
    throw std::out_of_range("sigmoid chain product B_{" + std::to_string(s) + ":" + std::to_string(t) +
                            "} out of range for depth " + std::to_string(l));
  Matrix b = Matrix::Identity(arch.width(s - 1), arch.width(s - 1));
  for (int k = s; k <= t; ++k) b = b * sigmoid_layer_factor(trace, w, k);
  return b;
}

}  // namespace lp
