#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "vpfpnn/network.hpp"

namespace vpfpnn {

// ---------------------------------------------------------------------------
// Forward-mode jets (pointwise path)
// ---------------------------------------------------------------------------

// One-directional truncated Taylor scalar. Nesting Jet<Jet<double>> yields the
// second derivative along a pair of directions (forward-over-forward).
template <class T>
struct Jet {
  T v{};  // value
  T d{};  // directional derivative

  Jet() = default;
  Jet(T value) : v(std::move(value)) {}  // NOLINT: implicit from value is intended
  Jet(T value, T deriv) : v(std::move(value)), d(std::move(deriv)) {}

  friend Jet operator+(const Jet& a, const Jet& b) { return {a.v + b.v, a.d + b.d}; }
  friend Jet operator-(const Jet& a, const Jet& b) { return {a.v - b.v, a.d - b.d}; }
  friend Jet operator*(const Jet& a, const Jet& b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
  friend Jet operator*(double s, const Jet& a) { return {s * a.v, s * a.d}; }
  friend Jet operator+(double s, const Jet& a) { return {s + a.v, a.d}; }
  Jet& operator+=(const Jet& o) {
    v = v + o.v;
    d = d + o.d;
    return *this;
  }
};

inline double jet_tanh(double x) { return std::tanh(x); }
inline double jet_sigmoid(double x) { return sigmoid(x); }
inline double jet_softplus(double x) { return softplus(x); }

template <class T>
Jet<T> jet_tanh(const Jet<T>& x) {
  const T t = jet_tanh(x.v);
  const T one_minus_t2 = 1.0 + (-1.0 * (t * t));
  return {t, one_minus_t2 * x.d};
}

template <class T>
Jet<T> jet_sigmoid(const Jet<T>& x) {
  const T s = jet_sigmoid(x.v);
  const T sp = s * (1.0 + (-1.0 * s));
  return {s, sp * x.d};
}

template <class T>
Jet<T> jet_softplus(const Jet<T>& x) {
  return {jet_softplus(x.v), jet_sigmoid(x.v) * x.d};
}

// Network forward pass over any jet-compatible scalar.
template <class S>
S mlp_eval(const MlpParams& p, const std::vector<S>& input) {
  std::vector<S> a = input;
  std::vector<S> z;
  for (int l = 0; l < p.num_layers(); ++l) {
    const auto& w = p.weights[l];
    const auto& b = p.biases[l];
    z.assign(w.rows(), S{});
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      S acc = S{b(r)};
      for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * a[c];
      z[r] = acc;
    }
    if (l + 1 < p.num_layers()) {
      a.resize(z.size());
      for (size_t i = 0; i < z.size(); ++i) a[i] = jet_tanh(z[i]);
    } else {
      a = z;
    }
  }
  if (p.output_activation == OutputActivation::Softplus) return jet_softplus(a[0]);
  return a[0];
}

// ---------------------------------------------------------------------------
// Input-derivative bundles
// ---------------------------------------------------------------------------

// Which input derivatives a caller wants; axes are (t,x,v) for kinetic nets
// and (t,x) for field nets.
struct DerivRequest {
  bool d_t = false, d_x = false, d_v = false;
  bool d_vv = false, d_xx = false, d_tx = false, d_tt = false;

  static DerivRequest kinetic() { return {true, true, true, true, false, false, false}; }
  static DerivRequest density() { return {true, true, false, false, true, false, false}; }
  static DerivRequest field_full() { return {true, true, false, false, true, true, true}; }
};

struct ValueAndInputDerivs {
  double value = 0.0;
  double d_t = 0.0, d_x = 0.0, d_v = 0.0;
  double d_vv = 0.0, d_xx = 0.0, d_tx = 0.0, d_tt = 0.0;
};

// Exact derivatives of the composed network at one point (forward-over-forward
// jets; never finite differences).
ValueAndInputDerivs eval_with_input_derivs(const MlpParams& params, std::span<const double> input,
                                           const DerivRequest& request);

// Directional derivatives along arbitrary unit vectors (used by tests).
double directional_derivative(const MlpParams& params, std::span<const double> input,
                              std::span<const double> dir);
double second_directional_derivative(const MlpParams& params, std::span<const double> input,
                                     std::span<const double> dir1, std::span<const double> dir2);

// ---------------------------------------------------------------------------
// Batched reverse-mode tape
// ---------------------------------------------------------------------------

// Reverse-mode engine over batched matrices (rows = features, cols = batch).
// A fresh tape is built per loss evaluation; backward() may be called several
// times on different scalar roots of the same graph.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Var leaf(const Eigen::MatrixXd& value);      // parameter (receives gradient)
  Var constant(Eigen::MatrixXd value);         // input data, no gradient
  Var matmul(Var w, Var x);
  Var add_bias(Var x, Var b);                  // b is (m x 1), broadcast over columns
  Var add(Var x, Var y);
  Var sub(Var x, Var y);
  Var mul(Var x, Var y);                       // elementwise
  Var affine(Var x, double scale, double shift);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var softplus(Var x);
  Var square(Var x);
  Var sqrt(Var x);
  Var sum(Var x);                              // 1x1
  Var sum_sq(Var x);                           // 1x1
  // x, weights: (1 x N); output (1 x N/block): out_j = sum_k w[jL+k] x[jL+k].
  Var block_weighted_sum(Var x, Eigen::RowVectorXd weights, int block);
  Var repeat_cols(Var x, int times);           // (1 x M) -> (1 x M*times)

  const Eigen::MatrixXd& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }

  // Reverse sweep from a 1x1 root; adjoints are reset per call. Gradients of
  // leaves are readable through grad() until the next backward().
  void backward(Var root);
  Eigen::MatrixXd grad(Var leaf_var) const;

  size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    Leaf,
    Const,
    MatMul,
    AddBias,
    Add,
    Sub,
    Mul,
    Affine,
    Tanh,
    Sigmoid,
    Softplus,
    Square,
    Sqrt,
    Sum,
    SumSq,
    BlockWeightedSum,
    RepeatCols,
  };
  struct Node {
    Op op;
    int a = -1, b = -1;
    double scale = 0.0, shift = 0.0;
    int block = 0;
    Eigen::MatrixXd value;
    Eigen::RowVectorXd wrow;
  };

  Var push(Node&& n);
  Eigen::MatrixXd& adj(int id, Eigen::Index rows, Eigen::Index cols);
  bool has_adj(int id) const { return adj_stamp_[id] == stamp_; }

  std::vector<Node> nodes_;
  std::vector<Eigen::MatrixXd> adjoints_;
  std::vector<int> adj_stamp_;
  int stamp_ = 0;
};

// One network's parameters registered as tape leaves.
struct TapeNet {
  std::vector<Tape::Var> weights;
  std::vector<Tape::Var> biases;
  OutputActivation output_activation = OutputActivation::Identity;
  int num_layers() const { return static_cast<int>(weights.size()); }

  static TapeNet attach(Tape& tape, const MlpParams& params);
  // Collects d(root)/d(param) after tape.backward(); shapes congruent to params.
  ParamGradient gradient(const Tape& tape) const;
};

// Batched forward pass with tangent propagation. `dirs` are constant direction
// matrices (input_dim x N); `second_pairs` index into dirs and request the
// corresponding mixed second derivatives.
struct TapePass {
  Tape::Var value;                 // 1 x N
  std::vector<Tape::Var> d;        // one per direction
  std::vector<Tape::Var> dd;       // one per second pair
};
TapePass net_pass(Tape& tape, const TapeNet& net, Tape::Var inputs,
                  const std::vector<Tape::Var>& dirs = {},
                  const std::vector<std::pair<int, int>>& second_pairs = {});

// Exact gradient of a scalar loss assembled on a tape from two networks'
// passes. The builder composes eval passes and quadrature into a 1x1 root.
using LossBuilder = std::function<Tape::Var(Tape&, const TapeNet&, const TapeNet&)>;
std::pair<ParamGradient, ParamGradient> loss_param_gradient(const MlpParams& net_a,
                                                            const MlpParams& net_b,
                                                            const LossBuilder& builder);

}  // namespace vpfpnn
