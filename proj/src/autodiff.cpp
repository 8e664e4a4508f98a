#include "vpfpnn/autodiff.hpp"

#include <cmath>

#include "vpfpnn/errors.hpp"

namespace vpfpnn {

namespace {

using J1 = Jet<double>;
using J2 = Jet<Jet<double>>;

std::vector<J1> seed_first(std::span<const double> x, std::span<const double> dir) {
  std::vector<J1> in(x.size());
  for (size_t i = 0; i < x.size(); ++i) in[i] = J1(x[i], dir[i]);
  return in;
}

std::vector<J2> seed_second(std::span<const double> x, std::span<const double> dir1,
                            std::span<const double> dir2) {
  std::vector<J2> in(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    in[i] = J2(J1(x[i], dir2[i]), J1(dir1[i], 0.0));
  return in;
}

std::vector<double> axis_dir(int dim, int axis) {
  std::vector<double> d(dim, 0.0);
  d[axis] = 1.0;
  return d;
}

}  // namespace

double directional_derivative(const MlpParams& params, std::span<const double> input,
                              std::span<const double> dir) {
  if (static_cast<int>(input.size()) != params.input_dim() || input.size() != dir.size())
    throw ConfigError("directional_derivative: dimension mismatch");
  return mlp_eval<J1>(params, seed_first(input, dir)).d;
}

double second_directional_derivative(const MlpParams& params, std::span<const double> input,
                                     std::span<const double> dir1, std::span<const double> dir2) {
  if (static_cast<int>(input.size()) != params.input_dim() || input.size() != dir1.size() ||
      input.size() != dir2.size())
    throw ConfigError("second_directional_derivative: dimension mismatch");
  return mlp_eval<J2>(params, seed_second(input, dir1, dir2)).d.d;
}

ValueAndInputDerivs eval_with_input_derivs(const MlpParams& params, std::span<const double> input,
                                           const DerivRequest& request) {
  const int dim = params.input_dim();
  if (static_cast<int>(input.size()) != dim)
    throw ConfigError("eval_with_input_derivs: input width mismatch");
  if ((request.d_v || request.d_vv) && dim < 3)
    throw ConfigError("eval_with_input_derivs: v-derivative requested from a 2-input net");

  ValueAndInputDerivs out;
  out.value = forward(params, input);

  bool have_t = false, have_x = false, have_v = false;
  auto run_pair = [&](int i, int j, double* slot) {
    const auto di = axis_dir(dim, i);
    const auto dj = axis_dir(dim, j);
    const J2 r = mlp_eval<J2>(params, seed_second(input, di, dj));
    *slot = r.d.d;
    // first derivatives come along for free
    const double first_i = r.d.v;
    const double first_j = r.v.d;
    if (i == 0) out.d_t = first_i, have_t = true;
    if (i == 1) out.d_x = first_i, have_x = true;
    if (i == 2) out.d_v = first_i, have_v = true;
    if (j == 0) out.d_t = first_j, have_t = true;
    if (j == 1) out.d_x = first_j, have_x = true;
    if (j == 2) out.d_v = first_j, have_v = true;
  };

  if (request.d_tt) run_pair(0, 0, &out.d_tt);
  if (request.d_tx) run_pair(0, 1, &out.d_tx);
  if (request.d_xx) run_pair(1, 1, &out.d_xx);
  if (request.d_vv) run_pair(2, 2, &out.d_vv);

  auto run_single = [&](int axis, double* slot) {
    *slot = mlp_eval<J1>(params, seed_first(input, axis_dir(dim, axis))).d;
  };
  if (request.d_t && !have_t) run_single(0, &out.d_t);
  if (request.d_x && !have_x) run_single(1, &out.d_x);
  if (request.d_v && !have_v) run_single(2, &out.d_v);

  const double probe = out.value + out.d_t + out.d_x + out.d_v + out.d_vv + out.d_xx + out.d_tx + out.d_tt;
  if (!std::isfinite(probe))
    throw NumericError("eval_with_input_derivs: non-finite result (bad parameter or input)");
  return out;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Tape::Var Tape::push(Node&& n) {
  nodes_.push_back(std::move(n));
  adjoints_.emplace_back();
  adj_stamp_.push_back(0);
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::leaf(const Eigen::MatrixXd& value) {
  Node n;
  n.op = Op::Leaf;
  n.value = value;
  return push(std::move(n));
}

Tape::Var Tape::constant(Eigen::MatrixXd value) {
  Node n;
  n.op = Op::Const;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::matmul(Var w, Var x) {
  const auto& a = nodes_[w.id].value;
  const auto& b = nodes_[x.id].value;
  if (a.cols() != b.rows()) throw ConfigError("Tape::matmul: shape mismatch");
  Node n;
  n.op = Op::MatMul;
  n.a = w.id;
  n.b = x.id;
  n.value.noalias() = a * b;
  return push(std::move(n));
}

Tape::Var Tape::add_bias(Var x, Var b) {
  const auto& xv = nodes_[x.id].value;
  const auto& bv = nodes_[b.id].value;
  if (bv.cols() != 1 || bv.rows() != xv.rows()) throw ConfigError("Tape::add_bias: shape mismatch");
  Node n;
  n.op = Op::AddBias;
  n.a = x.id;
  n.b = b.id;
  n.value = xv.colwise() + bv.col(0);
  return push(std::move(n));
}

namespace {
void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ConfigError(std::string(who) + ": shape mismatch");
}
}  // namespace

Tape::Var Tape::add(Var x, Var y) {
  check_same_shape(nodes_[x.id].value, nodes_[y.id].value, "Tape::add");
  Node n;
  n.op = Op::Add;
  n.a = x.id;
  n.b = y.id;
  n.value = nodes_[x.id].value + nodes_[y.id].value;
  return push(std::move(n));
}

Tape::Var Tape::sub(Var x, Var y) {
  check_same_shape(nodes_[x.id].value, nodes_[y.id].value, "Tape::sub");
  Node n;
  n.op = Op::Sub;
  n.a = x.id;
  n.b = y.id;
  n.value = nodes_[x.id].value - nodes_[y.id].value;
  return push(std::move(n));
}

Tape::Var Tape::mul(Var x, Var y) {
  check_same_shape(nodes_[x.id].value, nodes_[y.id].value, "Tape::mul");
  Node n;
  n.op = Op::Mul;
  n.a = x.id;
  n.b = y.id;
  n.value = nodes_[x.id].value.cwiseProduct(nodes_[y.id].value);
  return push(std::move(n));
}

Tape::Var Tape::affine(Var x, double scale, double shift) {
  Node n;
  n.op = Op::Affine;
  n.a = x.id;
  n.scale = scale;
  n.shift = shift;
  n.value = (scale * nodes_[x.id].value.array() + shift).matrix();
  return push(std::move(n));
}

Tape::Var Tape::tanh(Var x) {
  Node n;
  n.op = Op::Tanh;
  n.a = x.id;
  n.value = nodes_[x.id].value.array().tanh().matrix();
  return push(std::move(n));
}

Tape::Var Tape::sigmoid(Var x) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = x.id;
  n.value = nodes_[x.id].value.unaryExpr([](double v) { return vpfpnn::sigmoid(v); });
  return push(std::move(n));
}

Tape::Var Tape::softplus(Var x) {
  Node n;
  n.op = Op::Softplus;
  n.a = x.id;
  n.value = nodes_[x.id].value.unaryExpr([](double v) { return vpfpnn::softplus(v); });
  return push(std::move(n));
}

Tape::Var Tape::square(Var x) {
  Node n;
  n.op = Op::Square;
  n.a = x.id;
  n.value = nodes_[x.id].value.array().square().matrix();
  return push(std::move(n));
}

Tape::Var Tape::sqrt(Var x) {
  Node n;
  n.op = Op::Sqrt;
  n.a = x.id;
  n.value = nodes_[x.id].value.array().sqrt().matrix();
  return push(std::move(n));
}

Tape::Var Tape::sum(Var x) {
  Node n;
  n.op = Op::Sum;
  n.a = x.id;
  n.value = Eigen::MatrixXd::Constant(1, 1, nodes_[x.id].value.sum());
  return push(std::move(n));
}

Tape::Var Tape::sum_sq(Var x) {
  Node n;
  n.op = Op::SumSq;
  n.a = x.id;
  n.value = Eigen::MatrixXd::Constant(1, 1, nodes_[x.id].value.squaredNorm());
  return push(std::move(n));
}

Tape::Var Tape::block_weighted_sum(Var x, Eigen::RowVectorXd weights, int block) {
  const auto& xv = nodes_[x.id].value;
  if (xv.rows() != 1 || weights.size() != xv.cols() || block <= 0 || xv.cols() % block != 0)
    throw ConfigError("Tape::block_weighted_sum: shape mismatch");
  const int m = static_cast<int>(xv.cols()) / block;
  Node n;
  n.op = Op::BlockWeightedSum;
  n.a = x.id;
  n.block = block;
  n.wrow = std::move(weights);
  n.value.resize(1, m);
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (int k = 0; k < block; ++k) acc += n.wrow(j * block + k) * xv(0, j * block + k);
    n.value(0, j) = acc;
  }
  return push(std::move(n));
}

Tape::Var Tape::repeat_cols(Var x, int times) {
  const auto& xv = nodes_[x.id].value;
  if (xv.rows() != 1 || times <= 0) throw ConfigError("Tape::repeat_cols: bad arguments");
  Node n;
  n.op = Op::RepeatCols;
  n.a = x.id;
  n.block = times;
  n.value.resize(1, xv.cols() * times);
  for (Eigen::Index j = 0; j < xv.cols(); ++j)
    for (int k = 0; k < times; ++k) n.value(0, j * times + k) = xv(0, j);
  return push(std::move(n));
}

Eigen::MatrixXd& Tape::adj(int id, Eigen::Index rows, Eigen::Index cols) {
  if (adj_stamp_[id] != stamp_) {
    adjoints_[id] = Eigen::MatrixXd::Zero(rows, cols);
    adj_stamp_[id] = stamp_;
  }
  return adjoints_[id];
}

void Tape::backward(Var root) {
  if (!root.valid()) throw ConfigError("Tape::backward: invalid root");
  const auto& rv = nodes_[root.id].value;
  if (rv.rows() != 1 || rv.cols() != 1) throw ConfigError("Tape::backward: root must be scalar");
  ++stamp_;
  adj(root.id, 1, 1)(0, 0) = 1.0;

  for (int i = root.id; i >= 0; --i) {
    if (!has_adj(i)) continue;
    Node& n = nodes_[i];
    Eigen::MatrixXd& g = adjoints_[i];
    auto parent_adj = [&](int pid) -> Eigen::MatrixXd& {
      const auto& pv = nodes_[pid].value;
      return adj(pid, pv.rows(), pv.cols());
    };
    const bool a_wants = n.a >= 0 && nodes_[n.a].op != Op::Const;
    const bool b_wants = n.b >= 0 && nodes_[n.b].op != Op::Const;
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        continue;  // keep leaf adjoints for grad()
      case Op::MatMul:
        if (a_wants) parent_adj(n.a).noalias() += g * nodes_[n.b].value.transpose();
        if (b_wants) parent_adj(n.b).noalias() += nodes_[n.a].value.transpose() * g;
        break;
      case Op::AddBias:
        if (a_wants) parent_adj(n.a) += g;
        if (b_wants) parent_adj(n.b) += g.rowwise().sum();
        break;
      case Op::Add:
        if (a_wants) parent_adj(n.a) += g;
        if (b_wants) parent_adj(n.b) += g;
        break;
      case Op::Sub:
        if (a_wants) parent_adj(n.a) += g;
        if (b_wants) parent_adj(n.b) -= g;
        break;
      case Op::Mul:
        if (a_wants) parent_adj(n.a) += g.cwiseProduct(nodes_[n.b].value);
        if (b_wants) parent_adj(n.b) += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::Affine:
        if (a_wants) parent_adj(n.a) += n.scale * g;
        break;
      case Op::Tanh:
        if (a_wants)
          parent_adj(n.a).array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::Sigmoid:
        if (a_wants)
          parent_adj(n.a).array() += g.array() * (n.value.array() * (1.0 - n.value.array()));
        break;
      case Op::Softplus:
        if (a_wants)
          parent_adj(n.a).array() +=
              g.array() *
              nodes_[n.a].value.unaryExpr([](double v) { return vpfpnn::sigmoid(v); }).array();
        break;
      case Op::Square:
        if (a_wants) parent_adj(n.a).array() += 2.0 * g.array() * nodes_[n.a].value.array();
        break;
      case Op::Sqrt:
        if (a_wants) parent_adj(n.a).array() += g.array() / (2.0 * n.value.array());
        break;
      case Op::Sum:
        if (a_wants) parent_adj(n.a).array() += g(0, 0);
        break;
      case Op::SumSq:
        if (a_wants) parent_adj(n.a) += (2.0 * g(0, 0)) * nodes_[n.a].value;
        break;
      case Op::BlockWeightedSum:
        if (a_wants) {
          Eigen::MatrixXd& pa = parent_adj(n.a);
          for (Eigen::Index j = 0; j < n.value.cols(); ++j)
            for (int k = 0; k < n.block; ++k)
              pa(0, j * n.block + k) += n.wrow(j * n.block + k) * g(0, j);
        }
        break;
      case Op::RepeatCols:
        if (a_wants) {
          Eigen::MatrixXd& pa = parent_adj(n.a);
          for (Eigen::Index j = 0; j < pa.cols(); ++j) {
            double acc = 0.0;
            for (int k = 0; k < n.block; ++k) acc += g(0, j * n.block + k);
            pa(0, j) += acc;
          }
        }
        break;
    }
    // interior adjoints are dead once their node is processed
    if (n.op != Op::Leaf) adjoints_[i].resize(0, 0);
  }
}

Eigen::MatrixXd Tape::grad(Var leaf_var) const {
  const auto& v = nodes_[leaf_var.id].value;
  if (adj_stamp_[leaf_var.id] == stamp_) return adjoints_[leaf_var.id];
  return Eigen::MatrixXd::Zero(v.rows(), v.cols());
}

// ---------------------------------------------------------------------------
// Network on tape
// ---------------------------------------------------------------------------

TapeNet TapeNet::attach(Tape& tape, const MlpParams& params) {
  TapeNet net;
  net.output_activation = params.output_activation;
  for (int l = 0; l < params.num_layers(); ++l) {
    net.weights.push_back(tape.leaf(params.weights[l]));
    net.biases.push_back(tape.leaf(params.biases[l]));
  }
  return net;
}

ParamGradient TapeNet::gradient(const Tape& tape) const {
  ParamGradient g;
  for (int l = 0; l < num_layers(); ++l) {
    g.weights.push_back(tape.grad(weights[l]));
    g.biases.push_back(tape.grad(biases[l]).col(0));
  }
  return g;
}

TapePass net_pass(Tape& tape, const TapeNet& net, Tape::Var inputs,
                  const std::vector<Tape::Var>& dirs,
                  const std::vector<std::pair<int, int>>& second_pairs) {
  const Eigen::Index n_cols = tape.value(inputs).cols();
  if (tape.value(net.weights[0]).cols() != tape.value(inputs).rows())
    throw ConfigError("net_pass: input width mismatch");
  for (const auto& [i, j] : second_pairs)
    if (i < 0 || j < 0 || i >= static_cast<int>(dirs.size()) || j >= static_cast<int>(dirs.size()))
      throw ConfigError("net_pass: second-order pair indexes missing direction");

  const int layers = net.num_layers();
  Tape::Var a = inputs;
  std::vector<Tape::Var> da = dirs;
  std::vector<Tape::Var> dda(second_pairs.size());  // invalid == identically zero

  for (int l = 0; l < layers; ++l) {
    Tape::Var z = tape.add_bias(tape.matmul(net.weights[l], a), net.biases[l]);
    std::vector<Tape::Var> dz(da.size());
    for (size_t k = 0; k < da.size(); ++k) dz[k] = tape.matmul(net.weights[l], da[k]);
    std::vector<Tape::Var> ddz(dda.size());
    for (size_t m = 0; m < dda.size(); ++m)
      ddz[m] = dda[m].valid() ? tape.matmul(net.weights[l], dda[m]) : Tape::Var{};

    const bool output_layer = (l + 1 == layers);
    Tape::Var act, actp, actpp;
    if (!output_layer) {
      act = tape.tanh(z);
      if (!dz.empty()) actp = tape.affine(tape.square(act), -1.0, 1.0);
      if (!ddz.empty()) actpp = tape.mul(tape.affine(act, -2.0, 0.0), actp);
    } else if (net.output_activation == OutputActivation::Softplus) {
      act = tape.softplus(z);
      if (!dz.empty()) actp = tape.sigmoid(z);
      if (!ddz.empty()) actpp = tape.mul(actp, tape.affine(actp, -1.0, 1.0));
    } else {
      // identity: activations pass through
      a = z;
      da = std::move(dz);
      for (size_t m = 0; m < dda.size(); ++m) dda[m] = ddz[m];
      continue;
    }

    for (size_t m = 0; m < dda.size(); ++m) {
      const auto [i, j] = second_pairs[m];
      Tape::Var curved = tape.mul(actpp, tape.mul(dz[i], dz[j]));
      dda[m] = ddz[m].valid() ? tape.add(curved, tape.mul(actp, ddz[m])) : curved;
    }
    for (size_t k = 0; k < da.size(); ++k) da[k] = tape.mul(actp, dz[k]);
    a = act;
  }

  TapePass out;
  out.value = a;
  out.d = std::move(da);
  out.dd.resize(second_pairs.size());
  for (size_t m = 0; m < second_pairs.size(); ++m)
    out.dd[m] = dda[m].valid() ? dda[m] : tape.constant(Eigen::MatrixXd::Zero(1, n_cols));
  return out;
}

std::pair<ParamGradient, ParamGradient> loss_param_gradient(const MlpParams& net_a,
                                                            const MlpParams& net_b,
                                                            const LossBuilder& builder) {
  Tape tape;
  TapeNet ta = TapeNet::attach(tape, net_a);
  TapeNet tb = TapeNet::attach(tape, net_b);
  Tape::Var root = builder(tape, ta, tb);
  if (!std::isfinite(tape.scalar(root)))
    throw NumericError("loss_param_gradient: non-finite loss value");
  tape.backward(root);
  return {ta.gradient(tape), tb.gradient(tape)};
}

}  // namespace vpfpnn
