#include "vpfpnn/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vpfpnn/errors.hpp"
#include "vpfpnn/rng.hpp"

namespace vpfpnn {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

long MlpParams::param_count() const {
  long n = 0;
  for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

ParamGradient ParamGradient::zeros_like(const MlpParams& p) {
  ParamGradient g;
  g.weights.reserve(p.weights.size());
  g.biases.reserve(p.biases.size());
  for (size_t l = 0; l < p.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
  }
  return g;
}

void ParamGradient::accumulate(const ParamGradient& other, double scale) {
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
}

void ParamGradient::setZero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

MlpParams init_params(uint64_t seed, std::span<const int> layer_sizes,
                      OutputActivation output_activation) {
  if (layer_sizes.size() < 2) throw ConfigError("init_params: need at least input and output layer");
  for (int w : layer_sizes)
    if (w < 1) throw ConfigError("init_params: layer widths must be >= 1");

  MlpParams p;
  p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  p.output_activation = output_activation;
  p.seed = seed;

  Xoshiro256pp rng(Xoshiro256pp::derive_stream(seed, /*tag=*/0x1717));
  for (size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const int fan_in = p.layer_sizes[l];
    const int fan_out = p.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

double forward(const MlpParams& params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.input_dim())
    throw ConfigError("forward: input width mismatch");
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  for (int l = 0; l < params.num_layers(); ++l) {
    Eigen::VectorXd z = params.weights[l] * a + params.biases[l];
    if (l + 1 < params.num_layers()) {
      a = z.array().tanh();
    } else {
      a = z;
    }
  }
  double out = a(0);
  if (params.output_activation == OutputActivation::Softplus) out = softplus(out);
  return out;
}

Eigen::RowVectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != params.input_dim()) throw ConfigError("forward_batch: input width mismatch");
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd z = (params.weights[l] * a).colwise() + params.biases[l];
    if (l + 1 < params.num_layers()) {
      a = z.array().tanh();
    } else {
      a = std::move(z);
    }
  }
  Eigen::RowVectorXd out = a.row(0);
  if (params.output_activation == OutputActivation::Softplus)
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = softplus(out(i));
  return out;
}

namespace {
const char* activation_name(OutputActivation a) {
  return a == OutputActivation::Softplus ? "softplus" : "identity";
}
}  // namespace

void save_checkpoint(const MlpParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_checkpoint: cannot open " + path.string());
  out << "# vpfpnn network checkpoint\n";
  out << "format 1\n";
  out << "seed " << params.seed << "\n";
  out << "layers";
  for (int w : params.layer_sizes) out << ' ' << w;
  out << "\noutput_activation " << activation_name(params.output_activation) << "\n";
  char buf[32];
  for (int l = 0; l < params.num_layers(); ++l) {
    out << "W " << l << ' ' << params.weights[l].rows() << ' ' << params.weights[l].cols() << "\n";
    for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < params.weights[l].cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", params.weights[l](r, c));
        out << buf << (c + 1 < params.weights[l].cols() ? " " : "");
      }
      out << "\n";
    }
    out << "b " << l << ' ' << params.biases[l].size() << "\n";
    for (Eigen::Index r = 0; r < params.biases[l].size(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", params.biases[l](r));
      out << buf << (r + 1 < params.biases[l].size() ? " " : "");
    }
    out << "\n";
  }
  if (!out) throw ConfigError("save_checkpoint: write failed for " + path.string());
}

MlpParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_checkpoint: cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // comment
  std::string key;
  int version = 0;
  in >> key >> version;
  if (key != "format" || version != 1) throw ConfigError("load_checkpoint: unsupported format");
  MlpParams p;
  in >> key >> p.seed;
  if (key != "seed") throw ConfigError("load_checkpoint: missing seed");
  in >> key;
  if (key != "layers") throw ConfigError("load_checkpoint: missing layers");
  std::getline(in, line);
  {
    std::istringstream ls(line);
    int w;
    while (ls >> w) p.layer_sizes.push_back(w);
  }
  if (p.layer_sizes.size() < 2) throw ConfigError("load_checkpoint: bad layer list");
  std::string act;
  in >> key >> act;
  if (key != "output_activation") throw ConfigError("load_checkpoint: missing activation");
  if (act == "softplus") {
    p.output_activation = OutputActivation::Softplus;
  } else if (act == "identity") {
    p.output_activation = OutputActivation::Identity;
  } else {
    throw ConfigError("load_checkpoint: unknown activation " + act);
  }
  for (size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    int idx, rows, cols, n;
    in >> key >> idx >> rows >> cols;
    if (key != "W" || idx != static_cast<int>(l)) throw ConfigError("load_checkpoint: bad weight block");
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) in >> w(r, c);
    p.weights.push_back(std::move(w));
    in >> key >> idx >> n;
    if (key != "b" || idx != static_cast<int>(l)) throw ConfigError("load_checkpoint: bad bias block");
    Eigen::VectorXd b(n);
    for (int r = 0; r < n; ++r) in >> b(r);
    p.biases.push_back(std::move(b));
  }
  if (!in) throw ConfigError("load_checkpoint: truncated file " + path.string());
  return p;
}

}  // namespace vpfpnn
