#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vpfpnn {

enum class OutputActivation { Softplus, Identity };

// Dense tanh network. Weights are stored per layer as (fan_out x fan_in)
// matrices; hidden activation is tanh everywhere, the output activation is
// softplus for distribution nets and identity for field nets.
struct MlpParams {
  std::vector<int> layer_sizes;              // e.g. {3,100,100,100,100,1}
  std::vector<Eigen::MatrixXd> weights;      // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;       // biases[l]: sizes[l+1]
  OutputActivation output_activation = OutputActivation::Identity;
  uint64_t seed = 0;

  int input_dim() const { return layer_sizes.front(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  long param_count() const;
};

// Gradient (or any moment buffer) congruent in shape with an MlpParams.
struct ParamGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static ParamGradient zeros_like(const MlpParams& p);
  void accumulate(const ParamGradient& other, double scale);
  void setZero();
};

// The solution net (f or rho) paired with its force net (E); disjoint
// parameters, shared (t,x) inputs.
struct FieldNetPair {
  MlpParams solution_net;
  MlpParams force_net;
};

// Glorot-uniform weights, zero biases, reproducible from the seed.
MlpParams init_params(uint64_t seed, std::span<const int> layer_sizes,
                      OutputActivation output_activation);

double forward(const MlpParams& params, std::span<const double> input);

// Batched forward evaluation; inputs are (input_dim x n), output is (1 x n).
// Plain matrix chain, independent of the autodiff tape.
Eigen::RowVectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs);

// Text checkpoint with format version, seed, architecture and row-major
// weight/bias arrays. Round-trips bit-exactly.
void save_checkpoint(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_checkpoint(const std::filesystem::path& path);

double softplus(double x);
double sigmoid(double x);

}  // namespace vpfpnn
