#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wavesmooth::control {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected net with tanh hidden layers and a linear output layer.
/// Parameters live in one flat vector: for each layer, W (out x in, row-major)
/// followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes, std::string name = "mlp");

  const std::vector<int>& sizes() const { return sizes_; }
  int layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Eigen::Index num_params() const { return offsets_.back(); }

  /// Offset of layer l's weight block; its bias follows the weights.
  Eigen::Index weight_offset(int l) const { return offsets_[static_cast<std::size_t>(l)]; }
  Eigen::Index bias_offset(int l) const;

  /// Activations per layer for a batch (inputs are columns). acts[0] is the
  /// input, acts[layers()] the linear output.
  struct Cache {
    std::vector<Eigen::MatrixXd> acts;
  };

  /// Throws NumericFault with the layer index if any activation is non-finite.
  Eigen::MatrixXd forward(const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                          Cache* cache = nullptr) const;

  /// Accumulates dL/dparams into `grad` given dL/doutput (output x batch).
  void backward(const Eigen::VectorXd& params, const Cache& cache,
                const Eigen::MatrixXd& grad_out, Eigen::VectorXd& grad) const;

  /// Orthogonal weights (hidden gain, separate output gain), zero biases.
  Eigen::VectorXd init_params(std::mt19937_64& rng, double hidden_gain, double output_gain) const;

 private:
  Eigen::Map<const RowMatrix> weight(const Eigen::VectorXd& params, int l) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_{0};
  std::string name_;
};

/// Orthogonal matrix of the given shape scaled by gain (QR of a Gaussian
/// matrix with the sign of R's diagonal folded in).
RowMatrix orthogonal(int rows, int cols, double gain, std::mt19937_64& rng);

}  // namespace wavesmooth::control
