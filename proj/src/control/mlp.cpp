#include "wavesmooth/mlp.hpp"

#include <stdexcept>

#include "wavesmooth/error.hpp"

namespace wavesmooth::control {

Mlp::Mlp(std::vector<int> sizes, std::string name) : sizes_(std::move(sizes)), name_(std::move(name)) {
  if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs at least two layer sizes");
  for (int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("MLP layer sizes must be positive");
  }
  for (int l = 0; l < layers(); ++l) {
    const auto in = sizes_[static_cast<std::size_t>(l)];
    const auto out = sizes_[static_cast<std::size_t>(l) + 1];
    offsets_.push_back(offsets_.back() + static_cast<Eigen::Index>(out) * (in + 1));
  }
}

Eigen::Index Mlp::bias_offset(int l) const {
  const auto in = sizes_[static_cast<std::size_t>(l)];
  const auto out = sizes_[static_cast<std::size_t>(l) + 1];
  return weight_offset(l) + static_cast<Eigen::Index>(out) * in;
}

Eigen::Map<const RowMatrix> Mlp::weight(const Eigen::VectorXd& params, int l) const {
  return {params.data() + weight_offset(l), sizes_[static_cast<std::size_t>(l) + 1],
          sizes_[static_cast<std::size_t>(l)]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                             Cache* cache) const {
  if (params.size() != num_params()) throw std::invalid_argument(name_ + ": parameter size mismatch");
  if (x.rows() != input_size()) throw std::invalid_argument(name_ + ": input size mismatch");
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Eigen::MatrixXd a = x;
  for (int l = 0; l < layers(); ++l) {
    const auto out = sizes_[static_cast<std::size_t>(l) + 1];
    Eigen::Map<const Eigen::VectorXd> b(params.data() + bias_offset(l), out);
    Eigen::MatrixXd z = weight(params, l) * a;
    z.colwise() += b;
    if (l + 1 < layers()) z = z.array().tanh().matrix();
    if (!z.allFinite()) throw NumericFault(name_ + ": non-finite activation in layer", l);
    a = std::move(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

void Mlp::backward(const Eigen::VectorXd& params, const Cache& cache,
                   const Eigen::MatrixXd& grad_out, Eigen::VectorXd& grad) const {
  if (grad.size() != num_params()) grad = Eigen::VectorXd::Zero(num_params());
  Eigen::MatrixXd g = grad_out;
  for (int l = layers() - 1; l >= 0; --l) {
    const auto in = sizes_[static_cast<std::size_t>(l)];
    const auto out = sizes_[static_cast<std::size_t>(l) + 1];
    const auto& a_prev = cache.acts[static_cast<std::size_t>(l)];
    Eigen::Map<RowMatrix> dw(grad.data() + weight_offset(l), out, in);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + bias_offset(l), out);
    dw.noalias() += g * a_prev.transpose();
    db += g.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = weight(params, l).transpose() * g;
      g = back.array() * (1.0 - a_prev.array().square());
    }
  }
}

RowMatrix orthogonal(int rows, int cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool transpose = rows < cols;
  const int r = transpose ? cols : rows;
  const int c = transpose ? rows : cols;
  Eigen::MatrixXd a(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::MatrixXd rr = qr.matrixQR().topLeftCorner(c, c);
  for (int j = 0; j < c; ++j) {
    if (rr(j, j) < 0) q.col(j) *= -1.0;
  }
  RowMatrix out = transpose ? RowMatrix(q.transpose()) : RowMatrix(q);
  return out * gain;
}

Eigen::VectorXd Mlp::init_params(std::mt19937_64& rng, double hidden_gain,
                                 double output_gain) const {
  Eigen::VectorXd params = Eigen::VectorXd::Zero(num_params());
  for (int l = 0; l < layers(); ++l) {
    const auto in = sizes_[static_cast<std::size_t>(l)];
    const auto out = sizes_[static_cast<std::size_t>(l) + 1];
    const double gain = l + 1 < layers() ? hidden_gain : output_gain;
    Eigen::Map<RowMatrix>(params.data() + weight_offset(l), out, in) = orthogonal(out, in, gain, rng);
  }
  return params;
}

}  // namespace wavesmooth::control
