// Copyright 2026 The ombrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OMBRL_NEURAL_MLP_HPP_
#define OMBRL_NEURAL_MLP_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ombrl/common.hpp"

namespace ombrl {

enum class Activation { kTanh, kRelu, kIdentity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "tanh";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

// Fully connected feed-forward network with a flat parameter vector.
//
// Parameter layout, layer by layer: the weight matrix (fan_out x fan_in,
// row-major) followed by the bias vector (fan_out). Hidden layers apply the
// activation, the output layer is linear.
class MlpNet {
 public:
  struct Linearization {
    Vec output;
    Mat input_jacobian;  // output_dim x input_dim
    Mat param_jacobian;  // output_dim x num_params
  };

  MlpNet() = default;

  // All parameters zero.
  MlpNet(std::vector<int> layer_dims, Activation activation)
      : dims_(std::move(layer_dims)), activation_(activation) {
    require(dims_.size() >= 2, "MlpNet needs at least input and output widths");
    std::size_t n = 0;
    offsets_.reserve(dims_.size() - 1);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      require(dims_[l] > 0 && dims_[l + 1] > 0, "MlpNet layer widths must be positive");
      offsets_.push_back(n);
      n += static_cast<std::size_t>(dims_[l] + 1) * static_cast<std::size_t>(dims_[l + 1]);
    }
    params_ = Vec::Zero(static_cast<Eigen::Index>(n));
  }

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static MlpNet random(std::vector<int> layer_dims, Activation activation, Rng& rng) {
    MlpNet net(std::move(layer_dims), activation);
    for (int l = 0; l < net.num_layers(); ++l) {
      const double s = 1.0 / std::sqrt(static_cast<double>(net.dims_[l]));
      std::uniform_real_distribution<double> dist(-s, s);
      const std::size_t begin = net.offsets_[l];
      const std::size_t end = begin + static_cast<std::size_t>(net.dims_[l] + 1) * net.dims_[l + 1];
      for (std::size_t i = begin; i < end; ++i) net.params_[static_cast<Eigen::Index>(i)] = dist(rng);
    }
    return net;
  }

  const std::vector<int>& layer_dims() const { return dims_; }
  Activation activation() const { return activation_; }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  Eigen::Index num_params() const { return params_.size(); }

  const Vec& params() const { return params_; }
  void set_params(const Vec& p) {
    require(p.size() == params_.size(), "MlpNet::set_params: length mismatch");
    params_ = p;
  }

  Eigen::Map<const RowMat> weight(int l) const {
    return {params_.data() + offsets_[l], dims_[l + 1], dims_[l]};
  }
  Eigen::Map<RowMat> weight(int l) {
    return {params_.data() + offsets_[l], dims_[l + 1], dims_[l]};
  }
  Eigen::Map<const Vec> bias(int l) const {
    return {params_.data() + offsets_[l] + static_cast<std::size_t>(dims_[l]) * dims_[l + 1], dims_[l + 1]};
  }
  Eigen::Map<Vec> bias(int l) {
    return {params_.data() + offsets_[l] + static_cast<std::size_t>(dims_[l]) * dims_[l + 1], dims_[l + 1]};
  }
  std::size_t weight_offset(int l) const { return offsets_[l]; }
  std::size_t bias_offset(int l) const {
    return offsets_[l] + static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
  }

  Vec forward(const Vec& input) const {
    check_input(input);
    Vec h = input;
    for (int l = 0; l < num_layers(); ++l) {
      Vec a = weight(l) * h + bias(l);
      h = is_output(l) ? std::move(a) : activate(a);
    }
    return h;
  }

  // v^T (d output / d params).
  Vec grad_params(const Vec& input, const Vec& cotangent) const {
    check_input(input);
    require(cotangent.size() == output_dim(), "MlpNet::grad_params: cotangent length mismatch");
    const Tape tape = record(input);
    Vec grad = Vec::Zero(num_params());
    backward(tape, cotangent, grad);
    return grad;
  }

  Mat input_jacobian(const Vec& input) const {
    check_input(input);
    return input_jacobian_from(record(input));
  }

  // Row i is grad_params with cotangent e_i.
  Mat param_jacobian(const Vec& input) const {
    check_input(input);
    return param_jacobian_from(record(input));
  }

  Linearization linearize(const Vec& input) const {
    check_input(input);
    const Tape tape = record(input);
    return {tape.outputs.back(), input_jacobian_from(tape), param_jacobian_from(tape)};
  }

  // Mean squared error over the columns of `inputs`/`targets`:
  //   (1/N) sum_i ||net(inputs_i) - targets_i||^2
  // and, if `grad` is non-null, its gradient w.r.t. the parameters.
  double mse(const Mat& inputs, const Mat& targets, Vec* grad) const {
    require(inputs.rows() == input_dim(), "MlpNet::mse: input rows mismatch");
    require(targets.rows() == output_dim() && targets.cols() == inputs.cols(),
            "MlpNet::mse: target shape mismatch");
    require(inputs.cols() > 0, "MlpNet::mse: empty batch");
    const double n = static_cast<double>(inputs.cols());
    std::vector<Mat> outputs;
    outputs.reserve(num_layers() + 1);
    outputs.push_back(inputs);
    for (int l = 0; l < num_layers(); ++l) {
      Mat a = weight(l) * outputs.back();
      a.colwise() += bias(l);
      if (!is_output(l)) a = activate(a);
      outputs.push_back(std::move(a));
    }
    const Mat residual = outputs.back() - targets;
    const double loss = residual.squaredNorm() / n;
    if (grad == nullptr) return loss;

    *grad = Vec::Zero(num_params());
    Mat delta = (2.0 / n) * residual;
    for (int l = num_layers() - 1; l >= 0; --l) {
      Eigen::Map<RowMat>(grad->data() + offsets_[l], dims_[l + 1], dims_[l]).noalias() =
          delta * outputs[l].transpose();
      Eigen::Map<Vec>(grad->data() + bias_offset(l), dims_[l + 1]) = delta.rowwise().sum();
      if (l > 0) {
        Mat back = weight(l).transpose() * delta;
        delta = back.cwiseProduct(activation_derivative_from_output(outputs[l]));
      }
    }
    return loss;
  }

 private:
  struct Tape {
    std::vector<Vec> outputs;  // outputs[0] = input, outputs[l+1] = layer l output
  };

  bool is_output(int l) const { return l == num_layers() - 1; }

  void check_input(const Vec& input) const {
    require(input.size() == input_dim(), "MlpNet: input length " + std::to_string(input.size()) +
                                             " != " + std::to_string(input_dim()));
  }

  template <typename Derived>
  Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime> activate(
      const Eigen::MatrixBase<Derived>& a) const {
    switch (activation_) {
      case Activation::kTanh: return a.array().tanh().matrix();
      case Activation::kRelu: return a.cwiseMax(0.0);
      case Activation::kIdentity: return a;
    }
    return a;
  }

  // Derivative of the activation expressed through its output h.
  template <typename Derived>
  Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>
  activation_derivative_from_output(const Eigen::MatrixBase<Derived>& h) const {
    using Out = Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
    switch (activation_) {
      case Activation::kTanh: return (1.0 - h.array().square()).matrix();
      case Activation::kRelu: return (h.array() > 0.0).template cast<double>().matrix();
      case Activation::kIdentity: return Out::Ones(h.rows(), h.cols());
    }
    return Out::Ones(h.rows(), h.cols());
  }

  Tape record(const Vec& input) const {
    Tape tape;
    tape.outputs.reserve(num_layers() + 1);
    tape.outputs.push_back(input);
    for (int l = 0; l < num_layers(); ++l) {
      Vec a = weight(l) * tape.outputs.back() + bias(l);
      tape.outputs.push_back(is_output(l) ? std::move(a) : activate(a));
    }
    return tape;
  }

  void backward(const Tape& tape, const Vec& cotangent, Vec& grad) const {
    Vec delta = cotangent;
    for (int l = num_layers() - 1; l >= 0; --l) {
      Eigen::Map<RowMat>(grad.data() + offsets_[l], dims_[l + 1], dims_[l]).noalias() =
          delta * tape.outputs[l].transpose();
      Eigen::Map<Vec>(grad.data() + bias_offset(l), dims_[l + 1]) = delta;
      if (l > 0) {
        Vec back = weight(l).transpose() * delta;
        delta = back.cwiseProduct(activation_derivative_from_output(tape.outputs[l]));
      }
    }
  }

  Mat input_jacobian_from(const Tape& tape) const {
    Mat jac = weight(0);
    for (int l = 1; l < num_layers(); ++l) {
      jac = activation_derivative_from_output(tape.outputs[l]).asDiagonal() * jac;
      jac = weight(l) * jac;
    }
    return jac;
  }

  Mat param_jacobian_from(const Tape& tape) const {
    Mat jac(output_dim(), num_params());
    Vec row(num_params());
    for (int i = 0; i < output_dim(); ++i) {
      row.setZero();
      backward(tape, Vec::Unit(output_dim(), i), row);
      jac.row(i) = row.transpose();
    }
    return jac;
  }

  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  Activation activation_ = Activation::kTanh;
  Vec params_;
};

}  // namespace ombrl

#endif  // OMBRL_NEURAL_MLP_HPP_
