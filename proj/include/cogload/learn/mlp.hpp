#pragma once

// Fully connected network with rectifier hidden layers, a single logistic
// output and mean binary cross-entropy loss. Rows of every input matrix are
// samples. Templated on the scalar so the gradient check can run in any
// floating type.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cogload/error.hpp"
#include "cogload/random.hpp"

namespace cogload::learn {

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  return std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z)));
}

template <typename Scalar>
class BasicMlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Gradient {
    Scalar loss = Scalar(0);
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
  };

  BasicMlp() = default;

  /// `layer_sizes` = [inputs, hidden..., 1]; parameters start at zero.
  explicit BasicMlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2 || sizes_.back() != 1) {
      throw Error("learn", "BAD_ARCHITECTURE", "need [d, ..., 1]");
    }
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] < 1) throw Error("learn", "BAD_ARCHITECTURE", "layer width must be >= 1");
      weights_.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l]));
      biases_.push_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  void initialize(Rng& rng) {
    for (auto& w : weights_) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
      }
    }
    for (auto& b : biases_) b.setZero();
  }

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  const Matrix& weight(std::size_t l) const { return weights_[l]; }
  Matrix& weight(std::size_t l) { return weights_[l]; }
  const Vector& bias(std::size_t l) const { return biases_[l]; }
  Vector& bias(std::size_t l) { return biases_[l]; }

  /// Pre-activation of the output unit, one entry per row of `x`.
  Vector logits(const Matrix& x) const {
    Matrix a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = (a * weights_[l].transpose()).rowwise() + biases_[l].transpose();
      a = (l + 1 < weights_.size()) ? Matrix(z.cwiseMax(Scalar(0))) : z;
    }
    return a.col(0);
  }

  Vector predict_proba(const Matrix& x) const {
    return logits(x).unaryExpr([](Scalar z) { return sigmoid(z); });
  }

  Scalar loss(const Matrix& x, const Vector& y) const { return loss_from_logits(logits(x), y); }

  static Scalar loss_from_logits(const Vector& z, const Vector& y) {
    Scalar total(0);
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z(i)) - y(i) * z(i);
    return total / static_cast<Scalar>(z.size());
  }

  /// Loss and backpropagated gradient over the full batch.
  Gradient gradient(const Matrix& x, const Vector& y) const {
    const std::size_t L = weights_.size();
    std::vector<Matrix> acts{x};  // acts[l] = input to layer l
    std::vector<Matrix> pre;
    acts.reserve(L + 1);
    pre.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
      pre.push_back((acts[l] * weights_[l].transpose()).rowwise() + biases_[l].transpose());
      acts.push_back(l + 1 < L ? Matrix(pre[l].cwiseMax(Scalar(0))) : pre[l]);
    }
    const Vector z = pre.back().col(0);
    const auto n = static_cast<Scalar>(x.rows());

    Gradient g;
    g.loss = loss_from_logits(z, y);
    g.weights.resize(L);
    g.biases.resize(L);
    Matrix delta = (z.unaryExpr([](Scalar v) { return sigmoid(v); }) - y) / n;
    for (std::size_t l = L; l-- > 0;) {
      g.weights[l] = delta.transpose() * acts[l];
      g.biases[l] = delta.colwise().sum().transpose();
      if (l > 0) {
        const Matrix back = delta * weights_[l];
        delta = back.cwiseProduct(pre[l - 1].unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
      }
    }
    return g;
  }

  void descend(const Gradient& g, Scalar learning_rate) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l] -= learning_rate * g.weights[l];
      biases_[l] -= learning_rate * g.biases[l];
    }
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  /// Flat parameter view: each layer's weights (column-major) then biases.
  Scalar& parameter(Eigen::Index i) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (i < weights_[l].size()) return weights_[l].data()[i];
      i -= weights_[l].size();
      if (i < biases_[l].size()) return biases_[l](i);
      i -= biases_[l].size();
    }
    throw InvariantBreach("parameter index out of range");
  }

  /// Gradient flattened in the same order as parameter().
  Vector flatten(const Gradient& g) const {
    Vector out(parameter_count());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index i = 0; i < g.weights[l].size(); ++i) out(k++) = g.weights[l].data()[i];
      for (Eigen::Index i = 0; i < g.biases[l].size(); ++i) out(k++) = g.biases[l](i);
    }
    return out;
  }

  template <typename Other>
  BasicMlp<Other> cast() const {
    BasicMlp<Other> out(sizes_);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.weight(l) = weights_[l].template cast<Other>();
      out.bias(l) = biases_[l].template cast<Other>();
    }
    return out;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> weights_;  // weights_[l] is (out x in)
  std::vector<Vector> biases_;
};

using Mlp = BasicMlp<double>;

}  // namespace cogload::learn
