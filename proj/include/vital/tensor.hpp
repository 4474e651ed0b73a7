#pragma once

// Dense row-major tensors with tape-free reverse-mode differentiation.
//
// Every op returns a new immutable Tensor. When at least one input requires a
// gradient the result remembers its inputs and a backward rule, so the graph
// is built implicitly by evaluation and walked by backward().

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vital/errors.hpp"

namespace vital::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node;

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rank() const { return shape().size(); }
  std::span<const double> values() const;
  double operator[](std::size_t i) const { return values()[i]; }
  /// Value of a single-element tensor.
  double item() const;
  bool requires_grad() const;
  /// True for tensors created directly (not produced by an op).
  bool is_leaf() const;
  std::uint64_t id() const;

  /// Same values, cut from the graph.
  Tensor detach() const;

  /// Overwrites the values of a leaf parameter in place. Used by optimizers;
  /// any graph built from this tensor earlier keeps the old values.
  void assign(std::vector<double> values);

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>,
                            std::function<void(const std::vector<double>&,
                                               std::vector<std::vector<double>*>&)>);

  std::shared_ptr<Node> node_;
};

using BackwardFn =
    std::function<void(const std::vector<double>& grad_out, std::vector<std::vector<double>*>& grad_in)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  bool leaf = true;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

/// Builds an op result. Inputs and the backward rule are dropped when no
/// input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs, BackwardFn backward);

/// Gradient table produced by backward().
class Gradients {
 public:
  /// Gradient of the loss with respect to `t`; all zeros when the loss does
  /// not depend on it.
  std::vector<double> of(const Tensor& t) const;
  bool contains(const Tensor& t) const { return table_.count(t.node().get()) != 0; }

 private:
  friend Gradients backward(const Tensor& loss);
  std::unordered_map<const Node*, std::vector<double>> table_;
};

/// Reverse-mode sweep from a scalar loss. Throws ContractError on non-scalar.
Gradients backward(const Tensor& loss);

// Forward ops. Shape mismatches throw DimensionError naming both shapes.

/// Elementwise sum. `b` may also be a vector matching the last dimension of
/// `a`, in which case it is added to every row.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// scale * a + shift
Tensor affine(const Tensor& a, double scale, double shift);
Tensor matmul(const Tensor& a, const Tensor& b);
/// out[..., k, i, j] = map[..., k, i, j] * mask[..., i, j]. Accepts a
/// K x H x W map with an H x W mask, or a batched N x K x H x W map with an
/// N x H x W mask.
Tensor broadcast_mul_spatial(const Tensor& map, const Tensor& mask);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// Natural log; input must be strictly positive.
Tensor log(const Tensor& a);
/// Gradient passes through inside [lo, hi] and is zero outside.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Concatenation along the leading axis.
Tensor concat(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& a, Shape shape);

/// Glorot-uniform weights in [-a, a], a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_parameter(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

struct SgdConfig {
  double learning_rate = 1e-3;
  double momentum = 0.0;
  double weight_decay = 0.0;

  void validate() const;
};

/// Plain SGD with optional momentum: v <- mu v + (g + wd p); p <- p - lr v.
/// Momentum buffers are keyed by parameter identity.
class Sgd {
 public:
  explicit Sgd(SgdConfig config);

  const SgdConfig& config() const { return config_; }
  void set_learning_rate(double lr);
  void step(std::span<Tensor> params, const Gradients& grads);
  /// Same, with gradients supplied explicitly in parameter order.
  void step(std::span<Tensor> params, std::span<const std::vector<double>> grads);

 private:
  SgdConfig config_;
  std::unordered_map<std::uint64_t, std::vector<double>> velocity_;
};

/// Stateless single step (momentum buffer starts from zero).
void sgd_step(std::span<Tensor> params, const Gradients& grads, const SgdConfig& config);

}  // namespace vital::ad
