#include "vital/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vital::ad {

namespace {

std::atomic<std::uint64_t> next_id{1};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

std::shared_ptr<Node> new_node(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " holds " + std::to_string(shape_size(shape)) +
                         " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  node->id = next_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
}

void accumulate(std::vector<double>* dst, const std::vector<double>& src) {
  if (dst == nullptr) return;
  for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += src[i];
}

template <class F>
Tensor unary(const Tensor& a, F&& f, BackwardFn bw) {
  std::vector<double> out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(a.shape(), std::move(out), {a}, std::move(bw));
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(new_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(new_node(std::move(shape), std::move(values), true));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

Tensor Tensor::zeros(Shape shape) {
  auto n = shape_size(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::ones(Shape shape) {
  auto n = shape_size(shape);
  return constant(std::move(shape), std::vector<double>(n, 1.0));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }
std::span<const double> Tensor::values() const { return node_->value; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->leaf; }
std::uint64_t Tensor::id() const { return node_->id; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

Tensor Tensor::detach() const { return constant(shape(), node_->value); }

void Tensor::assign(std::vector<double> values) {
  if (!node_->leaf) throw ContractError("assign() on a non-leaf tensor");
  if (values.size() != node_->value.size()) {
    throw DimensionError("assign: expected " + std::to_string(node_->value.size()) + " values, got " +
                         std::to_string(values.size()));
  }
  node_->value = std::move(values);
}

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs, BackwardFn backward) {
  bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  auto node = new_node(std::move(shape), std::move(value), any);
  node->leaf = false;
  if (any) {
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

std::vector<double> Gradients::of(const Tensor& t) const {
  auto it = table_.find(t.node().get());
  if (it == table_.end()) return std::vector<double>(t.size(), 0.0);
  return it->second;
}

Gradients backward(const Tensor& loss) {
  if (loss.size() != 1) throw ContractError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
  Gradients grads;
  if (!loss.requires_grad()) return grads;

  // Iterative post-order DFS gives a topological order without recursion.
  std::vector<Node*> order;
  std::unordered_map<const Node*, bool> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen[loss.node().get()] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && !seen[child]) {
        seen[child] = true;
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  auto& table = grads.table_;
  table[loss.node().get()] = {1.0};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->leaf || !node->backward) continue;
    auto gout = table.find(node);
    if (gout == table.end()) continue;
    std::vector<std::vector<double>*> gin(node->inputs.size(), nullptr);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      Node* in = node->inputs[i].get();
      if (!in->requires_grad) continue;
      auto& slot = table[in];
      if (slot.empty()) slot.assign(in->value.size(), 0.0);
      gin[i] = &slot;
    }
    node->backward(gout->second, gin);
  }
  // Intermediate gradients are kept; callers look up what they need.
  return grads;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](const auto& g, auto& gin) {
      accumulate(gin[0], g);
      accumulate(gin[1], g);
    });
  }
  if (b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.shape()[0]) {
    const std::size_t cols = b.size();
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i % cols];
    return make_result(a.shape(), std::move(out), {a, b}, [cols](const auto& g, auto& gin) {
      accumulate(gin[0], g);
      if (gin[1]) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i % cols] += g[i];
      }
    });
  }
  mismatch("add", a, b);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](const auto& g, auto& gin) {
    accumulate(gin[0], g);
    if (gin[1]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i] -= g[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  auto an = a.node(), bn = b.node();
  return make_result(a.shape(), std::move(out), {a, b}, [an, bn](const auto& g, auto& gin) {
    if (gin[0]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * bn->value[i];
    }
    if (gin[1]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i] += g[i] * an->value[i];
    }
  });
}

Tensor affine(const Tensor& a, double scale, double shift) {
  return unary(a, [=](double x) { return scale * x + shift; }, [scale](const auto& g, auto& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += scale * g[i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) mismatch("matmul", a, b);
  const auto n = static_cast<Eigen::Index>(a.shape()[0]);
  const auto k = static_cast<Eigen::Index>(a.shape()[1]);
  const auto m = static_cast<Eigen::Index>(b.shape()[1]);
  std::vector<double> out(static_cast<std::size_t>(n * m));
  MutMap(out.data(), n, m).noalias() = ConstMap(a.values().data(), n, k) * ConstMap(b.values().data(), k, m);
  auto an = a.node(), bn = b.node();
  return make_result({a.shape()[0], b.shape()[1]}, std::move(out), {a, b},
                     [an, bn, n, k, m](const auto& g, auto& gin) {
                       ConstMap gm(g.data(), n, m);
                       if (gin[0]) {
                         MutMap(gin[0]->data(), n, k).noalias() += gm * ConstMap(bn->value.data(), k, m).transpose();
                       }
                       if (gin[1]) {
                         MutMap(gin[1]->data(), k, m).noalias() += ConstMap(an->value.data(), n, k).transpose() * gm;
                       }
                     });
}

Tensor broadcast_mul_spatial(const Tensor& map, const Tensor& mask) {
  std::size_t batch = 0, channels = 0, h = 0, w = 0;
  if (map.rank() == 3 && mask.rank() == 2) {
    batch = 1;
    channels = map.shape()[0];
    h = map.shape()[1];
    w = map.shape()[2];
    if (mask.shape()[0] != h || mask.shape()[1] != w) mismatch("broadcast_mul_spatial", map, mask);
  } else if (map.rank() == 4 && mask.rank() == 3) {
    batch = map.shape()[0];
    channels = map.shape()[1];
    h = map.shape()[2];
    w = map.shape()[3];
    if (mask.shape()[0] != batch || mask.shape()[1] != h || mask.shape()[2] != w) {
      mismatch("broadcast_mul_spatial", map, mask);
    }
  } else {
    mismatch("broadcast_mul_spatial", map, mask);
  }
  const std::size_t cells = h * w;
  std::vector<double> out(map.size());
  auto mv = map.values();
  auto kv = mask.values();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * cells;
      for (std::size_t s = 0; s < cells; ++s) out[base + s] = mv[base + s] * kv[n * cells + s];
    }
  }
  auto mn = map.node(), kn = mask.node();
  return make_result(map.shape(), std::move(out), {map, mask},
                     [mn, kn, batch, channels, cells](const auto& g, auto& gin) {
                       for (std::size_t n = 0; n < batch; ++n) {
                         for (std::size_t c = 0; c < channels; ++c) {
                           const std::size_t base = (n * channels + c) * cells;
                           for (std::size_t s = 0; s < cells; ++s) {
                             if (gin[0]) (*gin[0])[base + s] += g[base + s] * kn->value[n * cells + s];
                             if (gin[1]) (*gin[1])[n * cells + s] += g[base + s] * mn->value[base + s];
                           }
                         }
                       }
                     });
}

Tensor relu(const Tensor& a) {
  auto an = a.node();
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [an](const auto& g, auto& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (an->value[i] > 0.0) (*gin[0])[i] += g[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  Tensor result = unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      nullptr);
  if (!result.requires_grad()) return result;
  // The rule needs the output values, so attach it after evaluation.
  Node* self = result.node().get();
  self->backward = [self](const auto& g, auto& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = self->value[i];
      (*gin[0])[i] += g[i] * s * (1.0 - s);
    }
  };
  return result;
}

Tensor log(const Tensor& a) {
  for (double x : a.values()) {
    if (!(x > 0.0)) throw ContractError("log: input must be strictly positive");
  }
  auto an = a.node();
  return unary(a, [](double x) { return std::log(x); }, [an](const auto& g, auto& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] / an->value[i];
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  auto an = a.node();
  return unary(a, [=](double x) { return std::clamp(x, lo, hi); }, [an, lo, hi](const auto& g, auto& gin) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = an->value[i];
      if (x >= lo && x <= hi) (*gin[0])[i] += g[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  auto v = a.values();
  double total = std::accumulate(v.begin(), v.end(), 0.0);
  return make_result({}, {total}, {a}, [](const auto& g, auto& gin) {
    for (auto& x : *gin[0]) x += g[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ContractError("mean of an empty tensor");
  auto v = a.values();
  const double n = static_cast<double>(a.size());
  double total = std::accumulate(v.begin(), v.end(), 0.0);
  return make_result({}, {total / n}, {a}, [n](const auto& g, auto& gin) {
    for (auto& x : *gin[0]) x += g[0] / n;
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  Shape shape = parts.front().shape();
  if (shape.empty()) throw DimensionError("concat: rank-0 tensors have no leading axis");
  std::size_t lead = 0;
  for (const auto& p : parts) {
    if (p.rank() != shape.size() || !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1)) {
      mismatch("concat", parts.front(), p);
    }
    lead += p.shape()[0];
  }
  shape[0] = lead;
  std::vector<double> out;
  out.reserve(shape_size(shape));
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return make_result(std::move(shape), std::move(out), parts, [offsets](const auto& g, auto& gin) {
    for (std::size_t i = 0; i < gin.size(); ++i) {
      if (!gin[i]) continue;
      for (std::size_t j = 0; j < gin[i]->size(); ++j) (*gin[i])[j] += g[offsets[i] + j];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(out), {a}, [](const auto& g, auto& gin) { accumulate(gin[0], g); });
}

Tensor glorot_parameter(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> w(fan_in * fan_out);
  for (auto& x : w) x = dist(rng);
  return Tensor::parameter({fan_in, fan_out}, std::move(w));
}

void SgdConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
}

Sgd::Sgd(SgdConfig config) : config_(config) { config_.validate(); }

void Sgd::set_learning_rate(double lr) {
  config_.learning_rate = lr;
  config_.validate();
}

void Sgd::step(std::span<Tensor> params, const Gradients& grads) {
  std::vector<std::vector<double>> g;
  g.reserve(params.size());
  for (const auto& p : params) g.push_back(grads.of(p));
  step(params, g);
}

void Sgd::step(std::span<Tensor> params, std::span<const std::vector<double>> grads) {
  if (params.size() != grads.size()) throw ContractError("sgd: parameter and gradient lists differ in length");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& g = grads[i];
    if (g.size() != p.size()) throw DimensionError("sgd: gradient size does not match parameter");
    std::vector<double> values(p.values().begin(), p.values().end());
    if (config_.momentum > 0.0) {
      auto& v = velocity_[p.id()];
      if (v.empty()) v.assign(values.size(), 0.0);
      for (std::size_t j = 0; j < values.size(); ++j) {
        v[j] = config_.momentum * v[j] + (g[j] + config_.weight_decay * values[j]);
        values[j] -= config_.learning_rate * v[j];
      }
    } else {
      for (std::size_t j = 0; j < values.size(); ++j) {
        values[j] -= config_.learning_rate * (g[j] + config_.weight_decay * values[j]);
      }
    }
    p.assign(std::move(values));
  }
}

void sgd_step(std::span<Tensor> params, const Gradients& grads, const SgdConfig& config) {
  Sgd opt(config);
  opt.step(params, grads);
}

}  // namespace vital::ad
