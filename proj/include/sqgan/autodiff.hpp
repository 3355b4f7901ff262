#pragma once

// Minimal tensor-level reverse-mode automatic differentiation: each recorded
// operation stores its output and a closure that pushes the output gradient
// back onto its inputs.

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sqgan::ad {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> shape_, std::vector<double> data_);
  static Tensor zeros(std::vector<int> shape);

  std::size_t size() const noexcept { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
};

std::size_t element_count(std::span<const int> shape);

class Tape;

// Handle to a node recorded on a tape.
struct Var {
  int id = -1;
};

class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<Tensor>> grads) : grads_(std::move(grads)) {}
  // Throws MissingGradientError when `v` does not feed the loss or was
  // recorded without requires_grad.
  const Tensor& of(Var v) const;
  bool has(Var v) const;

 private:
  std::vector<std::optional<Tensor>> grads_;
};

class Tape {
 public:
  // Leaf node; gradients are reported only for leaves with requires_grad.
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // x [B, Cin, L], w [Cout, Cin, K], b [Cout] -> [B, Cout, (L-K)/stride+1]
  Var conv1d(Var x, Var w, Var b, int stride = 1);
  // x [B, ...] (trailing dims flattened to `in`), w [out, in], b [out] -> [B, out]
  Var dense(Var x, Var w, Var b);
  Var leaky_relu(Var x, double slope);
  Var sigmoid(Var x);
  Var flatten(Var x);
  Var add(Var a, Var b);
  Var scale(Var a, double factor);
  // Mean binary cross-entropy of probabilities p (any shape with B elements)
  // against 0/1 labels; p is clamped to [1e-7, 1 - 1e-7].
  Var bce(Var p, std::span<const double> labels);

  const Tensor& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Gradients backward(Var loss) const;

 private:
  using Backward = std::function<void(const Tensor& out_grad, std::vector<std::optional<Tensor>>& grads)>;
  struct Node {
    Tensor value;
    bool requires_grad = false;
    bool is_leaf = false;
    std::vector<int> parents;
    Backward backward;
  };

  Var record(Tensor value, std::vector<int> parents, Backward backward);
  const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }

  std::vector<Node> nodes_;
};

inline constexpr double kBceClamp = 1e-7;

}  // namespace sqgan::ad
