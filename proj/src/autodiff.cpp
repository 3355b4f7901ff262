#include "sqgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sqgan/errors.hpp"

namespace sqgan::ad {

std::size_t element_count(std::span<const int> shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ConfigError("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (element_count(shape) != data.size()) throw ConfigError("tensor data does not match its shape");
}

Tensor Tensor::zeros(std::vector<int> shape) {
  const auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

const Tensor& Gradients::of(Var v) const {
  if (!has(v)) {
    throw MissingGradientError("node " + std::to_string(v.id) + " has no gradient: it is detached "
                               "from the loss or does not require gradients");
  }
  return *grads_[static_cast<std::size_t>(v.id)];
}

bool Gradients::has(Var v) const {
  return v.id >= 0 && static_cast<std::size_t>(v.id) < grads_.size() &&
         grads_[static_cast<std::size_t>(v.id)].has_value();
}

namespace {

Tensor& grad_slot(std::vector<std::optional<Tensor>>& grads, int id, const std::vector<int>& shape) {
  auto& slot = grads[static_cast<std::size_t>(id)];
  if (!slot) slot = Tensor::zeros(shape);
  return *slot;
}

}  // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, std::vector<int> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(parents.begin(), parents.end(), [&](int p) {
    return nodes_[static_cast<std::size_t>(p)].requires_grad;
  });
  n.parents = std::move(parents);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::conv1d(Var x, Var w, Var b, int stride) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  const Tensor& Bv = value(b);
  if (X.shape.size() != 3 || W.shape.size() != 3 || Bv.shape.size() != 1) {
    throw ConfigError("conv1d expects x[B,Cin,L], w[Cout,Cin,K], b[Cout]");
  }
  const int batch = X.dim(0), cin = X.dim(1), len = X.dim(2);
  const int cout = W.dim(0), k = W.dim(2);
  if (W.dim(1) != cin || Bv.dim(0) != cout) throw ConfigError("conv1d channel mismatch");
  if (stride < 1 || k > len) throw ConfigError("conv1d kernel larger than its input");
  const int lout = (len - k) / stride + 1;
  Tensor out = Tensor::zeros({batch, cout, lout});
  auto xi = [=](int bb, int c, int l) { return (bb * cin + c) * len + l; };
  auto wi = [=](int o, int c, int kk) { return (o * cin + c) * k + kk; };
  auto oi = [=](int bb, int o, int l) { return (bb * cout + o) * lout + l; };
  for (int bb = 0; bb < batch; ++bb)
    for (int o = 0; o < cout; ++o)
      for (int l = 0; l < lout; ++l) {
        double s = Bv.data[o];
        for (int c = 0; c < cin; ++c)
          for (int kk = 0; kk < k; ++kk) s += W.data[wi(o, c, kk)] * X.data[xi(bb, c, l * stride + kk)];
        out.data[oi(bb, o, l)] = s;
      }
  return record(std::move(out), {x.id, w.id, b.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  const Tensor& Xv = value(x);
                  const Tensor& Wv = value(w);
                  const bool gx = node(x).requires_grad;
                  const bool gw = node(w).requires_grad;
                  const bool gb = node(b).requires_grad;
                  Tensor* dx = gx ? &grad_slot(grads, x.id, Xv.shape) : nullptr;
                  Tensor* dw = gw ? &grad_slot(grads, w.id, Wv.shape) : nullptr;
                  Tensor* db = gb ? &grad_slot(grads, b.id, value(b).shape) : nullptr;
                  for (int bb = 0; bb < batch; ++bb)
                    for (int o = 0; o < cout; ++o)
                      for (int l = 0; l < lout; ++l) {
                        const double go = g.data[oi(bb, o, l)];
                        if (db) db->data[o] += go;
                        for (int c = 0; c < cin; ++c)
                          for (int kk = 0; kk < k; ++kk) {
                            const int xin = xi(bb, c, l * stride + kk);
                            if (dw) dw->data[wi(o, c, kk)] += go * Xv.data[xin];
                            if (dx) dx->data[xin] += go * Wv.data[wi(o, c, kk)];
                          }
                      }
                });
}

Var Tape::dense(Var x, Var w, Var b) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  const Tensor& Bv = value(b);
  if (X.shape.empty() || W.shape.size() != 2 || Bv.shape.size() != 1) {
    throw ConfigError("dense expects x[B,...], w[out,in], b[out]");
  }
  const int batch = X.dim(0);
  const int in = static_cast<int>(X.size() / static_cast<std::size_t>(std::max(batch, 1)));
  const int nout = W.dim(0);
  if (W.dim(1) != in || Bv.dim(0) != nout) {
    throw ConfigError("dense layer expects " + std::to_string(W.dim(1)) + " inputs, got " +
                      std::to_string(in));
  }
  Tensor out = Tensor::zeros({batch, nout});
  for (int bb = 0; bb < batch; ++bb)
    for (int o = 0; o < nout; ++o) {
      double s = Bv.data[o];
      for (int i = 0; i < in; ++i) s += W.data[o * in + i] * X.data[bb * in + i];
      out.data[bb * nout + o] = s;
    }
  return record(std::move(out), {x.id, w.id, b.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  const Tensor& Xv = value(x);
                  const Tensor& Wv = value(w);
                  Tensor* dx = node(x).requires_grad ? &grad_slot(grads, x.id, Xv.shape) : nullptr;
                  Tensor* dw = node(w).requires_grad ? &grad_slot(grads, w.id, Wv.shape) : nullptr;
                  Tensor* db = node(b).requires_grad ? &grad_slot(grads, b.id, value(b).shape) : nullptr;
                  for (int bb = 0; bb < batch; ++bb)
                    for (int o = 0; o < nout; ++o) {
                      const double go = g.data[bb * nout + o];
                      if (db) db->data[o] += go;
                      for (int i = 0; i < in; ++i) {
                        if (dw) dw->data[o * in + i] += go * Xv.data[bb * in + i];
                        if (dx) dx->data[bb * in + i] += go * Wv.data[o * in + i];
                      }
                    }
                });
}

Var Tape::leaky_relu(Var x, double slope) {
  Tensor out = value(x);
  for (auto& v : out.data) v = v > 0.0 ? v : slope * v;
  return record(std::move(out), {x.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  if (!node(x).requires_grad) return;
                  const Tensor& Xv = value(x);
                  Tensor& dx = grad_slot(grads, x.id, Xv.shape);
                  for (std::size_t i = 0; i < Xv.size(); ++i) {
                    dx.data[i] += g.data[i] * (Xv.data[i] > 0.0 ? 1.0 : slope);
                  }
                });
}

Var Tape::sigmoid(Var x) {
  Tensor out = value(x);
  for (auto& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  const int self = static_cast<int>(nodes_.size());
  return record(std::move(out), {x.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  if (!node(x).requires_grad) return;
                  const Tensor& y = nodes_[static_cast<std::size_t>(self)].value;
                  Tensor& dx = grad_slot(grads, x.id, value(x).shape);
                  for (std::size_t i = 0; i < y.size(); ++i) {
                    dx.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
                  }
                });
}

Var Tape::flatten(Var x) {
  const Tensor& X = value(x);
  if (X.shape.empty()) throw ConfigError("flatten needs a batch dimension");
  const int batch = X.dim(0);
  const int rest = static_cast<int>(X.size() / static_cast<std::size_t>(std::max(batch, 1)));
  Tensor out({batch, rest}, X.data);
  return record(std::move(out), {x.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  if (!node(x).requires_grad) return;
                  Tensor& dx = grad_slot(grads, x.id, value(x).shape);
                  for (std::size_t i = 0; i < g.size(); ++i) dx.data[i] += g.data[i];
                });
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.shape != B.shape) throw ConfigError("add requires equal shapes");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
  return record(std::move(out), {a.id, b.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  for (Var v : {a, b}) {
                    if (!node(v).requires_grad) continue;
                    Tensor& d = grad_slot(grads, v.id, value(v).shape);
                    for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += g.data[i];
                  }
                });
}

Var Tape::scale(Var a, double factor) {
  Tensor out = value(a);
  for (auto& v : out.data) v *= factor;
  return record(std::move(out), {a.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  if (!node(a).requires_grad) return;
                  Tensor& d = grad_slot(grads, a.id, value(a).shape);
                  for (std::size_t i = 0; i < g.size(); ++i) d.data[i] += factor * g.data[i];
                });
}

Var Tape::bce(Var p, std::span<const double> labels) {
  const Tensor& P = value(p);
  if (P.size() != labels.size() || P.size() == 0) {
    throw ConfigError("bce: prediction count " + std::to_string(P.size()) +
                      " does not match label count " + std::to_string(labels.size()));
  }
  const double n = static_cast<double>(P.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double q = std::clamp(P.data[i], kBceClamp, 1.0 - kBceClamp);
    loss -= labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  std::vector<double> y(labels.begin(), labels.end());
  return record(Tensor({1}, {loss / n}), {p.id},
                [=, this](const Tensor& g, std::vector<std::optional<Tensor>>& grads) {
                  if (!node(p).requires_grad) return;
                  const Tensor& Pv = value(p);
                  Tensor& dp = grad_slot(grads, p.id, Pv.shape);
                  for (std::size_t i = 0; i < Pv.size(); ++i) {
                    const double raw = Pv.data[i];
                    if (raw < kBceClamp || raw > 1.0 - kBceClamp) continue;
                    dp.data[i] += g.data[0] * (-(y[i] / raw) + (1.0 - y[i]) / (1.0 - raw)) / n;
                  }
                });
}

Gradients Tape::backward(Var loss) const {
  if (loss.id < 0 || static_cast<std::size_t>(loss.id) >= nodes_.size()) {
    throw ArgumentError("loss is not recorded on this tape");
  }
  const Node& root = node(loss);
  if (root.value.size() != 1) throw ArgumentError("backward needs a scalar loss");
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[static_cast<std::size_t>(loss.id)] = Tensor(root.value.shape, {1.0});
  for (int i = loss.id; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!grads[static_cast<std::size_t>(i)] || n.is_leaf || !n.requires_grad) continue;
    n.backward(*grads[static_cast<std::size_t>(i)], grads);
  }
  // Leaves that were never marked trainable do not report gradients.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].requires_grad) grads[i].reset();
  }
  return Gradients(std::move(grads));
}

}  // namespace sqgan::ad
