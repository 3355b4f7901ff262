#include "sqgan/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sqgan/errors.hpp"

namespace sqgan::adv {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::string describe(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv1dSpec>) {
          return "conv1d(" + std::to_string(l.in_channels) + "->" + std::to_string(l.out_channels) +
                 ",k=" + std::to_string(l.kernel) + ",s=" + std::to_string(l.stride) + ")";
        } else if constexpr (std::is_same_v<T, DenseSpec>) {
          return "dense(" + std::to_string(l.in) + "->" + std::to_string(l.out) + ")";
        } else if constexpr (std::is_same_v<T, LeakyReluSpec>) {
          return "leaky_relu(" + std::to_string(l.slope) + ")";
        } else if constexpr (std::is_same_v<T, SigmoidSpec>) {
          return "sigmoid";
        } else {
          return "flatten";
        }
      },
      layer);
}

DiscriminatorNet::DiscriminatorNet(std::vector<LayerSpec> layers, int input_dim)
    : layers_(std::move(layers)), input_dim_(input_dim) {
  if (input_dim < 1) throw ConfigError("discriminator input dimension must be >= 1");
  if (layers_.empty() || !std::holds_alternative<SigmoidSpec>(layers_.back())) {
    throw ConfigError("discriminator must end with a sigmoid");
  }
  // Shape walk: (channels, length) until flattened, then (features).
  int channels = 1;
  int length = input_dim;
  bool flat = false;
  for (const auto& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Conv1dSpec>) {
            if (flat) throw ConfigError("conv1d after flatten");
            if (l.in_channels != channels) {
              throw ConfigError(describe(l) + " expects " + std::to_string(l.in_channels) +
                                " channels, input has " + std::to_string(channels));
            }
            if (l.kernel < 1 || l.stride < 1 || l.kernel > length || l.out_channels < 1) {
              throw ConfigError(describe(l) + " does not fit an input of length " +
                                std::to_string(length));
            }
            length = (length - l.kernel) / l.stride + 1;
            channels = l.out_channels;
            params_.push_back(Tensor::zeros({l.out_channels, l.in_channels, l.kernel}));
            params_.push_back(Tensor::zeros({l.out_channels}));
          } else if constexpr (std::is_same_v<T, DenseSpec>) {
            const int in = flat ? length : channels * length;
            if (l.in != in || l.out < 1) {
              throw ConfigError(describe(l) + " receives " + std::to_string(in) + " features");
            }
            flat = true;
            length = l.out;
            channels = 1;
            params_.push_back(Tensor::zeros({l.out, l.in}));
            params_.push_back(Tensor::zeros({l.out}));
          } else if constexpr (std::is_same_v<T, FlattenSpec>) {
            if (!flat) length *= channels;
            channels = 1;
            flat = true;
          }
        },
        layer);
  }
  if (channels * length != 1) {
    throw ConfigError("discriminator output dimension is " + std::to_string(channels * length) +
                      ", expected 1");
  }
}

void DiscriminatorNet::init_glorot(std::mt19937_64& rng) {
  for (std::size_t i = 0; i < params_.size(); i += 2) {
    auto& w = params_[i];
    int fan_in, fan_out;
    if (w.shape.size() == 3) {
      fan_in = w.dim(1) * w.dim(2);
      fan_out = w.dim(0) * w.dim(2);
    } else {
      fan_in = w.dim(1);
      fan_out = w.dim(0);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (auto& v : w.data) v = u(rng);
    std::fill(params_[i + 1].data.begin(), params_[i + 1].data.end(), 0.0);
  }
}

void DiscriminatorNet::negate_output() {
  if (params_.size() < 2 || params_[params_.size() - 2].shape.size() != 2) {
    throw ConfigError("negate_output needs a final dense layer");
  }
  for (auto i : {params_.size() - 2, params_.size() - 1}) {
    for (auto& v : params_[i].data) v = -v;
  }
}

DiscriminatorNet::Taped DiscriminatorNet::forward_on(Tape& tape, std::span<const double> batch,
                                                     bool input_requires_grad) const {
  if (batch.size() % static_cast<std::size_t>(input_dim_) != 0) {
    throw ConfigError("batch width does not match the discriminator input dimension " +
                      std::to_string(input_dim_));
  }
  const int b = static_cast<int>(batch.size() / static_cast<std::size_t>(input_dim_));
  Taped t;
  t.input = tape.leaf(Tensor({b, 1, input_dim_}, {batch.begin(), batch.end()}), input_requires_grad);
  for (const auto& p : params_) t.params.push_back(tape.leaf(p, true));
  Var h = t.input;
  std::size_t pi = 0;
  for (const auto& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, Conv1dSpec>) {
            h = tape.conv1d(h, t.params[pi], t.params[pi + 1], l.stride);
            pi += 2;
          } else if constexpr (std::is_same_v<T, DenseSpec>) {
            h = tape.dense(h, t.params[pi], t.params[pi + 1]);
            pi += 2;
          } else if constexpr (std::is_same_v<T, LeakyReluSpec>) {
            h = tape.leaky_relu(h, l.slope);
          } else if constexpr (std::is_same_v<T, SigmoidSpec>) {
            t.logit = h;
            h = tape.sigmoid(h);
          } else {
            h = tape.flatten(h);
          }
        },
        layer);
  }
  t.output = h;
  return t;
}

std::vector<double> DiscriminatorNet::forward(std::span<const double> batch) const {
  Tape tape;
  const auto t = forward_on(tape, batch, false);
  return tape.value(t.output).data;
}

std::vector<LayerSpec> default_discriminator_layers(int input_dim) {
  if (input_dim < 1) throw ConfigError("discriminator input dimension must be >= 1");
  const int k1 = std::min(2, input_dim);
  const int l1 = input_dim - k1 + 1;
  const int k2 = std::min(2, l1);
  const int l2 = l1 - k2 + 1;
  return {Conv1dSpec{1, 8, k1, 1}, LeakyReluSpec{0.2},  Conv1dSpec{8, 16, k2, 1},
          LeakyReluSpec{0.2},      FlattenSpec{},       DenseSpec{16 * l2, 32},
          LeakyReluSpec{0.2},      DenseSpec{32, 1},    SigmoidSpec{}};
}

std::vector<double> discriminator_forward(const DiscriminatorNet& net, std::span<const double> batch) {
  return net.forward(batch);
}

double bce_loss(std::span<const double> pred, std::span<const double> labels) {
  Tape tape;
  const Var p = tape.constant(Tensor({static_cast<int>(pred.size())}, {pred.begin(), pred.end()}));
  return tape.value(tape.bce(p, labels)).data[0];
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw ConfigError("adam: parameter/gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw ConfigError("adam: state size mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void TrainConfig::validate(std::size_t k) const {
  if (batch_size < 1 || n_epochs < 1 || discriminator_steps < 1 || steps_per_epoch < 0) {
    throw ConfigError("batch_size, n_epochs and discriminator_steps must be positive");
  }
  if (static_cast<std::size_t>(batch_size) > k) {
    throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds the training set size " +
                      std::to_string(k));
  }
  if (!(lr_g > 0) || !(lr_d > 0) || !(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1) ||
      !(eps > 0)) {
    throw ConfigError("learning rates and Adam moments must be positive (betas below 1)");
  }
  if (!(gen_weight_init >= 0) || !(gen_bias_init >= 0)) {
    throw ConfigError("generator init scales must be non-negative");
  }
}

double discriminator_accuracy(const DiscriminatorNet& net, std::span<const double> real,
                              std::span<const double> fake) {
  const auto pr = net.forward(real);
  const auto pf = net.forward(fake);
  const double ar = static_cast<double>(std::count_if(pr.begin(), pr.end(), [](double p) { return p > 0.5; }));
  const double af = static_cast<double>(std::count_if(pf.begin(), pf.end(), [](double p) { return p < 0.5; }));
  return 0.5 * (ar / static_cast<double>(pr.size()) + af / static_cast<double>(pf.size()));
}

namespace {

struct FakeBatch {
  std::vector<double> x;                               // [B x N]
  std::vector<std::vector<std::vector<double>>> jac;   // per sample: N x 2P
};

FakeBatch make_fake(const gen::StyleAnsatz& ansatz, const gen::ParamVector& params, int batch,
                    bool with_jacobian, std::mt19937_64& rng) {
  FakeBatch fb;
  fb.x.reserve(static_cast<std::size_t>(batch * ansatz.base_qubits));
  for (int s = 0; s < batch; ++s) {
    const auto latent = gen::LatentTensor::standard_normal(1, ansatz.latent_dim, rng);
    const auto x = gen::exact_sample(ansatz, params, latent.row(0));
    fb.x.insert(fb.x.end(), x.begin(), x.end());
    if (with_jacobian) fb.jac.push_back(gen::sample_jacobian(ansatz, params, latent.row(0)));
  }
  return fb;
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const double> data, std::size_t k,
                  const gen::StyleAnsatz& ansatz_in, const TrainHooks& hooks) {
  const auto ansatz = ansatz_in.with_replicas(1);
  ansatz.validate();
  const auto n = static_cast<std::size_t>(ansatz.base_qubits);
  if (data.size() != k * n) {
    throw ConfigError("training data is not k x N with N = " + std::to_string(n));
  }
  config.validate(k);
  for (double v : data) {
    if (!(v >= -1.0 && v <= 1.0)) throw DataError("training data must lie in [-1, 1]");
  }

  std::mt19937_64 rng(config.seed);
  DiscriminatorNet disc = [&] {
    if (hooks.init_discriminator) return *hooks.init_discriminator;
    DiscriminatorNet d(config.discriminator_layers.empty()
                           ? default_discriminator_layers(ansatz.base_qubits)
                           : config.discriminator_layers,
                       ansatz.base_qubits);
    d.init_glorot(rng);
    return d;
  }();
  if (disc.input_dim() != ansatz.base_qubits) {
    throw ConfigError("discriminator input dimension does not match the generator");
  }
  gen::ParamVector params = hooks.init_params
                                ? *hooks.init_params
                                : gen::random_params(ansatz, config.gen_weight_init,
                                                     config.gen_bias_init, rng);
  if (params.size() != static_cast<std::size_t>(ansatz.parameter_count())) {
    throw ConfigError("initial parameters do not match the ansatz");
  }

  const double real_label = config.swap_labels ? 0.0 : 1.0;
  const double fake_label = 1.0 - real_label;
  const AdamConfig adam_d{config.lr_d, config.beta1, config.beta2, config.eps};
  const AdamConfig adam_g{config.lr_g, config.beta1, config.beta2, config.eps};
  std::vector<AdamState> d_states(disc.params().size());
  AdamState g_state;

  const int batch = config.batch_size;
  const int steps = config.steps_per_epoch > 0 ? config.steps_per_epoch
                                               : static_cast<int>(k / static_cast<std::size_t>(batch));
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = k;

  TrainResult result{params, disc, {}};
  for (int epoch = 1; epoch <= config.n_epochs; ++epoch) {
    double sum_g = 0.0, sum_d = 0.0, sum_acc = 0.0;
    for (int step = 0; step < steps; ++step) {
      for (int d = 0; d < config.discriminator_steps; ++d) {
        std::vector<double> joint;
        joint.reserve(static_cast<std::size_t>(2 * batch) * n);
        for (int r = 0; r < batch; ++r) {
          if (cursor >= k) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
          }
          const auto row = data.subspan(order[cursor++] * n, n);
          joint.insert(joint.end(), row.begin(), row.end());
        }
        const auto fake = make_fake(ansatz, params, batch, false, rng);
        joint.insert(joint.end(), fake.x.begin(), fake.x.end());
        std::vector<double> labels(static_cast<std::size_t>(2 * batch), fake_label);
        std::fill(labels.begin(), labels.begin() + batch, real_label);

        Tape tape;
        const auto fwd = disc.forward_on(tape, joint, false);
        // Mean over real plus mean over fake = 2 x mean over the joint batch.
        const Var loss = tape.scale(tape.bce(fwd.output, labels), 2.0);
        const auto grads = tape.backward(loss);
        for (std::size_t i = 0; i < disc.params().size(); ++i) {
          adam_step(disc.params()[i].data, grads.of(fwd.params[i]).data, d_states[i], adam_d);
        }
        if (d + 1 == config.discriminator_steps) {
          sum_d += tape.value(loss).data[0];
          const auto& p = tape.value(fwd.output).data;
          double correct = 0.0;
          for (int i = 0; i < 2 * batch; ++i) {
            const bool says_real = real_label == 1.0 ? p[i] > 0.5 : p[i] < 0.5;
            correct += (i < batch) == says_real ? 1.0 : 0.0;
          }
          sum_acc += correct / (2.0 * batch);
        }
      }

      const auto fake = make_fake(ansatz, params, batch, !config.freeze_generator, rng);
      Tape tape;
      const auto fwd = disc.forward_on(tape, fake.x, true);
      const std::vector<double> target(static_cast<std::size_t>(batch), real_label);
      const Var loss = tape.bce(fwd.output, target);
      sum_g += tape.value(loss).data[0];
      if (!config.freeze_generator) {
        const auto grads = tape.backward(loss);
        const auto& dx = grads.of(fwd.input).data;
        std::vector<double> g(2 * params.size(), 0.0);
        for (int s = 0; s < batch; ++s) {
          for (std::size_t j = 0; j < n; ++j) {
            const double w = dx[static_cast<std::size_t>(s) * n + j];
            const auto& row = fake.jac[static_cast<std::size_t>(s)][j];
            for (std::size_t p = 0; p < g.size(); ++p) g[p] += w * row[p];
          }
        }
        auto flat = params.flat();
        adam_step(flat, g, g_state, adam_g);
        params = gen::ParamVector::from_flat(flat);
      }
    }
    EpochLoss el{epoch, sum_g / steps, sum_d / steps, sum_acc / steps};
    if (!std::isfinite(el.loss_g) || !std::isfinite(el.loss_d)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         " (loss_g=" + std::to_string(el.loss_g) +
                         ", loss_d=" + std::to_string(el.loss_d) + ")");
    }
    result.history.push_back(el);
    if (hooks.on_epoch) hooks.on_epoch(el, params);
  }
  result.params = std::move(params);
  result.discriminator = std::move(disc);
  return result;
}

}  // namespace sqgan::adv
