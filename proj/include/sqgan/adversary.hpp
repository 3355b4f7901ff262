#pragma once

// Classical discriminator, binary cross-entropy losses, Adam, and the
// alternating adversarial training of the quantum generator.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sqgan/autodiff.hpp"
#include "sqgan/generator.hpp"

namespace sqgan::adv {

struct Conv1dSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 2;
  int stride = 1;
};
struct DenseSpec {
  int in = 1;
  int out = 1;
};
struct LeakyReluSpec {
  double slope = 0.2;
};
struct SigmoidSpec {};
struct FlattenSpec {};

using LayerSpec = std::variant<Conv1dSpec, DenseSpec, LeakyReluSpec, SigmoidSpec, FlattenSpec>;

std::string describe(const LayerSpec& layer);

class DiscriminatorNet {
 public:
  // Validates that the layer stack maps [B, 1, input_dim] to [B, 1] and ends
  // in a sigmoid. Parameters start at zero.
  DiscriminatorNet(std::vector<LayerSpec> layers, int input_dim);

  int input_dim() const noexcept { return input_dim_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }

  // Weight and bias tensors of every parameterized layer, in layer order.
  std::vector<ad::Tensor>& params() noexcept { return params_; }
  const std::vector<ad::Tensor>& params() const noexcept { return params_; }

  // Glorot-uniform weights, zero biases.
  void init_glorot(std::mt19937_64& rng);

  // Flips the sign of the final dense layer so that D'(x) = 1 - D(x).
  void negate_output();

  struct Taped {
    ad::Var input;
    ad::Var logit;
    ad::Var output;
    std::vector<ad::Var> params;
  };
  // Records a forward pass of a row-major [batch x input_dim] block.
  Taped forward_on(ad::Tape& tape, std::span<const double> batch, bool input_requires_grad) const;

  // Probabilities for each row of a row-major [batch x input_dim] block.
  std::vector<double> forward(std::span<const double> batch) const;

 private:
  std::vector<LayerSpec> layers_;
  int input_dim_;
  std::vector<ad::Tensor> params_;
};

// conv1d(1->8,k=2) / leaky / conv1d(8->16,k=2) / leaky / flatten / dense(->32)
// / leaky / dense(->1) / sigmoid, with kernels shrunk for very short inputs.
std::vector<LayerSpec> default_discriminator_layers(int input_dim);

std::vector<double> discriminator_forward(const DiscriminatorNet& net, std::span<const double> batch);

double bce_loss(std::span<const double> pred, std::span<const double> labels);

struct AdamConfig {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// Bias-corrected Adam update of `params` in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
  int batch_size = 128;
  int n_epochs = 100;
  double lr_g = 5e-3;
  double lr_d = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  int discriminator_steps = 1;
  // 0 means one pass over the training set (k / batch_size steps).
  int steps_per_epoch = 0;
  bool freeze_generator = false;
  bool swap_labels = false;
  double gen_weight_init = 0.1;
  double gen_bias_init = 3.141592653589793;
  std::vector<LayerSpec> discriminator_layers;  // empty: default stack

  void validate(std::size_t k) const;
};

struct EpochLoss {
  int epoch = 0;
  double loss_g = 0.0;
  double loss_d = 0.0;
  double d_accuracy = 0.0;
};

struct TrainResult {
  gen::ParamVector params;
  DiscriminatorNet discriminator;
  std::vector<EpochLoss> history;
};

struct TrainHooks {
  std::optional<gen::ParamVector> init_params;
  std::optional<DiscriminatorNet> init_discriminator;
  std::function<void(const EpochLoss&, const gen::ParamVector&)> on_epoch;
};

// `data` is row-major k x N, already mapped to [-1, 1]. The ansatz is used
// with a single replica during training.
TrainResult train(const TrainConfig& config, std::span<const double> data, std::size_t k,
                  const gen::StyleAnsatz& ansatz, const TrainHooks& hooks = {});

// Fraction of correct real (> 0.5) and fake (< 0.5) calls, averaged.
double discriminator_accuracy(const DiscriminatorNet& net, std::span<const double> real,
                              std::span<const double> fake);

}  // namespace sqgan::adv
