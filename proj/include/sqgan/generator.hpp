#pragma once

// Style-based quantum generator: latent variables are re-uploaded into every
// rotation angle through an affine map, and the base circuit can be
// replicated side by side so that one execution yields several samples.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sqgan/simulator.hpp"

namespace sqgan::gen {

enum class Entangler { CRY, CRZ };

const char* to_string(Entangler e);
Entangler parse_entangler(const std::string& s);

// Version of the gate layout below; stored with trained parameters.
inline constexpr int kLayoutVersion = 1;

// Per layer: RY then RZ on every qubit, then a ring of controlled rotations
// (qubit i controls (i+1) mod N). One closing RY per qubit after the last
// layer. Gate g in that order reads latent component g mod latent_dim.
struct StyleAnsatz {
  int base_qubits = 3;
  int layers = 1;
  int latent_dim = 5;
  Entangler entangler = Entangler::CRY;
  int replicas = 1;

  int entanglers_per_layer() const noexcept;
  int parameter_count() const noexcept;
  int width() const noexcept { return replicas * base_qubits; }
  int total_latent_dim() const noexcept { return replicas * latent_dim; }
  void validate() const;
  StyleAnsatz with_replicas(int m) const;
};

struct ParamPair {
  double weight = 0.0;
  double bias = 0.0;
  bool operator==(const ParamPair&) const = default;
};

// Trainable (weight, bias) pairs, one per parameterized gate of the base
// circuit. Flat layout is [w0, b0, w1, b1, ...].
struct ParamVector {
  std::vector<ParamPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  std::vector<double> flat() const;
  static ParamVector from_flat(std::span<const double> flat);
  bool operator==(const ParamVector&) const = default;
};

// m rows (replicas) by latent_dim columns, row-major.
class LatentTensor {
 public:
  LatentTensor(int rows, int cols);
  LatentTensor(int rows, int cols, std::vector<double> values);

  static LatentTensor standard_normal(int rows, int cols, sim::Rng& rng);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::span<const double> row(int i) const;
  std::span<double> row(int i);
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  int rows_;
  int cols_;
  std::vector<double> values_;
};

using SampleVector = std::vector<double>;

double style_angle(double weight, double bias, double latent_component) noexcept;

// Gate angles of the base circuit, in construction order.
std::vector<double> base_angles(const StyleAnsatz& ansatz, const ParamVector& params,
                                std::span<const double> latent_row);

// Base circuit with explicit angles (one per parameterized gate).
std::vector<sim::GateOp> circuit_from_angles(const StyleAnsatz& ansatz,
                                             std::span<const double> angles, int qubit_offset = 0);

std::vector<sim::GateOp> build_base_circuit(const StyleAnsatz& ansatz, const ParamVector& params,
                                            std::span<const double> latent_row);

// Replica i occupies qubits [i*N, (i+1)*N) and reads latent row i; all
// replicas share `params`.
std::vector<sim::GateOp> build_parallel_circuit(const StyleAnsatz& ansatz,
                                                const ParamVector& params,
                                                const LatentTensor& latent);

struct ExactMode {};
struct ShotMode {
  std::int64_t shots = 0;
  std::uint64_t seed = 0;
};
using GenerationMode = std::variant<ExactMode, ShotMode>;

// Runs each latent tensor's parallel circuit once and returns m sample
// vectors per tensor, x_j = -<Z_j>. Noise requires shot mode.
std::vector<SampleVector> generate_samples(const StyleAnsatz& ansatz, const ParamVector& params,
                                           std::span<const LatentTensor> latent_batch,
                                           const GenerationMode& mode,
                                           const std::optional<sim::NoiseSpec>& noise = std::nullopt);

// Shot-mode execution of one parallel circuit with a caller-owned RNG stream.
std::vector<SampleVector> run_parallel_shots(const StyleAnsatz& ansatz, const ParamVector& params,
                                             const LatentTensor& latent, std::int64_t shots,
                                             const std::optional<sim::NoiseSpec>& noise,
                                             sim::Rng& rng);

// Exact sample vector of the base circuit for one latent row.
SampleVector exact_sample(const StyleAnsatz& ansatz, const ParamVector& params,
                          std::span<const double> latent_row);

// Jacobian of the base-circuit sample vector: row j holds dx_j/d(flat params).
// Parameter-shift rule per gate, chained through the affine encoding.
std::vector<std::vector<double>> sample_jacobian(const StyleAnsatz& ansatz,
                                                 const ParamVector& params,
                                                 std::span<const double> latent_row);

// Gradient of x_qubit (qubit in the full parallel width) with respect to the
// flat parameters. Only defined for noiseless exact simulation.
std::vector<double> sample_gradient(const StyleAnsatz& ansatz, const ParamVector& params,
                                    const LatentTensor& latent, int qubit,
                                    const std::optional<sim::NoiseSpec>& noise = std::nullopt);

ParamVector random_params(const StyleAnsatz& ansatz, double weight_scale, double bias_scale,
                          sim::Rng& rng);

}  // namespace sqgan::gen
