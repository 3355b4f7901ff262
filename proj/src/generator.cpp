#include "sqgan/generator.hpp"

#include <cmath>
#include <numbers>

#include "sqgan/errors.hpp"

namespace sqgan::gen {

using sim::GateOp;

const char* to_string(Entangler e) { return e == Entangler::CRY ? "CRY" : "CRZ"; }

Entangler parse_entangler(const std::string& s) {
  if (s == "CRY" || s == "cry") return Entangler::CRY;
  if (s == "CRZ" || s == "crz") return Entangler::CRZ;
  throw ConfigError("unknown entangler '" + s + "' (expected CRY or CRZ)");
}

int StyleAnsatz::entanglers_per_layer() const noexcept {
  if (base_qubits < 2) return 0;
  return base_qubits == 2 ? 1 : base_qubits;
}

int StyleAnsatz::parameter_count() const noexcept {
  return layers * (2 * base_qubits + entanglers_per_layer()) + base_qubits;
}

void StyleAnsatz::validate() const {
  if (base_qubits < 1) throw ConfigError("base_qubits must be >= 1");
  if (layers < 0) throw ConfigError("layers must be >= 0");
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (width() > sim::kMaxQubits) {
    throw SizeError("parallel circuit width " + std::to_string(width()) +
                    " exceeds the simulator limit of " + std::to_string(sim::kMaxQubits));
  }
}

StyleAnsatz StyleAnsatz::with_replicas(int m) const {
  StyleAnsatz a = *this;
  a.replicas = m;
  return a;
}

std::vector<double> ParamVector::flat() const {
  std::vector<double> f;
  f.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    f.push_back(p.weight);
    f.push_back(p.bias);
  }
  return f;
}

ParamVector ParamVector::from_flat(std::span<const double> flat) {
  if (flat.size() % 2 != 0) throw ConfigError("flat parameter vector must have even length");
  ParamVector pv;
  for (std::size_t i = 0; i < flat.size(); i += 2) pv.pairs.push_back({flat[i], flat[i + 1]});
  return pv;
}

LatentTensor::LatentTensor(int rows, int cols)
    : LatentTensor(rows, cols,
                   std::vector<double>(static_cast<std::size_t>(std::max(rows, 0) * std::max(cols, 0)))) {}

LatentTensor::LatentTensor(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 1 || cols < 1) throw ConfigError("latent tensor needs at least one row and column");
  if (values_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ConfigError("latent tensor value count does not match its shape");
  }
}

LatentTensor LatentTensor::standard_normal(int rows, int cols, sim::Rng& rng) {
  LatentTensor t(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : t.values_) v = normal(rng);
  return t;
}

std::span<const double> LatentTensor::row(int i) const {
  if (i < 0 || i >= rows_) throw IndexError("latent row out of range");
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(i * cols_),
                                                  static_cast<std::size_t>(cols_));
}

std::span<double> LatentTensor::row(int i) {
  if (i < 0 || i >= rows_) throw IndexError("latent row out of range");
  return std::span<double>(values_).subspan(static_cast<std::size_t>(i * cols_),
                                            static_cast<std::size_t>(cols_));
}

double style_angle(double weight, double bias, double latent_component) noexcept {
  return weight * latent_component + bias;
}

namespace {

void check_shapes(const StyleAnsatz& ansatz, const ParamVector& params, std::size_t latent_len) {
  ansatz.validate();
  if (params.size() != static_cast<std::size_t>(ansatz.parameter_count())) {
    throw ConfigError("parameter vector has " + std::to_string(params.size()) +
                      " pairs, ansatz needs " + std::to_string(ansatz.parameter_count()));
  }
  if (latent_len != static_cast<std::size_t>(ansatz.latent_dim)) {
    throw ConfigError("latent row has length " + std::to_string(latent_len) + ", expected " +
                      std::to_string(ansatz.latent_dim));
  }
}

// Exact x = -<Z> of the base circuit with explicit angles.
SampleVector exact_from_angles(const StyleAnsatz& ansatz, std::span<const double> angles) {
  const auto gates = circuit_from_angles(ansatz, angles);
  sim::Statevector state(ansatz.base_qubits);
  for (const auto& g : gates) sim::apply_gate(state, g);
  SampleVector x(static_cast<std::size_t>(ansatz.base_qubits));
  for (int q = 0; q < ansatz.base_qubits; ++q) x[q] = -sim::expectation_z(state, q);
  return x;
}

}  // namespace

std::vector<double> base_angles(const StyleAnsatz& ansatz, const ParamVector& params,
                                std::span<const double> latent_row) {
  check_shapes(ansatz, params, latent_row.size());
  std::vector<double> angles(params.size());
  const std::size_t d = latent_row.size();
  for (std::size_t g = 0; g < params.size(); ++g) {
    angles[g] = style_angle(params.pairs[g].weight, params.pairs[g].bias, latent_row[g % d]);
  }
  return angles;
}

std::vector<GateOp> circuit_from_angles(const StyleAnsatz& ansatz, std::span<const double> angles,
                                        int qubit_offset) {
  if (angles.size() != static_cast<std::size_t>(ansatz.parameter_count())) {
    throw ConfigError("angle count does not match the ansatz");
  }
  const int n = ansatz.base_qubits;
  const int n_ent = ansatz.entanglers_per_layer();
  std::vector<GateOp> gates;
  gates.reserve(angles.size());
  std::size_t g = 0;
  for (int l = 0; l < ansatz.layers; ++l) {
    for (int q = 0; q < n; ++q) {
      gates.push_back(GateOp::ry(q + qubit_offset, angles[g++]));
      gates.push_back(GateOp::rz(q + qubit_offset, angles[g++]));
    }
    for (int e = 0; e < n_ent; ++e) {
      const int c = e + qubit_offset;
      const int t = (e + 1) % n + qubit_offset;
      gates.push_back(ansatz.entangler == Entangler::CRY ? GateOp::cry(c, t, angles[g])
                                                         : GateOp::crz(c, t, angles[g]));
      ++g;
    }
  }
  for (int q = 0; q < n; ++q) gates.push_back(GateOp::ry(q + qubit_offset, angles[g++]));
  return gates;
}

std::vector<GateOp> build_base_circuit(const StyleAnsatz& ansatz, const ParamVector& params,
                                       std::span<const double> latent_row) {
  return circuit_from_angles(ansatz, base_angles(ansatz, params, latent_row));
}

std::vector<GateOp> build_parallel_circuit(const StyleAnsatz& ansatz, const ParamVector& params,
                                           const LatentTensor& latent) {
  ansatz.validate();
  if (latent.rows() != ansatz.replicas) {
    throw ConfigError("latent tensor has " + std::to_string(latent.rows()) + " rows, ansatz has " +
                      std::to_string(ansatz.replicas) + " replicas");
  }
  std::vector<GateOp> gates;
  gates.reserve(static_cast<std::size_t>(ansatz.replicas * ansatz.parameter_count()));
  for (int i = 0; i < ansatz.replicas; ++i) {
    const auto angles = base_angles(ansatz, params, latent.row(i));
    const auto block = circuit_from_angles(ansatz, angles, i * ansatz.base_qubits);
    gates.insert(gates.end(), block.begin(), block.end());
  }
  return gates;
}

namespace {

// Splits per-qubit values over the full width into m sample vectors.
std::vector<SampleVector> split_replicas(const StyleAnsatz& ansatz, const std::vector<double>& x) {
  std::vector<SampleVector> out;
  out.reserve(static_cast<std::size_t>(ansatz.replicas));
  const auto n = static_cast<std::ptrdiff_t>(ansatz.base_qubits);
  for (int i = 0; i < ansatz.replicas; ++i) {
    out.emplace_back(x.begin() + i * n, x.begin() + (i + 1) * n);
  }
  return out;
}

std::vector<SampleVector> run_parallel_exact(const StyleAnsatz& ansatz, const ParamVector& params,
                                             const LatentTensor& latent) {
  const auto gates = build_parallel_circuit(ansatz, params, latent);
  std::vector<double> x(static_cast<std::size_t>(ansatz.width()));
  for (const auto& block : sim::partition_circuit(gates, ansatz.width())) {
    const int nb = static_cast<int>(block.qubits.size());
    const auto state = sim::run_circuit(block.gates, nb);
    for (int q = 0; q < nb; ++q) x[block.qubits[q]] = -sim::expectation_z(state, q);
  }
  return split_replicas(ansatz, x);
}

}  // namespace

std::vector<SampleVector> run_parallel_shots(const StyleAnsatz& ansatz, const ParamVector& params,
                                             const LatentTensor& latent, std::int64_t shots,
                                             const std::optional<sim::NoiseSpec>& noise,
                                             sim::Rng& rng) {
  if (shots < 1) throw ArgumentError("shots must be >= 1");
  if (noise) noise->validate();
  const auto gates = build_parallel_circuit(ansatz, params, latent);
  // Readout flips get their own stream so that changing readout_eps leaves
  // the shot outcomes before readout untouched.
  sim::Rng readout_rng(rng());
  std::vector<double> x(static_cast<std::size_t>(ansatz.width()));
  for (const auto& block : sim::partition_circuit(gates, ansatz.width())) {
    const int nb = static_cast<int>(block.qubits.size());
    std::vector<std::uint64_t> outcomes;
    if (noise && noise->has_gate_noise()) {
      // Every shot follows its own noise trajectory.
      outcomes.resize(static_cast<std::size_t>(shots));
      for (auto& o : outcomes) {
        const auto state = sim::run_circuit(block.gates, nb, noise, rng);
        o = sim::sample_indices(state, 1, rng).front();
      }
    } else {
      const auto state = sim::run_circuit(block.gates, nb);
      outcomes = sim::sample_indices(state, shots, rng);
    }
    if (noise) sim::flip_bits(outcomes, nb, noise->readout_eps, readout_rng);
    for (int q = 0; q < nb; ++q) x[block.qubits[q]] = -sim::estimate_z(outcomes, q);
  }
  return split_replicas(ansatz, x);
}

std::vector<SampleVector> generate_samples(const StyleAnsatz& ansatz, const ParamVector& params,
                                           std::span<const LatentTensor> latent_batch,
                                           const GenerationMode& mode,
                                           const std::optional<sim::NoiseSpec>& noise) {
  std::vector<SampleVector> out;
  out.reserve(latent_batch.size() * static_cast<std::size_t>(ansatz.replicas));
  if (std::holds_alternative<ExactMode>(mode)) {
    if (noise && !noise->is_noiseless()) {
      throw UnsupportedError("noise models require shot mode");
    }
    for (const auto& latent : latent_batch) {
      auto s = run_parallel_exact(ansatz, params, latent);
      std::move(s.begin(), s.end(), std::back_inserter(out));
    }
    return out;
  }
  const auto& shot_mode = std::get<ShotMode>(mode);
  for (std::size_t c = 0; c < latent_batch.size(); ++c) {
    sim::Rng rng(sim::derive_seed(shot_mode.seed, c));
    auto s = run_parallel_shots(ansatz, params, latent_batch[c], shot_mode.shots, noise, rng);
    std::move(s.begin(), s.end(), std::back_inserter(out));
  }
  return out;
}

SampleVector exact_sample(const StyleAnsatz& ansatz, const ParamVector& params,
                          std::span<const double> latent_row) {
  return exact_from_angles(ansatz, base_angles(ansatz, params, latent_row));
}

std::vector<std::vector<double>> sample_jacobian(const StyleAnsatz& ansatz,
                                                 const ParamVector& params,
                                                 std::span<const double> latent_row) {
  using std::numbers::pi;
  const auto angles = base_angles(ansatz, params, latent_row);
  const auto gates = circuit_from_angles(ansatz, angles);
  const std::size_t n = static_cast<std::size_t>(ansatz.base_qubits);
  std::vector<std::vector<double>> jac(n, std::vector<double>(2 * params.size(), 0.0));

  std::vector<double> shifted = angles;
  auto eval = [&](std::size_t g, double delta) {
    shifted[g] = angles[g] + delta;
    auto x = exact_from_angles(ansatz, shifted);
    shifted[g] = angles[g];
    return x;
  };

  // Controlled rotations have generator eigenvalues {0, +-1/2}; four-term rule.
  const double c_plus = (std::numbers::sqrt2 + 1.0) / (4.0 * std::numbers::sqrt2);
  const double c_minus = (std::numbers::sqrt2 - 1.0) / (4.0 * std::numbers::sqrt2);

  for (std::size_t g = 0; g < params.size(); ++g) {
    std::vector<double> dtheta(n);
    const auto kind = gates[g].kind();
    if (kind == sim::GateKind::RY || kind == sim::GateKind::RZ) {
      const auto plus = eval(g, pi / 2);
      const auto minus = eval(g, -pi / 2);
      for (std::size_t j = 0; j < n; ++j) dtheta[j] = 0.5 * (plus[j] - minus[j]);
    } else {
      const auto p1 = eval(g, pi / 2);
      const auto m1 = eval(g, -pi / 2);
      const auto p3 = eval(g, 3 * pi / 2);
      const auto m3 = eval(g, -3 * pi / 2);
      for (std::size_t j = 0; j < n; ++j) {
        dtheta[j] = c_plus * (p1[j] - m1[j]) - c_minus * (p3[j] - m3[j]);
      }
    }
    const double r = latent_row[g % latent_row.size()];
    for (std::size_t j = 0; j < n; ++j) {
      jac[j][2 * g] = dtheta[j] * r;
      jac[j][2 * g + 1] = dtheta[j];
    }
  }
  return jac;
}

std::vector<double> sample_gradient(const StyleAnsatz& ansatz, const ParamVector& params,
                                    const LatentTensor& latent, int qubit,
                                    const std::optional<sim::NoiseSpec>& noise) {
  if (noise && !noise->is_noiseless()) {
    throw UnsupportedError("gradients are only available for noiseless exact simulation");
  }
  ansatz.validate();
  if (latent.rows() != ansatz.replicas) throw ConfigError("latent rows must equal replicas");
  if (qubit < 0 || qubit >= ansatz.width()) throw IndexError("qubit out of range");
  const int replica = qubit / ansatz.base_qubits;
  const int local = qubit % ansatz.base_qubits;
  auto jac = sample_jacobian(ansatz, params, latent.row(replica));
  return std::move(jac[static_cast<std::size_t>(local)]);
}

ParamVector random_params(const StyleAnsatz& ansatz, double weight_scale, double bias_scale,
                          sim::Rng& rng) {
  std::uniform_real_distribution<double> w(-weight_scale, weight_scale);
  std::uniform_real_distribution<double> b(-bias_scale, bias_scale);
  ParamVector pv;
  pv.pairs.resize(static_cast<std::size_t>(ansatz.parameter_count()));
  for (auto& p : pv.pairs) {
    p.weight = w(rng);
    p.bias = b(rng);
  }
  return pv;
}

}  // namespace sqgan::gen
