#pragma once

// Dense statevector simulation of small rotation circuits, with shot sampling
// and stochastic (trajectory) noise.
//
// Qubit ordering: qubit q is bit q of the amplitude index, so qubit 0 is the
// least-significant bit. Bitstrings are printed most-significant first, i.e.
// character n-1-q holds qubit q.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sqgan::sim {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

// Widest register a circuit description may address.
inline constexpr int kMaxQubits = 48;
// Widest register held as one dense amplitude array (2^n * 16 bytes).
inline constexpr int kMaxDenseQubits = 28;

class Statevector {
 public:
  explicit Statevector(int n_qubits);

  static Statevector from_amplitudes(std::vector<Complex> amplitudes);

  int num_qubits() const noexcept { return n_qubits_; }
  std::size_t size() const noexcept { return amps_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  std::span<Complex> amplitudes() noexcept { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm_squared() const noexcept;
  std::vector<double> probabilities() const;

 private:
  int n_qubits_;
  std::vector<Complex> amps_;
};

enum class GateKind { RY, RZ, CRY, CRZ, X };

const char* to_string(GateKind kind);
int arity(GateKind kind);
bool is_parameterized(GateKind kind);

// One gate. For controlled kinds targets()[0] is the control.
class GateOp {
 public:
  static GateOp ry(int q, double angle) { return {GateKind::RY, q, -1, angle}; }
  static GateOp rz(int q, double angle) { return {GateKind::RZ, q, -1, angle}; }
  static GateOp cry(int control, int target, double angle) {
    return {GateKind::CRY, control, target, angle};
  }
  static GateOp crz(int control, int target, double angle) {
    return {GateKind::CRZ, control, target, angle};
  }
  static GateOp x(int q) { return {GateKind::X, q, -1, 0.0}; }

  GateKind kind() const noexcept { return kind_; }
  int arity() const noexcept { return sim::arity(kind_); }
  std::span<const int> targets() const noexcept {
    return {qubits_, static_cast<std::size_t>(arity())};
  }
  double angle() const noexcept { return angle_; }
  void set_angle(double a) noexcept { angle_ = a; }
  GateOp shifted(int offset) const;

  bool operator==(const GateOp&) const = default;

 private:
  GateOp(GateKind k, int q0, int q1, double a) : kind_(k), qubits_{q0, q1}, angle_(a) {}

  GateKind kind_;
  int qubits_[2];
  double angle_;
};

struct NoiseSpec {
  double p1 = 0.0;
  double p2 = 0.0;
  double readout_eps = 0.0;

  void validate() const;
  bool has_gate_noise() const noexcept { return p1 > 0.0 || p2 > 0.0; }
  bool is_noiseless() const noexcept { return !has_gate_noise() && readout_eps == 0.0; }
};

struct ShotCounts {
  int n_qubits = 0;
  std::map<std::string, std::int64_t> counts;
  std::int64_t total_shots = 0;
};

// Independent per-stream seed from (master seed, stream index); splitmix64 finaliser.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

std::string bitstring(std::uint64_t index, int n_qubits);
std::uint64_t parse_bitstring(const std::string& bits);

Statevector init_state(int n_qubits);

void apply_gate(Statevector& state, const GateOp& gate);

double expectation_z(const Statevector& state, int qubit);

// Draws basis-state indices i.i.d. from |amplitude|^2.
std::vector<std::uint64_t> sample_indices(const Statevector& state, std::int64_t shots, Rng& rng);

ShotCounts sample_bitstrings(const Statevector& state, std::int64_t shots, std::uint64_t seed);

// Flips each of the low n_qubits bits of every index independently with probability eps.
void flip_bits(std::span<std::uint64_t> indices, int n_qubits, double eps, Rng& rng);

ShotCounts apply_readout_noise(const ShotCounts& counts, double eps, std::uint64_t seed);

// Shot-average of Z on one qubit: mean of (+1 for bit 0, -1 for bit 1).
double estimate_z(std::span<const std::uint64_t> indices, int qubit);
double estimate_z(const ShotCounts& counts, int qubit);

enum class Pauli { I, X, Y, Z };
void apply_pauli(Statevector& state, int qubit, Pauli p);

// One trajectory of the depolarizing channel: with probability p a uniformly
// drawn non-identity Pauli string on `targets` is applied.
void apply_depolarizing(Statevector& state, std::span<const int> targets, double p, Rng& rng);
Statevector apply_depolarizing(Statevector state, std::span<const int> targets, double p,
                               std::uint64_t seed);

void validate_gate(const GateOp& gate, int n_qubits);

Statevector run_circuit(std::span<const GateOp> gates, int n_qubits,
                        const std::optional<NoiseSpec>& noise, Rng& rng);
Statevector run_circuit(std::span<const GateOp> gates, int n_qubits,
                        const std::optional<NoiseSpec>& noise = std::nullopt,
                        std::uint64_t seed = 0);

// A connected group of qubits and the gates acting on it, relabelled to
// local indices 0..qubits.size()-1 (local i is global qubits[i]).
struct SubCircuit {
  std::vector<int> qubits;
  std::vector<GateOp> gates;
};

// Splits a circuit into independent qubit blocks (no two-qubit gate crosses
// a block boundary). The blocks partition 0..n_qubits-1 and are ordered by
// their smallest qubit.
std::vector<SubCircuit> partition_circuit(std::span<const GateOp> gates, int n_qubits);

}  // namespace sqgan::sim
