#include "sqgan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sqgan/errors.hpp"

namespace sqgan::sim {

namespace {

void check_width(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw SizeError("qubit count " + std::to_string(n_qubits) + " outside [1, " +
                    std::to_string(kMaxQubits) + "]");
  }
  if (n_qubits > kMaxDenseQubits) {
    throw SizeError("a dense register of " + std::to_string(n_qubits) +
                    " qubits exceeds the simulator limit of " + std::to_string(kMaxDenseQubits) +
                    "; partition the circuit into independent blocks");
  }
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ArgumentError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

// Applies the 2x2 matrix [[m00, m01], [m10, m11]] to `target`, optionally
// only on the subspace where `control` is 1.
void apply_1q(std::span<Complex> amps, int target, int control, Complex m00, Complex m01,
              Complex m10, Complex m11) {
  const std::uint64_t tbit = std::uint64_t{1} << target;
  const std::uint64_t cmask = control >= 0 ? (std::uint64_t{1} << control) : 0;
  const std::uint64_t n = amps.size();
  for (std::uint64_t i = 0; i < n; ++i) {
    if ((i & tbit) || (i & cmask) != cmask) continue;
    const std::uint64_t j = i | tbit;
    const Complex a0 = amps[i];
    const Complex a1 = amps[j];
    amps[i] = m00 * a0 + m01 * a1;
    amps[j] = m10 * a0 + m11 * a1;
  }
}

void apply_ry(std::span<Complex> amps, int target, int control, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  apply_1q(amps, target, control, c, -s, s, c);
}

void apply_rz(std::span<Complex> amps, int target, int control, double theta) {
  const Complex lo = std::polar(1.0, -theta / 2.0);
  const Complex hi = std::polar(1.0, theta / 2.0);
  apply_1q(amps, target, control, lo, 0.0, 0.0, hi);
}

}  // namespace

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
  check_width(n_qubits);
  amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

Statevector Statevector::from_amplitudes(std::vector<Complex> amplitudes) {
  const std::size_t n = amplitudes.size();
  if (n < 2 || (n & (n - 1)) != 0) {
    throw SizeError("amplitude count must be a power of two >= 2");
  }
  int q = 0;
  while ((std::size_t{1} << q) < n) ++q;
  Statevector sv(q);
  sv.amps_ = std::move(amplitudes);
  return sv;
}

double Statevector::norm_squared() const noexcept {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

std::vector<double> Statevector::probabilities() const {
  std::vector<double> p(amps_.size());
  std::transform(amps_.begin(), amps_.end(), p.begin(), [](Complex a) { return std::norm(a); });
  return p;
}

const char* to_string(GateKind kind) {
  switch (kind) {
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CRY: return "CRY";
    case GateKind::CRZ: return "CRZ";
    case GateKind::X: return "X";
  }
  return "?";
}

int arity(GateKind kind) {
  return (kind == GateKind::CRY || kind == GateKind::CRZ) ? 2 : 1;
}

bool is_parameterized(GateKind kind) { return kind != GateKind::X; }

GateOp GateOp::shifted(int offset) const {
  GateOp g = *this;
  g.qubits_[0] += offset;
  if (arity() == 2) g.qubits_[1] += offset;
  return g;
}

void NoiseSpec::validate() const {
  check_probability(p1, "p1");
  check_probability(p2, "p2");
  check_probability(readout_eps, "readout_eps");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string bitstring(std::uint64_t index, int n_qubits) {
  std::string s(static_cast<std::size_t>(n_qubits), '0');
  for (int q = 0; q < n_qubits; ++q) {
    if ((index >> q) & 1U) s[static_cast<std::size_t>(n_qubits - 1 - q)] = '1';
  }
  return s;
}

std::uint64_t parse_bitstring(const std::string& bits) {
  std::uint64_t index = 0;
  const int n = static_cast<int>(bits.size());
  for (int i = 0; i < n; ++i) {
    const char c = bits[static_cast<std::size_t>(i)];
    if (c != '0' && c != '1') throw ArgumentError("malformed bitstring '" + bits + "'");
    if (c == '1') index |= std::uint64_t{1} << (n - 1 - i);
  }
  return index;
}

Statevector init_state(int n_qubits) { return Statevector(n_qubits); }

void validate_gate(const GateOp& gate, int n_qubits) {
  const auto t = gate.targets();
  for (int q : t) {
    if (q < 0 || q >= n_qubits) {
      throw IndexError(std::string(to_string(gate.kind())) + " target " + std::to_string(q) +
                       " out of range for " + std::to_string(n_qubits) + " qubits");
    }
  }
  if (t.size() == 2 && t[0] == t[1]) {
    throw IndexError(std::string(to_string(gate.kind())) + " control equals target");
  }
}

void apply_gate(Statevector& state, const GateOp& gate) {
  validate_gate(gate, state.num_qubits());
  auto amps = state.amplitudes();
  const auto t = gate.targets();
  switch (gate.kind()) {
    case GateKind::RY: apply_ry(amps, t[0], -1, gate.angle()); break;
    case GateKind::RZ: apply_rz(amps, t[0], -1, gate.angle()); break;
    case GateKind::CRY: apply_ry(amps, t[1], t[0], gate.angle()); break;
    case GateKind::CRZ: apply_rz(amps, t[1], t[0], gate.angle()); break;
    case GateKind::X: apply_1q(amps, t[0], -1, 0.0, 1.0, 1.0, 0.0); break;
  }
}

double expectation_z(const Statevector& state, int qubit) {
  if (qubit < 0 || qubit >= state.num_qubits()) {
    throw IndexError("qubit " + std::to_string(qubit) + " out of range");
  }
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  const auto amps = state.amplitudes();
  double z = 0.0;
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    z += (i & bit) ? -p : p;
  }
  return z;
}

std::vector<std::uint64_t> sample_indices(const Statevector& state, std::int64_t shots, Rng& rng) {
  if (shots < 1) throw ArgumentError("shots must be >= 1");
  std::vector<double> cdf = state.probabilities();
  std::partial_sum(cdf.begin(), cdf.end(), cdf.begin());
  const double total = cdf.back();
  std::uniform_real_distribution<double> uniform(0.0, total);
  std::vector<std::uint64_t> out(static_cast<std::size_t>(shots));
  for (auto& idx : out) {
    const double u = uniform(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    // Never land on a zero-probability outcome at the top of the CDF.
    while (it != cdf.begin() && *it == *(it - 1)) --it;
    idx = static_cast<std::uint64_t>(it - cdf.begin());
  }
  return out;
}

namespace {
ShotCounts tally(std::span<const std::uint64_t> indices, int n_qubits) {
  ShotCounts sc;
  sc.n_qubits = n_qubits;
  std::map<std::uint64_t, std::int64_t> by_index;
  for (auto i : indices) ++by_index[i];
  for (const auto& [i, c] : by_index) sc.counts[bitstring(i, n_qubits)] = c;
  sc.total_shots = static_cast<std::int64_t>(indices.size());
  return sc;
}
}  // namespace

ShotCounts sample_bitstrings(const Statevector& state, std::int64_t shots, std::uint64_t seed) {
  Rng rng(seed);
  const auto idx = sample_indices(state, shots, rng);
  return tally(idx, state.num_qubits());
}

void flip_bits(std::span<std::uint64_t> indices, int n_qubits, double eps, Rng& rng) {
  check_probability(eps, "readout_eps");
  if (eps == 0.0) return;
  std::bernoulli_distribution flip(eps);
  for (auto& idx : indices) {
    for (int q = 0; q < n_qubits; ++q) {
      if (flip(rng)) idx ^= std::uint64_t{1} << q;
    }
  }
}

ShotCounts apply_readout_noise(const ShotCounts& counts, double eps, std::uint64_t seed) {
  check_probability(eps, "readout_eps");
  std::vector<std::uint64_t> shots;
  shots.reserve(static_cast<std::size_t>(counts.total_shots));
  for (const auto& [bits, c] : counts.counts) {
    const auto idx = parse_bitstring(bits);
    shots.insert(shots.end(), static_cast<std::size_t>(c), idx);
  }
  Rng rng(seed);
  flip_bits(shots, counts.n_qubits, eps, rng);
  return tally(shots, counts.n_qubits);
}

double estimate_z(std::span<const std::uint64_t> indices, int qubit) {
  if (indices.empty()) throw ArgumentError("no shots to estimate from");
  std::int64_t ones = 0;
  for (auto i : indices) ones += static_cast<std::int64_t>((i >> qubit) & 1U);
  const auto n = static_cast<double>(indices.size());
  return (n - 2.0 * static_cast<double>(ones)) / n;
}

double estimate_z(const ShotCounts& counts, int qubit) {
  if (qubit < 0 || qubit >= counts.n_qubits) throw IndexError("qubit out of range");
  if (counts.total_shots < 1) throw ArgumentError("no shots to estimate from");
  std::int64_t ones = 0;
  for (const auto& [bits, c] : counts.counts) {
    if ((parse_bitstring(bits) >> qubit) & 1U) ones += c;
  }
  const auto n = static_cast<double>(counts.total_shots);
  return (n - 2.0 * static_cast<double>(ones)) / n;
}

void apply_pauli(Statevector& state, int qubit, Pauli p) {
  if (qubit < 0 || qubit >= state.num_qubits()) throw IndexError("qubit out of range");
  auto amps = state.amplitudes();
  const Complex i{0.0, 1.0};
  switch (p) {
    case Pauli::I: break;
    case Pauli::X: apply_1q(amps, qubit, -1, 0.0, 1.0, 1.0, 0.0); break;
    case Pauli::Y: apply_1q(amps, qubit, -1, 0.0, -i, i, 0.0); break;
    case Pauli::Z: apply_1q(amps, qubit, -1, 1.0, 0.0, 0.0, -1.0); break;
  }
}

void apply_depolarizing(Statevector& state, std::span<const int> targets, double p, Rng& rng) {
  check_probability(p, "depolarizing probability");
  if (targets.empty() || targets.size() > 2) {
    throw UnsupportedError("depolarizing channel supports 1 or 2 targets, got " +
                           std::to_string(targets.size()));
  }
  for (int q : targets) {
    if (q < 0 || q >= state.num_qubits()) throw IndexError("qubit out of range");
  }
  if (p == 0.0) return;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (u01(rng) >= p) return;
  // Non-identity Pauli strings are numbered 1..4^n-1, two bits per qubit.
  const int n_strings = targets.size() == 1 ? 3 : 15;
  std::uniform_int_distribution<int> pick(1, n_strings);
  const int code = pick(rng);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    apply_pauli(state, targets[k], static_cast<Pauli>((code >> (2 * k)) & 3));
  }
}

Statevector apply_depolarizing(Statevector state, std::span<const int> targets, double p,
                               std::uint64_t seed) {
  Rng rng(seed);
  apply_depolarizing(state, targets, p, rng);
  return state;
}

Statevector run_circuit(std::span<const GateOp> gates, int n_qubits,
                        const std::optional<NoiseSpec>& noise, Rng& rng) {
  Statevector state(n_qubits);
  for (const auto& g : gates) validate_gate(g, n_qubits);
  if (noise) noise->validate();
  const bool gate_noise = noise && noise->has_gate_noise();
  for (const auto& g : gates) {
    apply_gate(state, g);
    if (gate_noise) {
      const double p = g.arity() == 1 ? noise->p1 : noise->p2;
      apply_depolarizing(state, g.targets(), p, rng);
    }
  }
  return state;
}

Statevector run_circuit(std::span<const GateOp> gates, int n_qubits,
                        const std::optional<NoiseSpec>& noise, std::uint64_t seed) {
  Rng rng(seed);
  return run_circuit(gates, n_qubits, noise, rng);
}

std::vector<SubCircuit> partition_circuit(std::span<const GateOp> gates, int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw SizeError("qubit count " + std::to_string(n_qubits) + " outside [1, " +
                    std::to_string(kMaxQubits) + "]");
  }
  std::vector<int> parent(static_cast<std::size_t>(n_qubits));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int q) {
    while (parent[q] != q) q = parent[q] = parent[parent[q]];
    return q;
  };
  for (const auto& g : gates) {
    validate_gate(g, n_qubits);
    const auto t = g.targets();
    if (t.size() == 2) {
      const int a = find(t[0]);
      const int b = find(t[1]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<int> block_of(static_cast<std::size_t>(n_qubits), -1);
  std::vector<int> local(static_cast<std::size_t>(n_qubits), -1);
  std::vector<SubCircuit> blocks;
  for (int q = 0; q < n_qubits; ++q) {
    const int root = find(q);
    if (block_of[root] < 0) {
      block_of[root] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    auto& b = blocks[static_cast<std::size_t>(block_of[root])];
    local[q] = static_cast<int>(b.qubits.size());
    b.qubits.push_back(q);
  }
  for (const auto& g : gates) {
    const auto t = g.targets();
    auto& b = blocks[static_cast<std::size_t>(block_of[find(t[0])])];
    switch (g.kind()) {
      case GateKind::RY: b.gates.push_back(GateOp::ry(local[t[0]], g.angle())); break;
      case GateKind::RZ: b.gates.push_back(GateOp::rz(local[t[0]], g.angle())); break;
      case GateKind::X: b.gates.push_back(GateOp::x(local[t[0]])); break;
      case GateKind::CRY: b.gates.push_back(GateOp::cry(local[t[0]], local[t[1]], g.angle())); break;
      case GateKind::CRZ: b.gates.push_back(GateOp::crz(local[t[0]], local[t[1]], g.angle())); break;
    }
  }
  for (const auto& b : blocks) {
    if (static_cast<int>(b.qubits.size()) > kMaxDenseQubits) {
      throw SizeError("entangled block of " + std::to_string(b.qubits.size()) +
                      " qubits exceeds the dense simulator limit");
    }
  }
  return blocks;
}

}  // namespace sqgan::sim
