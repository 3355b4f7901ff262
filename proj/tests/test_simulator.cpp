#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sqgan/errors.hpp"
#include "sqgan/simulator.hpp"
#include "oracles.hpp"

using namespace sqgan;
using namespace sqgan::sim;
using namespace sqgan::oracle;

namespace {

constexpr double kPi = std::numbers::pi;

Statevector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<Complex> a(std::size_t{1} << n);
  double norm = 0;
  for (auto& z : a) {
    z = {nd(rng), nd(rng)};
    norm += std::norm(z);
  }
  for (auto& z : a) z /= std::sqrt(norm);
  return Statevector::from_amplitudes(a);
}

}  // namespace

TEST(Statevector, GroundState) {
  Statevector one(1);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_EQ(one[0], Complex(1, 0));
  EXPECT_EQ(one[1], Complex(0, 0));
  Statevector three(3);
  ASSERT_EQ(three.size(), 8u);
  EXPECT_EQ(three[0], Complex(1, 0));
  for (std::size_t i = 1; i < 8; ++i) EXPECT_EQ(three[i], Complex(0, 0));
  EXPECT_THROW(Statevector(0), SizeError);
  EXPECT_THROW(init_state(0), SizeError);
}

TEST(ApplyGate, RyPiFlipsZero) {
  Statevector s(1);
  apply_gate(s, GateOp::ry(0, kPi));
  EXPECT_NEAR(std::abs(s[0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s[1]), 1.0, 1e-15);
}

TEST(ApplyGate, RzLeavesProbabilities) {
  for (double t : {0.3, -1.7, kPi, 5.0}) {
    Statevector s(1);
    apply_gate(s, GateOp::rz(0, t));
    const auto p = s.probabilities();
    EXPECT_DOUBLE_EQ(p[0], 1.0);
    EXPECT_DOUBLE_EQ(p[1], 0.0);
  }
}

TEST(ApplyGate, ControlledInactiveOnZeroControl) {
  std::mt19937_64 rng(3);
  // Control qubit 1 in |0>, target qubit 0 in an arbitrary state.
  Statevector s(2);
  apply_gate(s, GateOp::ry(0, 0.9));
  apply_gate(s, GateOp::rz(0, 0.4));
  const auto before = std::vector<Complex>(s.amplitudes().begin(), s.amplitudes().end());
  apply_gate(s, GateOp::cry(1, 0, 1.234));
  apply_gate(s, GateOp::crz(1, 0, -0.5));
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(std::abs(s[i] - before[i]), 0.0, 1e-12);
}

TEST(ApplyGate, NormPreservedOnRandomStates) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_state(3, rng);
    for (const auto& g : random_circuit(3, 1, rng)) apply_gate(s, g);
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-12);
  }
}

TEST(ApplyGate, InvalidTargets) {
  Statevector s(2);
  EXPECT_THROW(apply_gate(s, GateOp::ry(2, 0.1)), IndexError);
  EXPECT_THROW(apply_gate(s, GateOp::ry(-1, 0.1)), IndexError);
  EXPECT_THROW(apply_gate(s, GateOp::cry(0, 0, 0.1)), IndexError);
  EXPECT_THROW(apply_gate(s, GateOp::crz(0, 5, 0.1)), IndexError);
}

TEST(ExpectationZ, Eigenstates) {
  Statevector s(1);
  EXPECT_DOUBLE_EQ(expectation_z(s, 0), 1.0);
  apply_gate(s, GateOp::x(0));
  EXPECT_DOUBLE_EQ(expectation_z(s, 0), -1.0);
  Statevector h(1);
  apply_gate(h, GateOp::ry(0, kPi / 2));
  EXPECT_NEAR(expectation_z(h, 0), 0.0, 1e-12);
  EXPECT_THROW(expectation_z(h, 1), IndexError);
}

TEST(Sampling, DeterministicState) {
  Statevector s(1);
  apply_gate(s, GateOp::x(0));
  const auto c = sample_bitstrings(s, 100, 5);
  ASSERT_EQ(c.counts.size(), 1u);
  EXPECT_EQ(c.counts.at("1"), 100);
  EXPECT_EQ(c.total_shots, 100);
  EXPECT_THROW(sample_bitstrings(s, 0, 5), ArgumentError);
}

TEST(Sampling, UniformSuperpositionFrequencies) {
  Statevector s(1);
  apply_gate(s, GateOp::ry(0, kPi / 2));
  const auto c = sample_bitstrings(s, 1'000'000, 77);
  EXPECT_NEAR(c.counts.at("0") / 1e6, 0.5, 0.002);
  EXPECT_NEAR(c.counts.at("1") / 1e6, 0.5, 0.002);
}

TEST(Sampling, SameSeedSameCounts) {
  std::mt19937_64 rng(8);
  const auto s = random_state(3, rng);
  EXPECT_EQ(sample_bitstrings(s, 5000, 42).counts, sample_bitstrings(s, 5000, 42).counts);
}

TEST(Sampling, BitstringOrderingQubitZeroIsRightmost) {
  Statevector s(3);
  apply_gate(s, GateOp::x(0));
  const auto c = sample_bitstrings(s, 10, 1);
  EXPECT_EQ(c.counts.at("001"), 10);
  EXPECT_EQ(bitstring(1, 3), "001");
  EXPECT_EQ(parse_bitstring("100"), 4u);
}

TEST(ReadoutNoise, ZeroAndCertainFlip) {
  ShotCounts c{2, {{"00", 30}, {"01", 70}}, 100};
  EXPECT_EQ(apply_readout_noise(c, 0.0, 1).counts, c.counts);
  const auto flipped = apply_readout_noise(c, 1.0, 1);
  EXPECT_EQ(flipped.counts.at("11"), 30);
  EXPECT_EQ(flipped.counts.at("10"), 70);
  EXPECT_EQ(flipped.total_shots, 100);
}

TEST(ReadoutNoise, FlipFractionMatchesEps) {
  const auto c = sample_bitstrings(Statevector(1), 1'000'000, 2);
  const auto noisy = apply_readout_noise(c, 0.027, 3);
  EXPECT_NEAR(noisy.counts.at("1") / 1e6, 0.027, 0.0005);
}

TEST(Depolarizing, ZeroProbabilityIsIdentity) {
  std::mt19937_64 rng(4);
  const auto s = random_state(2, rng);
  const int q[] = {0, 1};
  const auto out = apply_depolarizing(s, q, 0.0, 9);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(out[i], s[i]);
}

TEST(Depolarizing, CertainErrorPicksPaulisUniformly) {
  // |+> distinguishes X (unchanged up to phase), Y and Z via the final state.
  Statevector plus(1);
  apply_gate(plus, GateOp::ry(0, kPi / 2));
  const int q[] = {0};
  int n_x = 0, n_y = 0, n_z = 0;
  const int trials = 30000;
  for (int seed = 0; seed < trials; ++seed) {
    const auto out = apply_depolarizing(plus, q, 1.0, static_cast<std::uint64_t>(seed));
    // X|+> = |+>, Z|+> = |->, Y|+> = -i|->.
    const Complex a = out[0], b = out[1];
    if (std::abs(a - b) < 1e-12) ++n_x;
    else if (std::abs(a - plus[0]) < 1e-12) ++n_z;
    else ++n_y;
  }
  EXPECT_EQ(n_x + n_y + n_z, trials);
  const double sd = std::sqrt(trials * (1.0 / 3) * (2.0 / 3));
  for (int n : {n_x, n_y, n_z}) EXPECT_NEAR(n, trials / 3.0, 4 * sd);
}

TEST(Depolarizing, AverageZContraction) {
  const int q[] = {0};
  Rng rng(123);
  double sum = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    Statevector s(1);
    apply_depolarizing(s, q, 0.1, rng);
    sum += expectation_z(s, 0);
  }
  EXPECT_NEAR(sum / trials, 1.0 - 4.0 / 3.0 * 0.1, 0.01);
}

TEST(Depolarizing, MoreThanTwoTargetsUnsupported) {
  Statevector s(3);
  const int q[] = {0, 1, 2};
  Rng rng(1);
  EXPECT_THROW(apply_depolarizing(s, q, 0.1, rng), UnsupportedError);
}

TEST(RunCircuit, EmptyAndSingleGate) {
  const auto g = run_circuit({}, 3);
  EXPECT_EQ(g[0], Complex(1, 0));
  const std::vector<GateOp> c{GateOp::ry(0, kPi)};
  const auto s = run_circuit(c, 2);
  EXPECT_NEAR(std::abs(s[1]), 1.0, 1e-15);
}

TEST(RunCircuit, MatchesDenseOracle) {
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4;
    const auto gates = random_circuit(n, 5 + trial % 20, rng);
    const auto psi = dense_run(gates, n);
    const auto s = run_circuit(gates, n);
    for (int i = 0; i < (1 << n); ++i) worst = std::max(worst, std::abs(s[i] - psi(i)));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(RunCircuit, ShotEstimateConverges) {
  std::mt19937_64 crng(5);
  const auto gates = random_circuit(3, 12, crng);
  const auto s = run_circuit(gates, 3);
  const std::int64_t shots = 4000;
  int within = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const auto idx = sample_indices(s, shots, rng);
    bool ok = true;
    for (int q = 0; q < 3; ++q) {
      const double exact = expectation_z(s, q);
      const double se = std::sqrt(std::max(1e-300, 1 - exact * exact) / shots);
      ok = ok && std::abs(estimate_z(idx, q) - exact) <= 3 * se * 1.1 + 1e-12;
    }
    within += ok;
  }
  // 3-sigma per qubit; allow a handful of excursions over 100 seeds.
  EXPECT_GE(within, 95);
}

TEST(RunCircuit, DepolarizingShrinksMagnitudeOfZ) {
  std::vector<GateOp> gates{GateOp::ry(0, 0.4), GateOp::cry(0, 1, 0.8), GateOp::ry(1, 0.2)};
  const int trials = 10000;
  double prev = 2.0, prev_se = 0.0;
  for (double p : {0.0, 0.05, 0.15, 0.3}) {
    Rng rng(99);
    double sum = 0, sum2 = 0;
    for (int i = 0; i < trials; ++i) {
      const auto s = run_circuit(gates, 2, NoiseSpec{p, p, 0.0}, rng);
      const double z = std::abs(expectation_z(s, 1));
      sum += z;
      sum2 += z * z;
    }
    const double mean = sum / trials;
    const double se = std::sqrt(std::max(0.0, sum2 / trials - mean * mean) / trials);
    EXPECT_LE(mean, prev + 3 * std::hypot(se, prev_se));
    prev = mean;
    prev_se = se;
  }
}

TEST(PartitionCircuit, BlocksAreExact) {
  // Two disconnected 2-qubit blocks interleaved on qubits {0,2} and {1,3}.
  std::vector<GateOp> gates{GateOp::ry(0, 0.3), GateOp::ry(1, 1.1), GateOp::cry(0, 2, 0.7),
                            GateOp::crz(3, 1, -0.4), GateOp::ry(2, 0.5), GateOp::rz(3, 0.9)};
  const auto blocks = partition_circuit(gates, 4);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0].qubits, (std::vector<int>{0, 2}));
  EXPECT_EQ(blocks[1].qubits, (std::vector<int>{1, 3}));
  const auto full = run_circuit(gates, 4);
  for (const auto& b : blocks) {
    const auto part = run_circuit(b.gates, static_cast<int>(b.qubits.size()));
    for (std::size_t l = 0; l < b.qubits.size(); ++l) {
      EXPECT_NEAR(expectation_z(part, static_cast<int>(l)), expectation_z(full, b.qubits[l]), 1e-12);
    }
  }
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}
