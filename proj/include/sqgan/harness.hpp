#pragma once

// Device profiles, run planning and runtime estimation, flat config files
// and checkpoint bundles.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqgan/adversary.hpp"
#include "sqgan/datapipe.hpp"
#include "sqgan/generator.hpp"
#include "sqgan/simulator.hpp"

namespace sqgan::harness {

enum class Technology { Superconducting, TrappedIon };

const char* to_string(Technology t);

// Snapshot of a device calibration. Times in microseconds, overhead in seconds.
struct DeviceProfile {
  std::string name;
  Technology technology = Technology::Superconducting;
  int n_qubits_max = 1;
  double p1 = 0.0;
  double p2 = 0.0;
  double readout_eps = 0.0;
  double t_1q_us = 0.0;
  double t_2q_us = 0.0;
  double t_readout_us = 0.0;
  double t_shot_delay_us = 0.0;  // reset / repetition delay between shots
  int parallel_circuits_per_job = 1;
  double per_job_overhead_s = 0.0;
  int version = 1;

  sim::NoiseSpec noise() const { return {p1, p2, readout_eps}; }
  void validate() const;
  // FNV-1a over the canonical field serialization, as 16 hex digits.
  std::string checksum() const;
};

const std::vector<DeviceProfile>& builtin_profiles();
// Throws ConfigError for unknown names.
const DeviceProfile& find_profile(const std::string& name);

struct RunPlan {
  std::int64_t total_samples = 0;
  int replicas = 1;
  std::int64_t shots = 0;
  std::int64_t circuits_needed = 0;
  std::int64_t jobs_needed = 0;
};

RunPlan make_run_plan(std::int64_t k, int replicas, std::int64_t shots, const DeviceProfile& profile);

struct RuntimeEstimate {
  double per_shot_s = 0.0;
  double per_circuit_s = 0.0;  // all shots of one circuit
  double per_job_s = 0.0;      // circuits of a full job plus overhead
  double total_s = 0.0;
};

// Execution-only model: per-shot time is the gate schedule (serialized on
// trapped ions, critical-path depth on superconducting chips) plus readout
// and the inter-shot delay; each job adds a fixed overhead.
RuntimeEstimate estimate_runtime(const DeviceProfile& profile, std::span<const sim::GateOp> circuit,
                                 int width, const RunPlan& plan);

// Critical-path duration of the gate schedule in microseconds.
double schedule_duration_us(const DeviceProfile& profile, std::span<const sim::GateOp> circuit);

// ---- Flat config files -----------------------------------------------------
//
//   # comment
//   key = value
//   [section]
//   key = value
//
// Keys before any section live in section "". Keys are looked up as
// "section.key".
class Config {
 public:
  static Config parse(std::istream& in);
  static Config parse_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Section names in file order.
  const std::vector<std::string>& sections() const noexcept { return sections_; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> sections_;
};

// [ansatz] base_qubits, layers, latent_dim, entangler, replicas
gen::StyleAnsatz ansatz_from_config(const Config& cfg, int base_qubits_default);
// [train] batch_size, epochs, lr_g, lr_d, beta1, beta2, eps, seed, d_steps,
//         steps_per_epoch, gen_weight_init, gen_bias_init
adv::TrainConfig train_config_from_config(const Config& cfg);
// seed = ..., then one [column <name>] section per column with `family`
// (truncated-power-law | shifted-negative-heavy-tail | clipped-gaussian)
// and its parameters.
data::SyntheticOracleSpec oracle_spec_from_config(const Config& cfg);

// Stable hash of the resolved config values.
std::string config_hash(const Config& cfg);

// ---- Trained parameters and checkpoints ------------------------------------

// Plain-text parameter file: a header (N, L, D_lat, entangler, layout
// version) followed by one "weight bias" line per parameterized gate.
void write_params_text(std::ostream& out, const gen::StyleAnsatz& ansatz, const gen::ParamVector& params);
std::pair<gen::StyleAnsatz, gen::ParamVector> read_params_text(std::istream& in);

struct Checkpoint {
  gen::StyleAnsatz ansatz;
  gen::ParamVector params;
  std::optional<adv::DiscriminatorNet> discriminator;
  data::TransformModel transform;
  std::string config_hash;
  std::map<std::string, std::string> config;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

void write_loss_csv(std::ostream& out, std::span<const adv::EpochLoss> history);

}  // namespace sqgan::harness
