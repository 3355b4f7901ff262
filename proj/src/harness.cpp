#include "sqgan/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "sqgan/errors.hpp"

namespace sqgan::harness {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const char* to_string(Technology t) {
  return t == Technology::Superconducting ? "superconducting" : "trapped-ion";
}

void DeviceProfile::validate() const {
  const bool ok = n_qubits_max >= 1 && parallel_circuits_per_job >= 1 && p1 >= 0 && p1 <= 1 &&
                  p2 >= 0 && p2 <= 1 && readout_eps >= 0 && readout_eps <= 1 && t_1q_us >= 0 &&
                  t_2q_us >= 0 && t_readout_us >= 0 && t_shot_delay_us >= 0 &&
                  per_job_overhead_s >= 0;
  if (!ok) throw ConfigError("device profile '" + name + "' has invalid parameters");
}

std::string DeviceProfile::checksum() const {
  std::ostringstream ss;
  ss << name << '|' << to_string(technology) << '|' << n_qubits_max << '|' << num(p1) << '|'
     << num(p2) << '|' << num(readout_eps) << '|' << num(t_1q_us) << '|' << num(t_2q_us) << '|'
     << num(t_readout_us) << '|' << num(t_shot_delay_us) << '|' << parallel_circuits_per_job << '|'
     << num(per_job_overhead_s) << '|' << version;
  return hex64(fnv1a(ss.str()));
}

const std::vector<DeviceProfile>& builtin_profiles() {
  static const std::vector<DeviceProfile> profiles = [] {
    std::vector<DeviceProfile> p;
    // Heron, calibration snapshot of 2023-12-13. IBM backends wait a default
    // 250 us repetition delay between shots.
    p.push_back({"ibm_torino", Technology::Superconducting, 133, 5.8e-4, 5.3e-3, 2.7e-2, 0.032,
                 0.101, 1.56, 250.0, 300, 3.0, 1});
    // Trapped-ion, snapshot of Feb-Mar 2024. No parallel circuit submission.
    p.push_back({"aria_1", Technology::TrappedIon, 25, 3e-4, 6e-3, 5.1e-3, 135.0, 600.0, 300.0,
                 0.0, 1, 0.0, 1});
    // Eagle, snapshot of 2023-10-07. One-qubit error rate was not published.
    p.push_back({"ibm_cusco", Technology::Superconducting, 127, 0.0, 9.1e-2, 5.7e-2, 0.044, 0.487,
                 4.0, 250.0, 300, 3.0, 1});
    return p;
  }();
  return profiles;
}

const DeviceProfile& find_profile(const std::string& name) {
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) return p;
  }
  // Accept the hyphenated spelling used by the vendor.
  if (name == "aria-1") return find_profile("aria_1");
  std::string known;
  for (const auto& p : builtin_profiles()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown device profile '" + name + "' (known: " + known + ")");
}

RunPlan make_run_plan(std::int64_t k, int replicas, std::int64_t shots, const DeviceProfile& profile) {
  if (k < 1) throw ArgumentError("sample count must be >= 1");
  if (replicas < 1) throw ArgumentError("replicas must be >= 1");
  if (shots < 1) throw ArgumentError("shots must be >= 1");
  profile.validate();
  RunPlan plan;
  plan.total_samples = k;
  plan.replicas = replicas;
  plan.shots = shots;
  plan.circuits_needed = (k + replicas - 1) / replicas;
  const std::int64_t per_job = profile.parallel_circuits_per_job;
  plan.jobs_needed = (plan.circuits_needed + per_job - 1) / per_job;
  return plan;
}

double schedule_duration_us(const DeviceProfile& profile, std::span<const sim::GateOp> circuit) {
  auto gate_time = [&](const sim::GateOp& g) { return g.arity() == 1 ? profile.t_1q_us : profile.t_2q_us; };
  if (profile.technology == Technology::TrappedIon) {
    double t = 0.0;
    for (const auto& g : circuit) t += gate_time(g);
    return t;
  }
  int width = 0;
  for (const auto& g : circuit) {
    for (int q : g.targets()) width = std::max(width, q + 1);
  }
  std::vector<double> ready(static_cast<std::size_t>(width), 0.0);
  double makespan = 0.0;
  for (const auto& g : circuit) {
    double start = 0.0;
    for (int q : g.targets()) start = std::max(start, ready[static_cast<std::size_t>(q)]);
    const double end = start + gate_time(g);
    for (int q : g.targets()) ready[static_cast<std::size_t>(q)] = end;
    makespan = std::max(makespan, end);
  }
  return makespan;
}

RuntimeEstimate estimate_runtime(const DeviceProfile& profile, std::span<const sim::GateOp> circuit,
                                 int width, const RunPlan& plan) {
  profile.validate();
  if (width > profile.n_qubits_max) {
    throw CapacityError("circuit width " + std::to_string(width) + " exceeds " + profile.name +
                        "'s " + std::to_string(profile.n_qubits_max) + " qubits");
  }
  for (const auto& g : circuit) sim::validate_gate(g, width);
  RuntimeEstimate est;
  est.per_shot_s =
      (schedule_duration_us(profile, circuit) + profile.t_readout_us + profile.t_shot_delay_us) * 1e-6;
  est.per_circuit_s = est.per_shot_s * static_cast<double>(plan.shots);
  const auto circuits_per_job =
      std::min<std::int64_t>(profile.parallel_circuits_per_job, plan.circuits_needed);
  est.per_job_s = est.per_circuit_s * static_cast<double>(circuits_per_job) + profile.per_job_overhead_s;
  est.total_s = est.per_circuit_s * static_cast<double>(plan.circuits_needed) +
                profile.per_job_overhead_s * static_cast<double>(plan.jobs_needed);
  return est;
}

// ---- Config ----------------------------------------------------------------

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_.push_back(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse(in);
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (it->second.empty() || *end != '\0') throw ConfigError("config key '" + key + "' is not a number");
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const long long v = std::strtoll(it->second.c_str(), &end, 10);
  if (it->second.empty() || *end != '\0') throw ConfigError("config key '" + key + "' is not an integer");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw ConfigError("config key '" + key + "' is not a boolean");
}

gen::StyleAnsatz ansatz_from_config(const Config& cfg, int base_qubits_default) {
  gen::StyleAnsatz a;
  a.base_qubits = static_cast<int>(cfg.get_int("ansatz.base_qubits", base_qubits_default));
  a.layers = static_cast<int>(cfg.get_int("ansatz.layers", 1));
  a.latent_dim = static_cast<int>(cfg.get_int("ansatz.latent_dim", 5));
  a.entangler = gen::parse_entangler(cfg.get("ansatz.entangler", "CRY"));
  a.replicas = static_cast<int>(cfg.get_int("ansatz.replicas", 1));
  a.validate();
  return a;
}

adv::TrainConfig train_config_from_config(const Config& cfg) {
  adv::TrainConfig t;
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size", t.batch_size));
  t.n_epochs = static_cast<int>(cfg.get_int("train.epochs", t.n_epochs));
  t.lr_g = cfg.get_double("train.lr_g", t.lr_g);
  t.lr_d = cfg.get_double("train.lr_d", t.lr_d);
  t.beta1 = cfg.get_double("train.beta1", t.beta1);
  t.beta2 = cfg.get_double("train.beta2", t.beta2);
  t.eps = cfg.get_double("train.eps", t.eps);
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<std::int64_t>(t.seed)));
  t.discriminator_steps = static_cast<int>(cfg.get_int("train.d_steps", t.discriminator_steps));
  t.steps_per_epoch = static_cast<int>(cfg.get_int("train.steps_per_epoch", t.steps_per_epoch));
  t.gen_weight_init = cfg.get_double("train.gen_weight_init", t.gen_weight_init);
  t.gen_bias_init = cfg.get_double("train.gen_bias_init", t.gen_bias_init);
  return t;
}

data::SyntheticOracleSpec oracle_spec_from_config(const Config& cfg) {
  data::SyntheticOracleSpec spec;
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1234));
  for (const auto& section : cfg.sections()) {
    const std::string prefix = "column ";
    if (section.rfind(prefix, 0) != 0) continue;
    const std::string name = trim(section.substr(prefix.size()));
    auto key = [&](const std::string& k) { return section + "." + k; };
    const std::string family = cfg.get(key("family"), "");
    if (family == "truncated-power-law") {
      spec.columns.push_back({name, data::TruncatedPowerLaw{cfg.get_double(key("min"), 1.0),
                                                            cfg.get_double(key("exponent"), 4.0)}});
    } else if (family == "shifted-negative-heavy-tail") {
      spec.columns.push_back(
          {name, data::ShiftedNegativeHeavyTail{cfg.get_double(key("scale"), 1.0),
                                                cfg.get_double(key("exponent"), 3.0)}});
    } else if (family == "clipped-gaussian") {
      spec.columns.push_back({name, data::ClippedGaussian{cfg.get_double(key("mean"), 0.0),
                                                          cfg.get_double(key("sigma"), 1.0),
                                                          cfg.get_double(key("lo"), -1.0),
                                                          cfg.get_double(key("hi"), 1.0)}});
    } else {
      throw ConfigError("column '" + name + "' has unknown family '" + family + "'");
    }
  }
  if (spec.columns.empty()) spec = data::default_oracle_spec(spec.seed);
  spec.validate();
  return spec;
}

std::string config_hash(const Config& cfg) {
  std::string canon;
  for (const auto& [k, v] : cfg.values()) canon += k + "=" + v + "\n";
  return hex64(fnv1a(canon));
}

// ---- Parameters / checkpoints ------------------------------------------------

void write_params_text(std::ostream& out, const gen::StyleAnsatz& ansatz, const gen::ParamVector& params) {
  out << "sqgan-params\n";
  out << "base_qubits " << ansatz.base_qubits << '\n';
  out << "layers " << ansatz.layers << '\n';
  out << "latent_dim " << ansatz.latent_dim << '\n';
  out << "entangler " << gen::to_string(ansatz.entangler) << '\n';
  out << "layout " << gen::kLayoutVersion << '\n';
  out << "pairs " << params.size() << '\n';
  for (const auto& p : params.pairs) out << num(p.weight) << ' ' << num(p.bias) << '\n';
}

std::pair<gen::StyleAnsatz, gen::ParamVector> read_params_text(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic != "sqgan-params") throw DataError("not a parameter file");
  gen::StyleAnsatz a;
  std::string key, ent;
  int layout = 0;
  std::size_t pairs = 0;
  for (int i = 0; i < 6; ++i) {
    in >> key;
    if (key == "base_qubits") in >> a.base_qubits;
    else if (key == "layers") in >> a.layers;
    else if (key == "latent_dim") in >> a.latent_dim;
    else if (key == "entangler") { in >> ent; a.entangler = gen::parse_entangler(ent); }
    else if (key == "layout") in >> layout;
    else if (key == "pairs") in >> pairs;
    else throw DataError("unexpected key '" + key + "' in parameter file");
  }
  if (!in) throw DataError("truncated parameter file header");
  if (layout != gen::kLayoutVersion) {
    throw DataError("parameter file layout " + std::to_string(layout) + " is not supported");
  }
  a.validate();
  if (pairs != static_cast<std::size_t>(a.parameter_count())) {
    throw DataError("parameter file pair count does not match its ansatz");
  }
  gen::ParamVector pv;
  pv.pairs.resize(pairs);
  for (auto& p : pv.pairs) {
    if (!(in >> p.weight >> p.bias)) throw DataError("truncated parameter list");
  }
  return {a, pv};
}

namespace {

json layer_to_json(const adv::LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, adv::Conv1dSpec>) {
          return {{"type", "conv1d"}, {"in", l.in_channels}, {"out", l.out_channels},
                  {"kernel", l.kernel}, {"stride", l.stride}};
        } else if constexpr (std::is_same_v<T, adv::DenseSpec>) {
          return {{"type", "dense"}, {"in", l.in}, {"out", l.out}};
        } else if constexpr (std::is_same_v<T, adv::LeakyReluSpec>) {
          return {{"type", "leaky_relu"}, {"slope", l.slope}};
        } else if constexpr (std::is_same_v<T, adv::SigmoidSpec>) {
          return {{"type", "sigmoid"}};
        } else {
          return {{"type", "flatten"}};
        }
      },
      layer);
}

adv::LayerSpec layer_from_json(const json& j) {
  const std::string type = j.at("type");
  if (type == "conv1d") {
    return adv::Conv1dSpec{j.at("in"), j.at("out"), j.at("kernel"), j.at("stride")};
  }
  if (type == "dense") return adv::DenseSpec{j.at("in"), j.at("out")};
  if (type == "leaky_relu") return adv::LeakyReluSpec{j.at("slope")};
  if (type == "sigmoid") return adv::SigmoidSpec{};
  if (type == "flatten") return adv::FlattenSpec{};
  throw DataError("unknown layer type '" + type + "'");
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json j;
  j["format"] = "sqgan-checkpoint";
  j["ansatz"] = {{"base_qubits", ckpt.ansatz.base_qubits},
                 {"layers", ckpt.ansatz.layers},
                 {"latent_dim", ckpt.ansatz.latent_dim},
                 {"entangler", gen::to_string(ckpt.ansatz.entangler)},
                 {"layout", gen::kLayoutVersion}};
  json pairs = json::array();
  for (const auto& p : ckpt.params.pairs) pairs.push_back({p.weight, p.bias});
  j["params"] = pairs;
  json cols = json::array();
  for (std::size_t c = 0; c < ckpt.transform.dims(); ++c) {
    const auto& t = ckpt.transform.transforms[c];
    cols.push_back({{"name", ckpt.transform.columns[c]},
                    {"yj_lambda", t.yj_lambda},
                    {"yj_branch", data::to_string(t.branch)},
                    {"standardize_mean", t.standardize_mean},
                    {"standardize_std", t.standardize_std},
                    {"minmax_lo", t.minmax_lo},
                    {"minmax_hi", t.minmax_hi}});
  }
  j["transform"] = {{"power_transform", "yeo-johnson"}, {"columns", cols}};
  if (ckpt.discriminator) {
    json layers = json::array();
    for (const auto& l : ckpt.discriminator->layers()) layers.push_back(layer_to_json(l));
    json tensors = json::array();
    for (const auto& t : ckpt.discriminator->params()) {
      tensors.push_back({{"shape", t.shape}, {"data", t.data}});
    }
    j["discriminator"] = {{"input_dim", ckpt.discriminator->input_dim()},
                          {"layers", layers},
                          {"params", tensors}};
  }
  j["config_hash"] = ckpt.config_hash;
  j["config"] = ckpt.config;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  // Round-trip precision for doubles is nlohmann's default.
  out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    in >> j;
    if (j.at("format") != "sqgan-checkpoint") throw DataError("'" + path + "' is not a checkpoint");
    Checkpoint c;
    const auto& a = j.at("ansatz");
    if (a.at("layout").get<int>() != gen::kLayoutVersion) throw DataError("unsupported checkpoint layout");
    c.ansatz.base_qubits = a.at("base_qubits");
    c.ansatz.layers = a.at("layers");
    c.ansatz.latent_dim = a.at("latent_dim");
    c.ansatz.entangler = gen::parse_entangler(a.at("entangler"));
    c.ansatz.validate();
    for (const auto& p : j.at("params")) c.params.pairs.push_back({p.at(0), p.at(1)});
    if (c.params.size() != static_cast<std::size_t>(c.ansatz.parameter_count())) {
      throw DataError("checkpoint parameter count does not match its ansatz");
    }
    const auto& t = j.at("transform");
    for (const auto& col : t.at("columns")) {
      c.transform.columns.push_back(col.at("name"));
      c.transform.transforms.push_back({col.at("yj_lambda"),
                                        data::parse_yj_branch(col.at("yj_branch")),
                                        col.at("standardize_mean"), col.at("standardize_std"),
                                        col.at("minmax_lo"), col.at("minmax_hi")});
    }
    c.transform.validate();
    if (j.contains("discriminator")) {
      const auto& d = j.at("discriminator");
      std::vector<adv::LayerSpec> layers;
      for (const auto& l : d.at("layers")) layers.push_back(layer_from_json(l));
      adv::DiscriminatorNet net(layers, d.at("input_dim"));
      const auto& tensors = d.at("params");
      if (tensors.size() != net.params().size()) throw DataError("discriminator tensor count mismatch");
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        net.params()[i] = ad::Tensor(tensors[i].at("shape").get<std::vector<int>>(),
                                     tensors[i].at("data").get<std::vector<double>>());
      }
      c.discriminator = std::move(net);
    }
    c.config_hash = j.value("config_hash", "");
    c.config = j.value("config", std::map<std::string, std::string>{});
    return c;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint '" + path + "': " + e.what());
  }
}

void write_loss_csv(std::ostream& out, std::span<const adv::EpochLoss> history) {
  out << "epoch,loss_g,loss_d,d_accuracy\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << num(e.loss_g) << ',' << num(e.loss_d) << ',' << num(e.d_accuracy) << '\n';
  }
}

}  // namespace sqgan::harness
