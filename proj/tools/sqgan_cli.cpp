// Command-line front end: synthetic data, training, generation, evaluation,
// noisy deployment runs and runtime estimates.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqgan/adversary.hpp"
#include "sqgan/datapipe.hpp"
#include "sqgan/errors.hpp"
#include "sqgan/evaluation.hpp"
#include "sqgan/generator.hpp"
#include "sqgan/harness.hpp"
#include "sqgan/pipeline.hpp"

using namespace sqgan;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_manifest(const std::string& path, const std::string& command, const json& args,
                    const json& extra) {
  json m;
  m["tool"] = "sqgan";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["arguments"] = args;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << m.dump(2) << '\n';
}

json profile_json(const harness::DeviceProfile& p) {
  return {{"name", p.name},
          {"version", p.version},
          {"checksum", p.checksum()},
          {"p1", p.p1},
          {"p2", p.p2},
          {"readout_eps", p.readout_eps}};
}

json config_json(const harness::Config& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

// Generator-space samples plus the shot count they were estimated with.
void write_raw_csv(const std::string& path, const std::vector<std::string>& columns,
                   const std::vector<gen::SampleVector>& raw, std::optional<std::int64_t> shots) {
  std::vector<std::string> names;
  for (const auto& c : columns) names.push_back("x_" + c);
  names.push_back("n_shots");
  std::vector<double> values;
  values.reserve(raw.size() * names.size());
  for (const auto& s : raw) {
    values.insert(values.end(), s.begin(), s.end());
    values.push_back(shots ? static_cast<double>(*shots) : 0.0);
  }
  data::write_csv_file(path, data::RawDataset(names, values));
}

struct RawSamples {
  std::vector<gen::SampleVector> samples;
  std::optional<std::int64_t> shots;
};

RawSamples read_raw_csv(const std::string& path) {
  const auto ds = data::read_csv_file(path);
  const auto shot_col = ds.column_index("n_shots");
  RawSamples r;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    gen::SampleVector s;
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      if (c != shot_col) s.push_back(ds.at(i, c));
    }
    r.samples.push_back(std::move(s));
    const double n = ds.at(i, shot_col);
    if (n > 0) r.shots = static_cast<std::int64_t>(n);
  }
  return r;
}

std::optional<harness::DeviceProfile> device_or_none(const std::string& name) {
  if (name.empty() || name == "none") return std::nullopt;
  return harness::find_profile(name);
}

void print_plan(const harness::RunPlan& plan, const harness::RuntimeEstimate& est,
                const harness::DeviceProfile& profile) {
  std::printf("device              %s (checksum %s)\n", profile.name.c_str(),
              profile.checksum().c_str());
  std::printf("samples             %lld\n", static_cast<long long>(plan.total_samples));
  std::printf("replicas            %d\n", plan.replicas);
  std::printf("shots               %lld\n", static_cast<long long>(plan.shots));
  std::printf("circuits_needed     %lld\n", static_cast<long long>(plan.circuits_needed));
  std::printf("jobs_needed         %lld\n", static_cast<long long>(plan.jobs_needed));
  std::printf("per_shot_s          %.6g\n", est.per_shot_s);
  std::printf("per_circuit_s       %.6g\n", est.per_circuit_s);
  std::printf("per_job_s           %.6g\n", est.per_job_s);
  std::printf("total_s             %.6g\n", est.total_s);
  std::printf("(execution plus fixed per-job overhead only; excludes transpilation and queueing)\n");
}

// ---- subcommands -------------------------------------------------------------

struct SynthArgs {
  std::string spec, out;
  std::int64_t k = 10000;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& a) {
  auto spec = a.spec.empty() ? data::default_oracle_spec()
                             : harness::oracle_spec_from_config(harness::Config::parse_file(a.spec));
  if (a.seed) spec.seed = *a.seed;
  if (a.k < 2) throw ArgumentError("--k must be >= 2");
  const auto ds = data::synth_dataset(spec, static_cast<std::size_t>(a.k));
  data::write_csv_file(a.out, ds);
  write_manifest(a.out + ".manifest.json", "synth-data",
                 {{"spec", a.spec}, {"k", a.k}, {"out", a.out}},
                 {{"seed", spec.seed}, {"columns", ds.column_names()}});
  std::printf("wrote %zu rows to %s\n", ds.rows(), a.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string data, config, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  auto cfg = a.config.empty() ? harness::Config{} : harness::Config::parse_file(a.config);
  if (a.seed) cfg.set("train.seed", std::to_string(*a.seed));
  if (a.epochs) cfg.set("train.epochs", std::to_string(*a.epochs));
  const auto raw = data::read_csv_file(a.data);
  raw.validate();
  const auto ansatz = harness::ansatz_from_config(cfg, static_cast<int>(raw.cols()));
  if (ansatz.base_qubits != static_cast<int>(raw.cols())) {
    throw ConfigError("ansatz.base_qubits must equal the number of data columns (" +
                      std::to_string(raw.cols()) + ")");
  }
  const auto tcfg = harness::train_config_from_config(cfg);
  const auto fit = data::fit_transform(raw);

  adv::TrainHooks hooks;
  if (!a.quiet) {
    hooks.on_epoch = [&](const adv::EpochLoss& e, const gen::ParamVector&) {
      std::fprintf(stderr, "epoch %d loss_g %.5f (ln2 gap %+.5f) loss_d %.5f d_acc %.3f\n", e.epoch,
                   e.loss_g, e.loss_g - std::log(2.0), e.loss_d, e.d_accuracy);
    };
  }
  auto result = adv::train(tcfg, fit.transformed, raw.rows(), ansatz, hooks);

  harness::Checkpoint ckpt{ansatz, result.params, result.discriminator, fit.model,
                           harness::config_hash(cfg), cfg.values()};
  harness::save_checkpoint(a.out, ckpt);
  {
    std::ofstream loss(a.out + ".loss.csv");
    if (!loss) throw DataError("cannot write '" + a.out + ".loss.csv'");
    harness::write_loss_csv(loss, result.history);
  }
  json resolved = {{"ansatz.base_qubits", ansatz.base_qubits},
                   {"ansatz.layers", ansatz.layers},
                   {"ansatz.latent_dim", ansatz.latent_dim},
                   {"ansatz.entangler", gen::to_string(ansatz.entangler)},
                   {"train.batch_size", tcfg.batch_size},
                   {"train.epochs", tcfg.n_epochs},
                   {"train.lr_g", tcfg.lr_g},
                   {"train.lr_d", tcfg.lr_d},
                   {"train.seed", tcfg.seed},
                   {"train.d_steps", tcfg.discriminator_steps},
                   {"train.steps_per_epoch", tcfg.steps_per_epoch}};
  write_manifest(a.out + ".manifest.json", "train",
                 {{"data", a.data}, {"config", a.config}, {"out", a.out}},
                 {{"config_file", config_json(cfg)},
                  {"resolved", resolved},
                  {"config_hash", ckpt.config_hash},
                  {"outputs", {a.out, a.out + ".loss.csv"}}});
  const auto& last = result.history.back();
  std::printf("trained %d epochs: loss_g %.5f loss_d %.5f -> %s\n", last.epoch, last.loss_g,
              last.loss_d, a.out.c_str());
  return 0;
}

struct GenerateArgs {
  std::string checkpoint, out, mode = "exact", device = "none";
  std::int64_t samples = 0, shots = 0;
  int replicas = 1;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a) {
  const auto ckpt = harness::load_checkpoint(a.checkpoint);
  const auto profile = device_or_none(a.device);
  pipeline::GenerationRequest req;
  req.samples = a.samples;
  req.replicas = a.replicas;
  req.seed = a.seed;
  if (a.mode == "shots") {
    if (a.shots < 1) throw ArgumentError("--mode shots needs --shots >= 1");
    req.shots = a.shots;
  } else if (a.mode != "exact") {
    throw ArgumentError("--mode must be exact or shots");
  } else if (profile) {
    throw UnsupportedError("device noise requires --mode shots");
  }
  json extra = json::object();
  if (profile) {
    req.noise = profile->noise();
    const auto plan = harness::make_run_plan(a.samples, a.replicas, a.shots, *profile);
    const auto width = ckpt.ansatz.with_replicas(a.replicas).width();
    if (width > profile->n_qubits_max) {
      throw CapacityError(std::to_string(width) + "-qubit circuit exceeds " + profile->name + " (" +
                          std::to_string(profile->n_qubits_max) + " qubits)");
    }
    extra["profile"] = profile_json(*profile);
    extra["jobs_needed"] = plan.jobs_needed;
  }
  const auto outp = pipeline::generate(ckpt.ansatz, ckpt.params, ckpt.transform, req);
  data::write_csv_file(a.out, outp.physical);
  write_raw_csv(a.out + ".raw.csv", ckpt.transform.columns, outp.raw, outp.shots);
  extra["circuits_needed"] = outp.circuits;
  extra["clamped"] = outp.clamped;
  extra["config_hash"] = ckpt.config_hash;
  extra["outputs"] = {a.out, a.out + ".raw.csv"};
  write_manifest(a.out + ".manifest.json", "generate",
                 {{"checkpoint", a.checkpoint},
                  {"samples", a.samples},
                  {"replicas", a.replicas},
                  {"mode", a.mode},
                  {"shots", a.shots},
                  {"device", a.device},
                  {"seed", a.seed},
                  {"out", a.out}},
                 extra);
  std::printf("generated %lld samples from %lld circuits -> %s\n",
              static_cast<long long>(a.samples), static_cast<long long>(outp.circuits),
              a.out.c_str());
  if (outp.clamped) std::printf("warning: %zu values clamped by the inverse transform\n", outp.clamped);
  return 0;
}

struct EvaluateArgs {
  std::string generated, reference, out, raw, checkpoint;
  std::vector<std::string> scales;
};

void print_kl(const pipeline::EvaluationReport& report) {
  for (std::size_t i = 0; i < report.kl.size(); ++i) {
    const auto& r = report.kl[i];
    std::printf("KL[%s] = %.6f (+%.6f / -%.6f), dropped %zu\n", r.dimension.c_str(), r.nominal,
                r.upper_delta, r.lower_delta, report.dropped[i]);
  }
}

std::vector<data::BinScale> parse_scales(const std::vector<std::string>& s) {
  std::vector<data::BinScale> out;
  for (const auto& v : s) out.push_back(data::parse_bin_scale(v));
  return out;
}

int run_evaluate(const EvaluateArgs& a) {
  const auto gen_ds = data::read_csv_file(a.generated);
  const auto ref_ds = data::read_csv_file(a.reference);
  const auto grids = pipeline::reference_grids(ref_ds, parse_scales(a.scales));
  std::optional<harness::Checkpoint> ckpt;
  std::optional<RawSamples> raw;
  if (!a.raw.empty() || !a.checkpoint.empty()) {
    if (a.raw.empty() || a.checkpoint.empty()) {
      throw ArgumentError("error bars need both --raw and --checkpoint");
    }
    ckpt = harness::load_checkpoint(a.checkpoint);
    raw = read_raw_csv(a.raw);
  }
  const auto report = raw ? pipeline::evaluate(gen_ds, grids, &raw->samples, raw->shots, &ckpt->transform)
                          : pipeline::evaluate(gen_ds, grids);
  pipeline::write_evaluation(a.out, gen_ds, ref_ds, grids, report);
  json axes = json::array();
  for (std::size_t c = 0; c < grids.axes.size(); ++c) {
    const auto& ax = grids.axes[c];
    axes.push_back({{"column", grids.columns[c]},
                    {"scale", data::to_string(ax.scale)},
                    {"lo", ax.lo},
                    {"hi", ax.hi},
                    {"bins", ax.bins},
                    {"reflected", ax.reflected}});
  }
  json dropped = json::object();
  for (std::size_t c = 0; c < report.dropped.size(); ++c) dropped[grids.columns[c]] = report.dropped[c];
  write_manifest((fs::path(a.out) / "manifest.json").string(), "evaluate",
                 {{"generated", a.generated},
                  {"reference", a.reference},
                  {"raw", a.raw},
                  {"checkpoint", a.checkpoint},
                  {"out", a.out}},
                 {{"axes", axes}, {"dropped", dropped}, {"clamped", report.clamped}});
  print_kl(report);
  return 0;
}

struct NoiseSimArgs {
  std::string checkpoint, device, reference, out;
  std::int64_t shots = 512, samples = 100000;
  int replicas = 8;
  std::uint64_t seed = 0;
};

int run_noise_sim(const NoiseSimArgs& a) {
  const auto ckpt = harness::load_checkpoint(a.checkpoint);
  const auto& profile = harness::find_profile(a.device);
  const auto width = ckpt.ansatz.with_replicas(a.replicas).width();
  if (width > profile.n_qubits_max) {
    throw CapacityError(std::to_string(width) + "-qubit circuit exceeds " + profile.name);
  }
  pipeline::GenerationRequest req{a.samples, a.replicas, a.shots, profile.noise(), a.seed};
  const auto outp = pipeline::generate(ckpt.ansatz, ckpt.params, ckpt.transform, req);
  fs::create_directories(a.out);
  const auto gen_path = (fs::path(a.out) / "generated.csv").string();
  data::write_csv_file(gen_path, outp.physical);
  write_raw_csv((fs::path(a.out) / "raw.csv").string(), ckpt.transform.columns, outp.raw, outp.shots);
  json extra = {{"profile", profile_json(profile)},
                {"circuits_needed", outp.circuits},
                {"clamped", outp.clamped},
                {"config_hash", ckpt.config_hash}};
  if (!a.reference.empty()) {
    const auto ref_ds = data::read_csv_file(a.reference);
    const auto grids = pipeline::reference_grids(ref_ds);
    const auto report =
        pipeline::evaluate(outp.physical, grids, &outp.raw, outp.shots, &ckpt.transform);
    pipeline::write_evaluation(a.out, outp.physical, ref_ds, grids, report);
    print_kl(report);
  }
  write_manifest((fs::path(a.out) / "manifest.json").string(), "noise-sim",
                 {{"checkpoint", a.checkpoint},
                  {"device", a.device},
                  {"shots", a.shots},
                  {"samples", a.samples},
                  {"replicas", a.replicas},
                  {"seed", a.seed},
                  {"reference", a.reference},
                  {"out", a.out}},
                 extra);
  std::printf("%s: %lld samples at %lld shots from %lld circuits -> %s\n", profile.name.c_str(),
              static_cast<long long>(a.samples), static_cast<long long>(a.shots),
              static_cast<long long>(outp.circuits), a.out.c_str());
  return 0;
}

struct RuntimeArgs {
  std::string device, checkpoint;
  std::int64_t shots = 512, samples = 100000;
  int replicas = 1, base_qubits = 3, layers = 1, latent_dim = 5;
};

int run_estimate(const RuntimeArgs& a) {
  const auto& profile = harness::find_profile(a.device);
  gen::StyleAnsatz ansatz;
  if (!a.checkpoint.empty()) {
    ansatz = harness::load_checkpoint(a.checkpoint).ansatz;
  } else {
    ansatz.base_qubits = a.base_qubits;
    ansatz.layers = a.layers;
    ansatz.latent_dim = a.latent_dim;
  }
  ansatz = ansatz.with_replicas(a.replicas);
  ansatz.validate();
  // Gate layout does not depend on parameter values.
  const gen::ParamVector zero{std::vector<gen::ParamPair>(static_cast<std::size_t>(ansatz.parameter_count()))};
  const gen::LatentTensor latent(ansatz.replicas, ansatz.latent_dim);
  const auto circuit = gen::build_parallel_circuit(ansatz, zero, latent);
  const auto plan = harness::make_run_plan(a.samples, a.replicas, a.shots, profile);
  const auto est = harness::estimate_runtime(profile, circuit, ansatz.width(), plan);
  std::printf("circuit_width       %d\n", ansatz.width());
  std::printf("gate_count          %zu\n", circuit.size());
  print_plan(plan, est, profile);
  return 0;
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Usage: return 1;
    case ErrorClass::Data: return 2;
    case ErrorClass::Numeric: return 3;
  }
  return 1;
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Style-based quantum GAN toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "Write a synthetic non-Gaussian dataset");
  c_synth->add_option("--spec", synth.spec, "Oracle spec file (default: built-in s,t,y oracle)");
  c_synth->add_option("--k", synth.k, "Number of rows")->required();
  c_synth->add_option("--seed", synth.seed, "Override the spec seed");
  c_synth->add_option("--out", synth.out, "Output CSV")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Fit the transform and train the generator");
  c_train->add_option("--data", tr.data, "Training CSV")->required();
  c_train->add_option("--config", tr.config, "Config file");
  c_train->add_option("--seed", tr.seed, "Override train.seed");
  c_train->add_option("--epochs", tr.epochs, "Override train.epochs");
  c_train->add_flag("--quiet", tr.quiet, "No per-epoch progress");
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();

  GenerateArgs ga;
  auto* c_gen = app.add_subcommand("generate", "Sample physical-space events from a checkpoint");
  c_gen->add_option("--checkpoint", ga.checkpoint)->required();
  c_gen->add_option("--samples", ga.samples, "Number of samples k")->required();
  c_gen->add_option("--replicas", ga.replicas, "Parallel replicas m");
  c_gen->add_option("--mode", ga.mode, "exact or shots");
  c_gen->add_option("--shots", ga.shots);
  c_gen->add_option("--device", ga.device, "Device profile or none");
  c_gen->add_option("--seed", ga.seed);
  c_gen->add_option("--out", ga.out, "Output CSV")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Compare generated and reference samples");
  c_eval->add_option("--generated", ev.generated)->required();
  c_eval->add_option("--reference", ev.reference)->required();
  c_eval->add_option("--raw", ev.raw, "Raw generator output (*.raw.csv) for error bars");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint holding the transform model");
  c_eval->add_option("--scale", ev.scales, "Bin scale per column (linear|log)");
  c_eval->add_option("--out", ev.out, "Output directory")->required();

  NoiseSimArgs ns;
  auto* c_noise = app.add_subcommand("noise-sim", "Run a checkpoint through a device noise model");
  c_noise->add_option("--checkpoint", ns.checkpoint)->required();
  c_noise->add_option("--device", ns.device)->required();
  c_noise->add_option("--shots", ns.shots);
  c_noise->add_option("--samples", ns.samples);
  c_noise->add_option("--replicas", ns.replicas);
  c_noise->add_option("--seed", ns.seed);
  c_noise->add_option("--reference", ns.reference, "Reference CSV for KL with error bars");
  c_noise->add_option("--out", ns.out, "Output directory")->required();

  RuntimeArgs rt;
  auto* c_rt = app.add_subcommand("estimate-runtime", "Print the run plan and execution time estimate");
  c_rt->add_option("--device", rt.device)->required();
  c_rt->add_option("--replicas", rt.replicas);
  c_rt->add_option("--shots", rt.shots);
  c_rt->add_option("--samples", rt.samples);
  c_rt->add_option("--checkpoint", rt.checkpoint, "Take the ansatz from a checkpoint");
  c_rt->add_option("--base-qubits", rt.base_qubits);
  c_rt->add_option("--layers", rt.layers);
  c_rt->add_option("--latent-dim", rt.latent_dim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "sqgan: error: " << one_line(e.what()) << '\n';
    return 1;
  }

  try {
    if (*c_synth) return run_synth(synth);
    if (*c_train) return run_train(tr);
    if (*c_gen) return run_generate(ga);
    if (*c_eval) return run_evaluate(ev);
    if (*c_noise) return run_noise_sim(ns);
    if (*c_rt) return run_estimate(rt);
  } catch (const Error& e) {
    std::cerr << "sqgan: error: " << one_line(e.what()) << '\n';
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "sqgan: error: " << one_line(e.what()) << '\n';
    return 2;
  }
  return 1;
}
