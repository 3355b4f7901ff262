#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "sqgan/errors.hpp"
#include "sqgan/harness.hpp"
#include "sqgan/pipeline.hpp"

using namespace sqgan;
using namespace sqgan::harness;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sqgan_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

gen::LatentTensor zero_latent(const gen::StyleAnsatz& a) { return {a.replicas, a.latent_dim}; }

}  // namespace

TEST(Profiles, PublishedValues) {
  const auto& torino = find_profile("ibm_torino");
  EXPECT_EQ(torino.parallel_circuits_per_job, 300);
  EXPECT_EQ(torino.n_qubits_max, 133);
  EXPECT_EQ(torino.p1, 5.8e-4);
  EXPECT_EQ(torino.p2, 5.3e-3);
  EXPECT_EQ(torino.readout_eps, 2.7e-2);
  EXPECT_EQ(torino.t_1q_us, 0.032);
  EXPECT_EQ(torino.t_2q_us, 0.101);
  EXPECT_EQ(torino.t_readout_us, 1.56);

  const auto& aria = find_profile("aria_1");
  EXPECT_EQ(aria.readout_eps, 5.1e-3);
  EXPECT_EQ(aria.p1, 3e-4);
  EXPECT_EQ(aria.p2, 6e-3);
  EXPECT_EQ(aria.t_1q_us, 135.0);
  EXPECT_EQ(aria.t_2q_us, 600.0);
  EXPECT_EQ(aria.t_readout_us, 300.0);
  EXPECT_EQ(aria.n_qubits_max, 25);
  EXPECT_EQ(aria.parallel_circuits_per_job, 1);
  EXPECT_EQ(aria.technology, Technology::TrappedIon);

  const auto& cusco = find_profile("ibm_cusco");
  EXPECT_EQ(cusco.p2, 9.1e-2);
  EXPECT_EQ(cusco.readout_eps, 5.7e-2);
  EXPECT_EQ(cusco.t_1q_us, 0.044);
  EXPECT_EQ(cusco.t_2q_us, 0.487);
  EXPECT_EQ(cusco.t_readout_us, 4.0);
  EXPECT_EQ(cusco.n_qubits_max, 127);

  EXPECT_EQ(&find_profile("aria-1"), &aria);
  EXPECT_THROW(find_profile("nope"), ConfigError);
}

TEST(Profiles, ChecksumsAreStableAndDistinct) {
  const auto& ps = builtin_profiles();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i].validate();
    EXPECT_EQ(ps[i].checksum().size(), 16u);
    EXPECT_EQ(ps[i].checksum(), DeviceProfile(ps[i]).checksum());
    for (std::size_t j = i + 1; j < ps.size(); ++j) EXPECT_NE(ps[i].checksum(), ps[j].checksum());
  }
  auto tweaked = ps[0];
  tweaked.readout_eps = 0.0;
  EXPECT_NE(tweaked.checksum(), ps[0].checksum());
  tweaked.p1 = -1.0;
  EXPECT_THROW(tweaked.validate(), ConfigError);
}

TEST(RunPlan, PublishedCircuitCounts) {
  const auto& torino = find_profile("ibm_torino");
  const auto& aria = find_profile("aria_1");
  EXPECT_EQ(make_run_plan(100000, 16, 4000, torino).circuits_needed, 6250);
  EXPECT_EQ(make_run_plan(100000, 16, 4000, torino).jobs_needed, 21);
  EXPECT_EQ(make_run_plan(100000, 8, 512, aria).circuits_needed, 12500);
  EXPECT_EQ(make_run_plan(100000, 8, 512, aria).jobs_needed, 12500);
}

TEST(RunPlan, ArithmeticInvariant) {
  const auto& torino = find_profile("ibm_torino");
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> kd(1, 1000000);
  std::uniform_int_distribution<int> md(1, 16);
  for (int t = 0; t < 2000; ++t) {
    const auto k = kd(rng);
    const int m = md(rng);
    const auto plan = make_run_plan(k, m, 100, torino);
    EXPECT_GE(plan.circuits_needed * m, k);
    EXPECT_LT(plan.circuits_needed * m - k, m);
    EXPECT_GE(plan.jobs_needed * 300, plan.circuits_needed);
    EXPECT_LT(plan.jobs_needed * 300 - plan.circuits_needed, 300);
  }
  EXPECT_THROW(make_run_plan(0, 1, 1, torino), ArgumentError);
  EXPECT_THROW(make_run_plan(1, 0, 1, torino), ArgumentError);
  EXPECT_THROW(make_run_plan(1, 1, 0, torino), ArgumentError);
}

TEST(Runtime, AriaJobMatchesGateCountModel) {
  gen::StyleAnsatz a;
  a = a.with_replicas(8);
  const auto circuit = gen::build_parallel_circuit(a, gen::ParamVector{std::vector<gen::ParamPair>(12)},
                                                   zero_latent(a));
  int one = 0, two = 0;
  for (const auto& g : circuit) (g.arity() == 1 ? one : two)++;
  // Per replica: RY, RZ and the closing RY on each of 3 qubits, plus a ring of 3 entanglers.
  EXPECT_EQ(one, 8 * 9);
  EXPECT_EQ(two, 8 * 3);
  const auto& aria = find_profile("aria_1");
  const auto plan = make_run_plan(100000, 8, 512, aria);
  const auto est = estimate_runtime(aria, circuit, 24, plan);
  const double shot_us = one * 135.0 + two * 600.0 + 300.0;
  EXPECT_NEAR(est.per_shot_s, shot_us * 1e-6, 1e-15);
  EXPECT_NEAR(est.per_job_s, 512 * shot_us * 1e-6, 1e-9);
  EXPECT_NEAR(est.per_job_s, 12.503, 1e-3);
  EXPECT_LE(std::abs(est.per_job_s - 17.3) / 17.3, 0.5);
  EXPECT_NEAR(est.total_s, 12500 * est.per_job_s, 1e-6);
}

TEST(Runtime, TorinoPerShotBelowOneMillisecond) {
  gen::StyleAnsatz a;
  a = a.with_replicas(16);
  const auto circuit = gen::build_parallel_circuit(a, gen::ParamVector{std::vector<gen::ParamPair>(12)},
                                                   zero_latent(a));
  const auto& torino = find_profile("ibm_torino");
  const auto est = estimate_runtime(torino, circuit, 48, make_run_plan(100000, 16, 4000, torino));
  // Replicas run side by side. In each block RY and RZ overlap across qubits
  // (2 t1), the ring of entanglers is a chain (3 t2) and the closing RY on
  // the ring's last target adds t1.
  const double depth_us = 3 * 0.032 + 3 * 0.101;
  EXPECT_NEAR(schedule_duration_us(torino, circuit), depth_us, 1e-12);
  EXPECT_NEAR(est.per_shot_s, (depth_us + 1.56 + 250.0) * 1e-6, 1e-15);
  EXPECT_LT(est.per_shot_s, 1e-3);
  // Same order of magnitude as the measured 0.269 ms.
  EXPECT_LT(std::abs(std::log10(est.per_shot_s / 0.269e-3)), 1.0);
  EXPECT_NEAR(est.per_job_s, 300 * 4000 * est.per_shot_s + 3.0, 1e-9);
}

TEST(Runtime, EmptyCircuitIsReadoutOnly) {
  const auto& aria = find_profile("aria_1");
  const std::vector<sim::GateOp> none;
  const auto est = estimate_runtime(aria, none, 3, make_run_plan(10, 1, 1000, aria));
  EXPECT_NEAR(est.per_circuit_s, 1000 * 300e-6, 1e-12);
  const auto& torino = find_profile("ibm_torino");
  const auto t = estimate_runtime(torino, none, 3, make_run_plan(10, 1, 1000, torino));
  EXPECT_NEAR(t.per_circuit_s, 1000 * (1.56 + 250.0) * 1e-6, 1e-12);
}

TEST(Runtime, WidthBeyondDeviceThrows) {
  gen::StyleAnsatz a;
  a = a.with_replicas(9);
  const auto circuit = gen::build_parallel_circuit(a, gen::ParamVector{std::vector<gen::ParamPair>(12)},
                                                   zero_latent(a));
  const auto& aria = find_profile("aria_1");
  EXPECT_THROW(estimate_runtime(aria, circuit, 27, make_run_plan(100, 9, 10, aria)), CapacityError);
}

TEST(Config, ParsesSectionsAndTypes) {
  std::istringstream in(
      "# top\nseed = 9\n\n[train]\nepochs = 40 \nlr_g=0.001\nquiet = true\n[ansatz]\nentangler = crz\n");
  const auto c = Config::parse(in);
  EXPECT_EQ(c.get_int("seed", 0), 9);
  EXPECT_EQ(c.get_int("train.epochs", 0), 40);
  EXPECT_EQ(c.get_double("train.lr_g", 0), 0.001);
  EXPECT_TRUE(c.get_bool("train.quiet", false));
  EXPECT_EQ(c.get("ansatz.entangler", ""), "crz");
  EXPECT_EQ(c.get("missing", "x"), "x");
  EXPECT_EQ(c.sections(), (std::vector<std::string>{"train", "ansatz"}));
  EXPECT_EQ(ansatz_from_config(c, 3).entangler, gen::Entangler::CRZ);
  const auto tc = train_config_from_config(c);
  EXPECT_EQ(tc.n_epochs, 40);
  EXPECT_EQ(tc.lr_g, 0.001);
  EXPECT_EQ(config_hash(c), config_hash(c));
  auto c2 = c;
  c2.set("train.epochs", "41");
  EXPECT_NE(config_hash(c), config_hash(c2));
}

TEST(Config, RejectsMalformedLines) {
  std::istringstream a("[train\n"), b("just words\n"), c("= 3\n");
  EXPECT_THROW(Config::parse(a), ConfigError);
  EXPECT_THROW(Config::parse(b), ConfigError);
  EXPECT_THROW(Config::parse(c), ConfigError);
  std::istringstream d("x = abc\n");
  EXPECT_THROW(Config::parse(d).get_double("x", 0), ConfigError);
}

TEST(Config, OracleSpec) {
  std::istringstream in(
      "seed = 5\n[column s]\nfamily = truncated-power-law\nmin = 2\nexponent = 3\n"
      "[column y]\nfamily = clipped-gaussian\nsigma = 0.5\n");
  const auto spec = oracle_spec_from_config(Config::parse(in));
  ASSERT_EQ(spec.columns.size(), 2u);
  EXPECT_EQ(spec.seed, 5u);
  EXPECT_EQ(spec.columns[0].name, "s");
  EXPECT_EQ(std::get<data::TruncatedPowerLaw>(spec.columns[0].family).min, 2.0);
  EXPECT_EQ(std::get<data::ClippedGaussian>(spec.columns[1].family).sigma, 0.5);
  std::istringstream bad("[column s]\nfamily = cauchy\n");
  EXPECT_THROW(oracle_spec_from_config(Config::parse(bad)), ConfigError);
}

TEST(Params, TextRoundTrip) {
  gen::StyleAnsatz a;
  a.latent_dim = 5;
  sim::Rng rng(4);
  const auto p = gen::random_params(a, 0.1, 3.14, rng);
  std::stringstream ss;
  write_params_text(ss, a, p);
  const auto [a2, p2] = read_params_text(ss);
  EXPECT_EQ(a2.base_qubits, a.base_qubits);
  EXPECT_EQ(a2.latent_dim, 5);
  EXPECT_EQ(p2, p);
  std::istringstream bad("something else\n");
  EXPECT_THROW(read_params_text(bad), DataError);
}

TEST(Checkpoint, RoundTripKeepsEverything) {
  const auto raw = data::synth_dataset(data::default_oracle_spec(3), 2000);
  const auto fit = data::fit_transform(raw);
  gen::StyleAnsatz a;
  sim::Rng rng(8);
  Checkpoint c;
  c.ansatz = a;
  c.params = gen::random_params(a, 0.1, 3.14, rng);
  std::mt19937_64 drng(2);
  adv::DiscriminatorNet d(adv::default_discriminator_layers(3), 3);
  d.init_glorot(drng);
  c.discriminator = d;
  c.transform = fit.model;
  c.config_hash = "abc";
  c.config = {{"train.epochs", "3"}};
  const auto path = (scratch_dir("ckpt") / "c.json").string();
  save_checkpoint(path, c);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.config_hash, "abc");
  EXPECT_EQ(back.config, c.config);
  ASSERT_TRUE(back.discriminator.has_value());
  const std::vector<double> probe{0.1, -0.4, 0.9, 0.3, 0.3, -1.0};
  EXPECT_EQ(back.discriminator->forward(probe), d.forward(probe));
  ASSERT_EQ(back.transform.dims(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& x = back.transform.transforms[i];
    const auto& y = fit.model.transforms[i];
    EXPECT_EQ(x.yj_lambda, y.yj_lambda);
    EXPECT_EQ(x.branch, y.branch);
    EXPECT_EQ(x.standardize_mean, y.standardize_mean);
    EXPECT_EQ(x.standardize_std, y.standardize_std);
  }
  EXPECT_EQ(apply_transform(back.transform, raw), fit.transformed);
  EXPECT_THROW(load_checkpoint(path + ".missing"), DataError);
}

TEST(Pipeline, IdenticalFilesGiveZeroKl) {
  const auto ref = data::synth_dataset(data::default_oracle_spec(11), 5000);
  const auto grids = pipeline::reference_grids(ref);
  const auto report = pipeline::evaluate(ref, grids);
  ASSERT_EQ(report.kl.size(), 3u);
  for (const auto& r : report.kl) {
    EXPECT_EQ(r.nominal, 0.0);
    EXPECT_EQ(r.upper_delta, 0.0);
    EXPECT_EQ(r.lower_delta, 0.0);
  }
  for (double k : pipeline::marginal_kls(ref, grids)) EXPECT_EQ(k, 0.0);
  const auto dir = scratch_dir("eval");
  pipeline::write_evaluation(dir.string(), ref, ref, grids, report);
  EXPECT_TRUE(std::filesystem::exists(dir / "kl.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / ("hist_" + ref.column_names()[0] + "_generated.csv")));
  EXPECT_TRUE(std::filesystem::exists(dir / ("ratio_" + ref.column_names()[0] + "_" + ref.column_names()[1] + ".csv")));
}

TEST(Pipeline, GenerationIsDeterministicAndSized) {
  const auto raw = data::synth_dataset(data::default_oracle_spec(3), 1000);
  const auto model = data::fit_transform(raw).model;
  gen::StyleAnsatz a;
  sim::Rng rng(8);
  const auto p = gen::random_params(a, 0.1, 3.14, rng);
  pipeline::GenerationRequest req;
  req.samples = 101;
  req.replicas = 8;
  req.shots = 64;
  req.noise = find_profile("aria_1").noise();
  req.seed = 17;
  const auto g1 = pipeline::generate(a, p, model, req);
  const auto g2 = pipeline::generate(a, p, model, req);
  EXPECT_EQ(g1.circuits, 13);
  EXPECT_EQ(g1.raw.size(), 101u);
  EXPECT_EQ(g1.physical.rows(), 101u);
  EXPECT_EQ(g1.raw, g2.raw);
  req.shots.reset();
  EXPECT_THROW(pipeline::generate(a, p, model, req), UnsupportedError);
}
