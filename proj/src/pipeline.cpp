#include "sqgan/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "sqgan/errors.hpp"

namespace sqgan::pipeline {

GenerationOutput generate(const gen::StyleAnsatz& base, const gen::ParamVector& params,
                          const data::TransformModel& model, const GenerationRequest& request) {
  if (request.samples < 1) throw ArgumentError("sample count must be >= 1");
  if (request.shots && *request.shots < 1) throw ArgumentError("shots must be >= 1");
  if (!request.shots && request.noise && !request.noise->is_noiseless()) {
    throw UnsupportedError("noise models require shot mode");
  }
  const auto ansatz = base.with_replicas(request.replicas);
  ansatz.validate();
  if (model.dims() != static_cast<std::size_t>(ansatz.base_qubits)) {
    throw ConfigError("transform model has " + std::to_string(model.dims()) +
                      " columns, generator has " + std::to_string(ansatz.base_qubits) + " qubits");
  }
  GenerationOutput out;
  out.shots = request.shots;
  out.circuits = (request.samples + request.replicas - 1) / request.replicas;
  out.raw.reserve(static_cast<std::size_t>(out.circuits * request.replicas));
  for (std::int64_t c = 0; c < out.circuits; ++c) {
    sim::Rng rng(sim::derive_seed(request.seed, static_cast<std::uint64_t>(c)));
    const auto latent = gen::LatentTensor::standard_normal(ansatz.replicas, ansatz.latent_dim, rng);
    std::vector<gen::SampleVector> s;
    if (request.shots) {
      s = gen::run_parallel_shots(ansatz, params, latent, *request.shots, request.noise, rng);
    } else {
      s = gen::generate_samples(ansatz, params, std::span(&latent, 1), gen::ExactMode{});
    }
    for (auto& v : s) out.raw.push_back(std::move(v));
  }
  out.raw.resize(static_cast<std::size_t>(request.samples));
  auto inv = data::inverse_transform(model, out.raw);
  out.physical = std::move(inv.data);
  out.clamped = inv.clamped;
  return out;
}

ReferenceGrids reference_grids(const data::RawDataset& reference,
                               const std::vector<data::BinScale>& scales, int bins) {
  reference.validate();
  if (!scales.empty() && scales.size() != reference.cols()) {
    throw ConfigError("need one bin scale per reference column");
  }
  ReferenceGrids g;
  g.columns = reference.column_names();
  for (std::size_t c = 0; c < reference.cols(); ++c) {
    const auto col = reference.column(c);
    const auto scale = scales.empty() ? data::auto_scale(col) : scales[c];
    g.axes.push_back(data::fit_axis(col, scale, bins));
    g.histograms.push_back(data::bin_histogram(col, g.axes.back()));
  }
  return g;
}

namespace {
void check_columns(const data::RawDataset& generated, const ReferenceGrids& grids) {
  if (generated.column_names() != grids.columns) {
    throw DataError("generated and reference files have different columns");
  }
}
}  // namespace

std::vector<double> marginal_kls(const data::RawDataset& generated, const ReferenceGrids& grids) {
  check_columns(generated, grids);
  std::vector<double> kls;
  for (std::size_t c = 0; c < generated.cols(); ++c) {
    const auto h = data::bin_histogram(generated.column(c), grids.axes[c]);
    kls.push_back(eval::kl_divergence(h, grids.histograms[c]));
  }
  return kls;
}

EvaluationReport evaluate(const data::RawDataset& generated, const ReferenceGrids& grids,
                          const std::vector<gen::SampleVector>* raw,
                          std::optional<std::int64_t> shots, const data::TransformModel* model) {
  check_columns(generated, grids);
  EvaluationReport report;
  if (raw && shots && model) {
    const auto variances = eval::sample_variance(*raw, shots);
    auto scan = eval::kl_with_errorbars(*raw, variances, *model, grids.histograms);
    report.kl = std::move(scan.results);
    report.dropped = std::move(scan.dropped);
    report.clamped = scan.clamped;
    return report;
  }
  const auto kls = marginal_kls(generated, grids);
  for (std::size_t c = 0; c < kls.size(); ++c) {
    report.kl.push_back({grids.columns[c], kls[c], 0.0, 0.0});
    report.dropped.push_back(data::bin_histogram(generated.column(c), grids.axes[c]).out_of_range);
  }
  return report;
}

void write_evaluation(const std::string& dir, const data::RawDataset& generated,
                      const data::RawDataset& reference, const ReferenceGrids& grids,
                      const EvaluationReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw DataError("cannot write '" + (fs::path(dir) / name).string() + "'");
    return out;
  };
  {
    auto out = open("kl.csv");
    eval::write_kl_csv(out, report.kl);
  }
  const auto& cols = grids.columns;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto gen_out = open("hist_" + cols[c] + "_generated.csv");
    data::write_histogram_csv(gen_out, data::bin_histogram(generated.column(c), grids.axes[c]));
    auto ref_out = open("hist_" + cols[c] + "_reference.csv");
    data::write_histogram_csv(ref_out, grids.histograms[c]);
  }
  for (std::size_t a = 0; a < cols.size(); ++a) {
    for (std::size_t b = a + 1; b < cols.size(); ++b) {
      const auto g2 = data::bin_histogram2d(generated.column(a), generated.column(b), grids.axes[a],
                                            grids.axes[b]);
      const auto r2 = data::bin_histogram2d(reference.column(a), reference.column(b), grids.axes[a],
                                            grids.axes[b]);
      const std::string tag = cols[a] + "_" + cols[b];
      auto go = open("corr_" + tag + "_generated.csv");
      eval::write_matrix_csv(go, g2.x_axis.bins, g2.y_axis.bins, g2.counts);
      auto ro = open("corr_" + tag + "_reference.csv");
      eval::write_matrix_csv(ro, r2.x_axis.bins, r2.y_axis.bins, r2.counts);
      const auto ratio = eval::ratio_map(r2, g2);
      auto rat = open("ratio_" + tag + ".csv");
      eval::write_matrix_csv(rat, ratio.rows, ratio.cols, ratio.values);
    }
  }
}

}  // namespace sqgan::pipeline
