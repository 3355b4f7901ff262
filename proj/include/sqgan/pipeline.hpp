#pragma once

// End-to-end workflows shared by the command-line tool and the acceptance
// suite: deployment-style sample generation and evaluation against a
// reference sample.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sqgan/datapipe.hpp"
#include "sqgan/evaluation.hpp"
#include "sqgan/generator.hpp"
#include "sqgan/simulator.hpp"

namespace sqgan::pipeline {

struct GenerationRequest {
  std::int64_t samples = 0;
  int replicas = 1;
  std::optional<std::int64_t> shots;  // absent: exact expectation values
  std::optional<sim::NoiseSpec> noise;
  std::uint64_t seed = 0;
};

struct GenerationOutput {
  std::vector<gen::SampleVector> raw;  // generator-space samples in [-1, 1]
  data::RawDataset physical;
  std::size_t clamped = 0;
  std::optional<std::int64_t> shots;
  std::int64_t circuits = 0;
};

// Runs ceil(k/m) parallel circuits. Circuit c draws its latent tensor and
// shot outcomes from the stream derive_seed(seed, c), so output does not
// depend on execution order.
GenerationOutput generate(const gen::StyleAnsatz& ansatz, const gen::ParamVector& params,
                          const data::TransformModel& model, const GenerationRequest& request);

struct ReferenceGrids {
  std::vector<std::string> columns;
  std::vector<data::GridAxis> axes;
  std::vector<data::HistogramGrid> histograms;
};

// 100-bin axes fitted to the reference columns and frozen. `scales` may
// override the per-column choice; otherwise auto_scale decides.
ReferenceGrids reference_grids(const data::RawDataset& reference,
                               const std::vector<data::BinScale>& scales = {}, int bins = 100);

std::vector<double> marginal_kls(const data::RawDataset& generated, const ReferenceGrids& grids);

struct EvaluationReport {
  std::vector<eval::KlResult> kl;
  std::vector<std::size_t> dropped;
  std::size_t clamped = 0;
};

// KL per dimension with error bars when shot variances are available
// (raw samples + shots + model); zero-width intervals otherwise.
EvaluationReport evaluate(const data::RawDataset& generated, const ReferenceGrids& grids,
                          const std::vector<gen::SampleVector>* raw = nullptr,
                          std::optional<std::int64_t> shots = std::nullopt,
                          const data::TransformModel* model = nullptr);

// Writes kl.csv, per-column histograms, 2D correlation maps and ratio maps
// into `dir` (created if missing).
void write_evaluation(const std::string& dir, const data::RawDataset& generated,
                      const data::RawDataset& reference, const ReferenceGrids& grids,
                      const EvaluationReport& report);

}  // namespace sqgan::pipeline
