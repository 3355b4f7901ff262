#pragma once

// Binned KL divergences, shot-variance error bars via a perturbation scan,
// and 2D correlation / ratio maps.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqgan/datapipe.hpp"

namespace sqgan::eval {

inline constexpr double kKlFloor = 1e-12;

// Sum over bins of P ln(P / max(Q, eps)) on normalized counts; bins with
// P = 0 contribute nothing. Grids must share their axis.
double kl_divergence(const data::HistogramGrid& p, const data::HistogramGrid& q,
                     double eps = kKlFloor);

using VarianceVector = std::vector<double>;

// Binomial variance (1 - x_i^2) / n_shots of each shot-averaged entry, one
// vector per sample. n_shots absent (exact simulation) is unsupported.
std::vector<VarianceVector> sample_variance(std::span<const std::vector<double>> samples,
                                            std::optional<std::int64_t> n_shots);

struct KlResult {
  std::string dimension;
  double nominal = 0.0;
  double upper_delta = 0.0;
  double lower_delta = 0.0;
};

inline constexpr int kDeltaSteps = 11;

// delta_j = -1 + 0.2 j for j = 0..10.
constexpr double scan_delta(int j) { return -1.0 + 0.2 * j; }
inline constexpr int kNominalStep = 5;

struct ErrorBarScan {
  std::vector<KlResult> results;
  // kls[dim][j]: KL of perturbed set j for each dimension.
  std::vector<std::array<double, kDeltaSteps>> kls;
  std::vector<std::size_t> dropped;  // out-of-range generated samples, nominal set
  std::size_t clamped = 0;
};

// For every delta_j, perturbs x_i by delta_j sqrt(sigma_i) (clamped to
// [-1, 1]), maps back to physical space, bins on the reference axes and
// compares against the reference histograms. Nominal is j = 5.
ErrorBarScan kl_with_errorbars(std::span<const std::vector<double>> samples,
                               std::span<const VarianceVector> variances,
                               const data::TransformModel& model,
                               std::span<const data::HistogramGrid> reference);

// Per-cell ratio of normalized generated to normalized reference counts.
// Cells with an empty reference are NaN (undefined).
struct RatioMap {
  int rows = 0;  // x bins
  int cols = 0;  // y bins
  std::vector<double> values;

  double at(int ix, int iy) const { return values[static_cast<std::size_t>(ix * cols + iy)]; }
  static bool undefined(double v);
};

RatioMap ratio_map(const data::HistogramGrid2D& reference, const data::HistogramGrid2D& generated);

void write_kl_csv(std::ostream& out, std::span<const KlResult> results);
void write_matrix_csv(std::ostream& out, int rows, int cols, std::span<const double> values);

}  // namespace sqgan::eval
