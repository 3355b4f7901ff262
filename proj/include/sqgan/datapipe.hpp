#pragma once

// Data ingestion and the pre/post-processing that maps physical columns onto
// the generator's [-1, 1] output range and back.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sqgan::data {

// k rows by N named columns, row-major.
class RawDataset {
 public:
  RawDataset() = default;
  RawDataset(std::vector<std::string> columns, std::vector<double> values);

  std::size_t rows() const noexcept { return columns_.empty() ? 0 : values_.size() / columns_.size(); }
  std::size_t cols() const noexcept { return columns_.size(); }
  const std::vector<std::string>& column_names() const noexcept { return columns_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double at(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols(), cols());
  }
  std::vector<double> column(std::size_t c) const;
  std::size_t column_index(const std::string& name) const;

  // Throws unless k >= 2 and every entry is finite.
  void validate() const;

 private:
  std::vector<std::string> columns_;
  std::vector<double> values_;
};

RawDataset read_csv(std::istream& in);
RawDataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const RawDataset& data);
void write_csv_file(const std::string& path, const RawDataset& data);

// ---- Yeo-Johnson power transform ------------------------------------------

double yeo_johnson(double x, double lambda);
// Throws DomainError when y lies outside the image of the forward map.
double inverse_yeo_johnson(double y, double lambda);

// Profile log-likelihood of lambda for the Gaussianised column.
double yeo_johnson_log_likelihood(std::span<const double> column, double lambda);

// Maximum-likelihood lambda by golden-section search.
double fit_yeo_johnson_lambda(std::span<const double> column, double lo = -5.0, double hi = 5.0,
                              double tol = 1e-6);

// Which constant term of the Yeo-Johnson map is dropped before
// standardization. Dropping it is exact (the mean absorbs it) and keeps the
// relative precision of strongly compressing lambdas on one-signed columns.
enum class YjBranch { Mixed, NonNegative, Negative };
const char* to_string(YjBranch b);
YjBranch parse_yj_branch(const std::string& s);

struct ColumnTransform {
  double yj_lambda = 1.0;
  YjBranch branch = YjBranch::Mixed;
  double standardize_mean = 0.0;
  double standardize_std = 1.0;
  double minmax_lo = -1.0;
  double minmax_hi = 1.0;

  double forward(double x) const;
  // Clamps to the valid domain instead of throwing; increments `clamped` when it does.
  double inverse(double x, std::size_t& clamped) const;
};

struct TransformModel {
  std::vector<std::string> columns;
  std::vector<ColumnTransform> transforms;

  std::size_t dims() const noexcept { return transforms.size(); }
  std::vector<double> forward_row(std::span<const double> row) const;
  void validate() const;
};

struct FitResult {
  TransformModel model;
  std::vector<double> transformed;  // k x N row-major, every entry in [-1, 1]
};

FitResult fit_transform(const RawDataset& data);

// Applies a fitted model to new data (row-major k x N output).
std::vector<double> apply_transform(const TransformModel& model, const RawDataset& data);

struct InverseResult {
  RawDataset data;
  std::size_t clamped = 0;
};

InverseResult inverse_transform(const TransformModel& model,
                                std::span<const std::vector<double>> samples);

// ---- Synthetic non-Gaussian oracle data ----------------------------------

// x = min * u^(-1/exponent), u ~ U(0, 1].
struct TruncatedPowerLaw {
  double min = 1.0;
  double exponent = 4.0;
};
// x = -scale * v^(-1/exponent), v ~ U(0, 1]; always <= -scale.
struct ShiftedNegativeHeavyTail {
  double scale = 1.0;
  double exponent = 3.0;
};
// Normal(mean, sigma) restricted to [lo, hi] by rejection.
struct ClippedGaussian {
  double mean = 0.0;
  double sigma = 1.0;
  double lo = -1.0;
  double hi = 1.0;
};

using ColumnFamily = std::variant<TruncatedPowerLaw, ShiftedNegativeHeavyTail, ClippedGaussian>;

struct OracleColumn {
  std::string name;
  ColumnFamily family;
};

struct SyntheticOracleSpec {
  std::uint64_t seed = 0;
  std::vector<OracleColumn> columns;

  void validate() const;
};

// Three columns shaped like (s, t, y): a steep power law above threshold, a
// negative heavy tail, and a bounded bell.
SyntheticOracleSpec default_oracle_spec(std::uint64_t seed = 1234);

RawDataset synth_dataset(const SyntheticOracleSpec& spec, std::size_t k);

// ---- Histograms ------------------------------------------------------------

enum class BinScale { Linear, Log };

const char* to_string(BinScale s);
BinScale parse_bin_scale(const std::string& s);

// Binning axis. With `reflected` the binned variable is -x (log bins over
// negative-valued data); lo/hi refer to the binned variable.
struct GridAxis {
  BinScale scale = BinScale::Linear;
  double lo = 0.0;
  double hi = 1.0;
  int bins = 100;
  bool reflected = false;

  std::vector<double> edges() const;
  void validate() const;
  bool operator==(const GridAxis&) const = default;
};

// Axis fitted to the full range of reference values. Log scale over
// negative-only data is reflected.
GridAxis fit_axis(std::span<const double> reference, BinScale scale, int bins = 100);

// Log scale when the reference is one-signed and spans at least a decade.
BinScale auto_scale(std::span<const double> reference);

struct HistogramGrid {
  GridAxis axis;
  std::vector<double> edges;
  std::vector<double> counts;
  std::size_t out_of_range = 0;

  double in_range() const;
};

HistogramGrid bin_histogram(std::span<const double> values, const GridAxis& axis);
HistogramGrid bin_histogram(std::span<const double> values, BinScale scale, int n_bins, double lo,
                            double hi);

struct HistogramGrid2D {
  GridAxis x_axis;
  GridAxis y_axis;
  std::vector<double> counts;  // x-major: counts[ix * y_bins + iy]
  std::size_t out_of_range = 0;

  double at(int ix, int iy) const {
    return counts[static_cast<std::size_t>(ix * y_axis.bins + iy)];
  }
};

HistogramGrid2D bin_histogram2d(std::span<const double> xs, std::span<const double> ys,
                                const GridAxis& x_axis, const GridAxis& y_axis);

// Bin index of `value` on the axis, or -1 when out of range.
int bin_index(const GridAxis& axis, std::span<const double> edges, double value);

void write_histogram_csv(std::ostream& out, const HistogramGrid& h);

}  // namespace sqgan::data
