#include "sqgan/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "sqgan/errors.hpp"

namespace sqgan::data {

// ---- RawDataset / CSV ------------------------------------------------------

RawDataset::RawDataset(std::vector<std::string> columns, std::vector<double> values)
    : columns_(std::move(columns)), values_(std::move(values)) {
  if (columns_.empty()) throw DataError("dataset needs at least one column");
  if (values_.size() % columns_.size() != 0) {
    throw DataError("value count is not a multiple of the column count");
  }
}

std::vector<double> RawDataset::column(std::size_t c) const {
  if (c >= cols()) throw IndexError("column index out of range");
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

std::size_t RawDataset::column_index(const std::string& name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw DataError("no column named '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

void RawDataset::validate() const {
  if (rows() < 2) throw DataError("dataset needs at least 2 rows, has " + std::to_string(rows()));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DataError("non-finite value at row " + std::to_string(i / cols() + 1) + ", column '" +
                      columns_[i % cols()] + "'");
    }
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RawDataset read_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    header = split_commas(line);
    break;
  }
  if (header.empty()) throw DataError("CSV has no header row");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw DataError("CSV line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    for (const auto& f : fields) {
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size()) {
        throw DataError("CSV line " + std::to_string(line_no) + ": cannot parse '" + f + "'");
      }
      values.push_back(v);
    }
  }
  return RawDataset(std::move(header), std::move(values));
}

RawDataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const RawDataset& data) {
  const auto& names = data.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      out << (c ? "," : "") << format_double(data.at(r, c));
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const RawDataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, data);
}

// ---- Yeo-Johnson -------------------------------------------------------------

namespace {
constexpr double kLambdaZero = 1e-15;
}

double yeo_johnson(double x, double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
  if (x >= 0.0) {
    if (std::fabs(lambda) < kLambdaZero) return std::log1p(x);
    return std::expm1(lambda * std::log1p(x)) / lambda;
  }
  const double mu = 2.0 - lambda;
  if (std::fabs(mu) < kLambdaZero) return -std::log1p(-x);
  return -std::expm1(mu * std::log1p(-x)) / mu;
}

double inverse_yeo_johnson(double y, double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
  if (!std::isfinite(y)) throw DomainError("inverse Yeo-Johnson of a non-finite value");
  if (y >= 0.0) {
    if (std::fabs(lambda) < kLambdaZero) return std::expm1(y);
    if (lambda * y <= -1.0) {
      throw DomainError("value " + std::to_string(y) + " outside the image of Yeo-Johnson(lambda=" +
                        std::to_string(lambda) + ")");
    }
    return std::expm1(std::log1p(lambda * y) / lambda);
  }
  const double mu = 2.0 - lambda;
  if (std::fabs(mu) < kLambdaZero) return -std::expm1(-y);
  if (-mu * y <= -1.0) {
    throw DomainError("value " + std::to_string(y) + " outside the image of Yeo-Johnson(lambda=" +
                      std::to_string(lambda) + ")");
  }
  return -std::expm1(std::log1p(-mu * y) / mu);
}

const char* to_string(YjBranch b) {
  switch (b) {
    case YjBranch::NonNegative: return "nonnegative";
    case YjBranch::Negative: return "negative";
    case YjBranch::Mixed: break;
  }
  return "mixed";
}

YjBranch parse_yj_branch(const std::string& s) {
  if (s == "mixed") return YjBranch::Mixed;
  if (s == "nonnegative") return YjBranch::NonNegative;
  if (s == "negative") return YjBranch::Negative;
  throw ConfigError("unknown Yeo-Johnson branch '" + s + "'");
}

namespace {

double yj_core(double x, double lambda, YjBranch b);

// Spread relative to magnitude: how much of a value's precision carries
// information about its position in the column.
double conditioning(std::span<const double> column, double lambda, YjBranch b) {
  double mean = 0.0, big = 0.0;
  for (double x : column) {
    const double v = yj_core(x, lambda, b);
    mean += v;
    big = std::max(big, std::fabs(v));
  }
  mean /= static_cast<double>(column.size());
  double ss = 0.0;
  for (double x : column) ss += std::pow(yj_core(x, lambda, b) - mean, 2);
  return big > 0.0 ? std::sqrt(ss / static_cast<double>(column.size())) / big : 0.0;
}

// Drops the constant term only for one-signed columns, and only when that
// representation is the better conditioned one.
YjBranch branch_for(std::span<const double> column, double lambda) {
  const bool all_nonneg = std::all_of(column.begin(), column.end(), [](double x) { return x >= 0; });
  const bool all_neg = std::all_of(column.begin(), column.end(), [](double x) { return x < 0; });
  YjBranch b = YjBranch::Mixed;
  if (all_nonneg && std::fabs(lambda) >= kLambdaZero) b = YjBranch::NonNegative;
  if (all_neg && std::fabs(2.0 - lambda) >= kLambdaZero) b = YjBranch::Negative;
  if (b == YjBranch::Mixed) return b;
  return conditioning(column, lambda, b) > conditioning(column, lambda, YjBranch::Mixed) ? b
                                                                                         : YjBranch::Mixed;
}

// Constant added to the Yeo-Johnson value by yj_core.
double branch_offset(YjBranch b, double lambda) {
  switch (b) {
    case YjBranch::NonNegative: return 1.0 / lambda;
    case YjBranch::Negative: return -1.0 / (2.0 - lambda);
    case YjBranch::Mixed: break;
  }
  return 0.0;
}

// yeo_johnson(x) + branch_offset, without cancellation on the dominant branch.
double yj_core(double x, double lambda, YjBranch b) {
  if (b == YjBranch::NonNegative && x >= 0.0) return std::exp(lambda * std::log1p(x)) / lambda;
  if (b == YjBranch::Negative && x < 0.0) {
    const double mu = 2.0 - lambda;
    return -std::exp(mu * std::log1p(-x)) / mu;
  }
  return yeo_johnson(x, lambda) + branch_offset(b, lambda);
}

// Inverse Yeo-Johnson with y pulled just inside the image when needed.
double inverse_clamped(double y, double lambda, std::size_t& clamped) {
  if (y >= 0.0 && lambda < 0.0 && lambda * y <= -1.0) {
    ++clamped;
    y = (-1.0 / lambda) * (1.0 - 1e-12);
  } else if (y < 0.0 && lambda > 2.0 && (lambda - 2.0) * y <= -1.0) {
    ++clamped;
    y = (-1.0 / (lambda - 2.0)) * (1.0 - 1e-12);
  }
  return inverse_yeo_johnson(y, lambda);
}

double inverse_yj_core(double c, double lambda, YjBranch b, std::size_t& clamped) {
  constexpr double tiny = std::numeric_limits<double>::min();
  if (b == YjBranch::NonNegative) {
    if (lambda < 0.0 && c >= 0.0) {
      // Beyond the asymptote of x -> infinity.
      ++clamped;
      c = -tiny;
    }
    if (lambda * c > 0.0) {
      const double l = std::log(lambda * c) / lambda;
      if (l >= 0.0) return std::expm1(l);
    }
  } else if (b == YjBranch::Negative) {
    const double mu = 2.0 - lambda;
    if (mu < 0.0 && c <= 0.0) {
      ++clamped;
      c = tiny;
    }
    if (-mu * c > 0.0) {
      const double l = std::log(-mu * c) / mu;
      if (l > 0.0) return -std::expm1(l);
    }
  }
  return inverse_clamped(c - branch_offset(b, lambda), lambda, clamped);
}

// Variance of the transformed column, computed on yj_core values.
double transformed_variance(std::span<const double> column, double lambda) {
  const auto b = branch_for(column, lambda);
  std::vector<double> t(column.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = yj_core(column[i], lambda, b);
  const double n = static_cast<double>(t.size());
  const double mean = std::accumulate(t.begin(), t.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : t) ss += (v - mean) * (v - mean);
  return ss / n;
}

}  // namespace

double yeo_johnson_log_likelihood(std::span<const double> column, double lambda) {
  const double var = transformed_variance(column, lambda);
  if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
  double jacobian = 0.0;
  for (double x : column) jacobian += std::copysign(std::log1p(std::fabs(x)), x);
  const double n = static_cast<double>(column.size());
  return -0.5 * n * std::log(var) + (lambda - 1.0) * jacobian;
}

double fit_yeo_johnson_lambda(std::span<const double> column, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = yeo_johnson_log_likelihood(column, c);
  double fd = yeo_johnson_log_likelihood(column, d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = yeo_johnson_log_likelihood(column, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = yeo_johnson_log_likelihood(column, d);
    }
  }
  return 0.5 * (a + b);
}

// ---- TransformModel ----------------------------------------------------------

double ColumnTransform::forward(double x) const {
  const double z = (yj_core(x, yj_lambda, branch) - standardize_mean) / standardize_std;
  return 2.0 * (z - minmax_lo) / (minmax_hi - minmax_lo) - 1.0;
}

double ColumnTransform::inverse(double x, std::size_t& clamped) const {
  if (x < -1.0 || x > 1.0) {
    ++clamped;
    x = std::clamp(x, -1.0, 1.0);
  }
  const double z = (x + 1.0) * 0.5 * (minmax_hi - minmax_lo) + minmax_lo;
  return inverse_yj_core(z * standardize_std + standardize_mean, yj_lambda, branch, clamped);
}

std::vector<double> TransformModel::forward_row(std::span<const double> row) const {
  if (row.size() != dims()) throw DataError("row width does not match the transform model");
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) out[c] = transforms[c].forward(row[c]);
  return out;
}

void TransformModel::validate() const {
  if (columns.size() != transforms.size()) throw DataError("transform model column mismatch");
  for (const auto& t : transforms) {
    if (!(t.standardize_std > 0.0)) throw DataError("transform model has non-positive std");
    if (!(t.minmax_hi > t.minmax_lo)) throw DataError("transform model has an empty minmax range");
    if (!std::isfinite(t.yj_lambda)) throw DataError("transform model has a non-finite lambda");
  }
}

FitResult fit_transform(const RawDataset& data) {
  data.validate();
  FitResult result;
  result.model.columns = data.column_names();
  const std::size_t k = data.rows();
  for (std::size_t c = 0; c < data.cols(); ++c) {
    const auto col = data.column(c);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    if (*mn == *mx) {
      throw DegenerateDataError("column '" + data.column_names()[c] + "' is constant");
    }
    ColumnTransform t;
    t.yj_lambda = fit_yeo_johnson_lambda(col);
    t.branch = branch_for(col, t.yj_lambda);
    std::vector<double> y(k);
    for (std::size_t i = 0; i < k; ++i) y[i] = yj_core(col[i], t.yj_lambda, t.branch);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(k);
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(k));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw DegenerateDataError("column '" + data.column_names()[c] +
                                "' has zero spread after the power transform");
    }
    t.standardize_mean = mean;
    t.standardize_std = sd;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : y) {
      const double z = (v - mean) / sd;
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
    t.minmax_lo = lo;
    t.minmax_hi = hi;
    result.model.transforms.push_back(t);
  }
  result.transformed = apply_transform(result.model, data);
  return result;
}

std::vector<double> apply_transform(const TransformModel& model, const RawDataset& data) {
  if (data.cols() != model.dims()) throw DataError("dataset width does not match the model");
  std::vector<double> out(data.values().size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      out[r * data.cols() + c] = model.transforms[c].forward(data.at(r, c));
    }
  }
  return out;
}

InverseResult inverse_transform(const TransformModel& model,
                                std::span<const std::vector<double>> samples) {
  InverseResult result;
  std::vector<double> values;
  values.reserve(samples.size() * model.dims());
  for (const auto& s : samples) {
    if (s.size() != model.dims()) throw DataError("sample width does not match the model");
    for (std::size_t c = 0; c < s.size(); ++c) {
      values.push_back(model.transforms[c].inverse(s[c], result.clamped));
    }
  }
  result.data = RawDataset(model.columns, std::move(values));
  return result;
}

// ---- Synthetic oracle ----------------------------------------------------------

void SyntheticOracleSpec::validate() const {
  if (columns.empty()) throw ConfigError("oracle spec has no columns");
  for (const auto& col : columns) {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          bool ok = true;
          if constexpr (std::is_same_v<T, TruncatedPowerLaw>) {
            ok = f.min > 0 && std::isfinite(f.min) && f.exponent > 0 && std::isfinite(f.exponent);
          } else if constexpr (std::is_same_v<T, ShiftedNegativeHeavyTail>) {
            ok = f.scale > 0 && std::isfinite(f.scale) && f.exponent > 0 && std::isfinite(f.exponent);
          } else {
            ok = f.sigma > 0 && std::isfinite(f.mean) && std::isfinite(f.sigma) && f.lo < f.hi &&
                 std::isfinite(f.lo) && std::isfinite(f.hi);
            // Rejection sampling needs non-negligible mass inside the bounds.
            ok = ok && f.hi > f.mean - 6 * f.sigma && f.lo < f.mean + 6 * f.sigma;
          }
          if (!ok) throw ConfigError("invalid parameters for oracle column '" + col.name + "'");
        },
        col.family);
  }
}

SyntheticOracleSpec default_oracle_spec(std::uint64_t seed) {
  SyntheticOracleSpec spec;
  spec.seed = seed;
  // s in GeV^2 above the top-pair threshold (2 * 173 GeV)^2.
  spec.columns.push_back({"s", TruncatedPowerLaw{1.2e5, 4.0}});
  spec.columns.push_back({"t", ShiftedNegativeHeavyTail{1.0e4, 3.0}});
  spec.columns.push_back({"y", ClippedGaussian{0.0, 1.0, -2.5, 2.5}});
  return spec;
}

RawDataset synth_dataset(const SyntheticOracleSpec& spec, std::size_t k) {
  if (k < 1) throw ConfigError("sample count must be >= 1");
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  // (0, 1]: avoids the pole of the power laws.
  auto open_unit = [&] { return 1.0 - std::generate_canonical<double, 53>(rng); };
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::string> names;
  for (const auto& c : spec.columns) names.push_back(c.name);
  std::vector<double> values(k * names.size());
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      values[r * names.size() + c] = std::visit(
          [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, TruncatedPowerLaw>) {
              return f.min * std::pow(open_unit(), -1.0 / f.exponent);
            } else if constexpr (std::is_same_v<T, ShiftedNegativeHeavyTail>) {
              return -f.scale * std::pow(open_unit(), -1.0 / f.exponent);
            } else {
              for (;;) {
                const double v = f.mean + f.sigma * normal(rng);
                if (v >= f.lo && v <= f.hi) return v;
              }
            }
          },
          spec.columns[c].family);
    }
  }
  return RawDataset(std::move(names), std::move(values));
}

// ---- Histograms ------------------------------------------------------------------

const char* to_string(BinScale s) { return s == BinScale::Linear ? "linear" : "log"; }

BinScale parse_bin_scale(const std::string& s) {
  if (s == "linear") return BinScale::Linear;
  if (s == "log") return BinScale::Log;
  throw ConfigError("unknown bin scale '" + s + "'");
}

void GridAxis::validate() const {
  if (bins < 1) throw RangeError("histogram needs at least one bin");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw RangeError("histogram range requires lo < hi, got [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  }
  if (scale == BinScale::Log && !(lo > 0.0)) {
    throw RangeError("log-scale histogram requires lo > 0, got " + std::to_string(lo));
  }
}

std::vector<double> GridAxis::edges() const {
  validate();
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  const double n = static_cast<double>(bins);
  if (scale == BinScale::Linear) {
    for (int i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * (i / n);
  } else {
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i <= bins; ++i) e[i] = std::exp(a + (b - a) * (i / n));
  }
  e.front() = lo;
  e.back() = hi;
  return e;
}

GridAxis fit_axis(std::span<const double> reference, BinScale scale, int bins) {
  if (reference.empty()) throw RangeError("cannot fit a histogram axis to no data");
  const auto [mn, mx] = std::minmax_element(reference.begin(), reference.end());
  GridAxis axis;
  axis.scale = scale;
  axis.bins = bins;
  if (scale == BinScale::Log && *mx < 0.0) {
    axis.reflected = true;
    axis.lo = -*mx;
    axis.hi = -*mn;
  } else {
    axis.lo = *mn;
    axis.hi = *mx;
  }
  axis.validate();
  return axis;
}

BinScale auto_scale(std::span<const double> reference) {
  if (reference.empty()) return BinScale::Linear;
  const auto [mn, mx] = std::minmax_element(reference.begin(), reference.end());
  if (*mn > 0.0 && *mx >= 10.0 * *mn) return BinScale::Log;
  if (*mx < 0.0 && *mn <= 10.0 * *mx) return BinScale::Log;
  return BinScale::Linear;
}

int bin_index(const GridAxis& axis, std::span<const double> edges, double value) {
  const double v = axis.reflected ? -value : value;
  if (!(v >= axis.lo && v <= axis.hi)) return -1;
  const int n = axis.bins;
  if (v == axis.hi) return n - 1;
  double frac;
  if (axis.scale == BinScale::Linear) {
    frac = (v - axis.lo) / (axis.hi - axis.lo);
  } else {
    frac = std::log(v / axis.lo) / std::log(axis.hi / axis.lo);
  }
  int i = std::clamp(static_cast<int>(frac * n), 0, n - 1);
  while (i > 0 && v < edges[static_cast<std::size_t>(i)]) --i;
  while (i < n - 1 && v >= edges[static_cast<std::size_t>(i) + 1]) ++i;
  return i;
}

double HistogramGrid::in_range() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

HistogramGrid bin_histogram(std::span<const double> values, const GridAxis& axis) {
  HistogramGrid h;
  h.axis = axis;
  h.edges = axis.edges();
  h.counts.assign(static_cast<std::size_t>(axis.bins), 0.0);
  for (double v : values) {
    const int i = bin_index(axis, h.edges, v);
    if (i < 0) {
      ++h.out_of_range;
    } else {
      h.counts[static_cast<std::size_t>(i)] += 1.0;
    }
  }
  return h;
}

HistogramGrid bin_histogram(std::span<const double> values, BinScale scale, int n_bins, double lo,
                            double hi) {
  GridAxis axis{scale, lo, hi, n_bins, false};
  return bin_histogram(values, axis);
}

HistogramGrid2D bin_histogram2d(std::span<const double> xs, std::span<const double> ys,
                                const GridAxis& x_axis, const GridAxis& y_axis) {
  if (xs.size() != ys.size()) throw DataError("2D histogram inputs differ in length");
  HistogramGrid2D h;
  h.x_axis = x_axis;
  h.y_axis = y_axis;
  const auto xe = x_axis.edges();
  const auto ye = y_axis.edges();
  h.counts.assign(static_cast<std::size_t>(x_axis.bins * y_axis.bins), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int ix = bin_index(x_axis, xe, xs[i]);
    const int iy = bin_index(y_axis, ye, ys[i]);
    if (ix < 0 || iy < 0) {
      ++h.out_of_range;
    } else {
      h.counts[static_cast<std::size_t>(ix * y_axis.bins + iy)] += 1.0;
    }
  }
  return h;
}

void write_histogram_csv(std::ostream& out, const HistogramGrid& h) {
  out << "edge_lo,edge_hi,count\n";
  const double sign = h.axis.reflected ? -1.0 : 1.0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    double a = sign * h.edges[i];
    double b = sign * h.edges[i + 1];
    if (a > b) std::swap(a, b);
    out << format_double(a) << ',' << format_double(b) << ',' << format_double(h.counts[i]) << '\n';
  }
}

}  // namespace sqgan::data
