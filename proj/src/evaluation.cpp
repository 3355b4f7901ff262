#include "sqgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "sqgan/errors.hpp"

namespace sqgan::eval {

namespace {

void check_same_axis(const data::GridAxis& a, const data::GridAxis& b) {
  if (!(a == b)) throw GridError("histograms are defined on different grids");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double kl_divergence(const data::HistogramGrid& p, const data::HistogramGrid& q, double eps) {
  check_same_axis(p.axis, q.axis);
  if (p.counts.size() != q.counts.size() || p.edges != q.edges) {
    throw GridError("histograms have different bin edges");
  }
  const double sp = p.in_range();
  const double sq = q.in_range();
  if (!(sp > 0.0) || !(sq > 0.0)) throw GridError("KL divergence of an empty histogram");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.counts.size(); ++i) {
    if (p.counts[i] <= 0.0) continue;
    const double pi = p.counts[i] / sp;
    const double qi = std::max(q.counts[i] / sq, eps);
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

std::vector<VarianceVector> sample_variance(std::span<const std::vector<double>> samples,
                                            std::optional<std::int64_t> n_shots) {
  if (!n_shots) throw UnsupportedError("sample variance needs shot-based estimates");
  if (*n_shots < 1) throw ArgumentError("n_shots must be >= 1");
  const double n = static_cast<double>(*n_shots);
  std::vector<VarianceVector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    VarianceVector v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = std::max(0.0, 1.0 - s[i] * s[i]) / n;
    out.push_back(std::move(v));
  }
  return out;
}

ErrorBarScan kl_with_errorbars(std::span<const std::vector<double>> samples,
                               std::span<const VarianceVector> variances,
                               const data::TransformModel& model,
                               std::span<const data::HistogramGrid> reference) {
  const std::size_t dims = model.dims();
  if (samples.size() != variances.size()) throw DataError("sample/variance count mismatch");
  if (reference.size() != dims) throw DataError("need one reference histogram per dimension");
  if (samples.empty()) throw DataError("no samples to evaluate");

  ErrorBarScan scan;
  scan.kls.assign(dims, {});
  scan.dropped.assign(dims, 0);
  std::vector<std::vector<double>> perturbed(samples.size(), std::vector<double>(dims));
  for (int j = 0; j < kDeltaSteps; ++j) {
    const double delta = scan_delta(j);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      if (samples[s].size() != dims || variances[s].size() != dims) {
        throw DataError("sample width does not match the transform model");
      }
      for (std::size_t i = 0; i < dims; ++i) {
        const double v = samples[s][i] + delta * std::sqrt(variances[s][i]);
        perturbed[s][i] = std::clamp(v, -1.0, 1.0);
      }
    }
    const auto physical = data::inverse_transform(model, perturbed);
    if (j == kNominalStep) scan.clamped = physical.clamped;
    for (std::size_t i = 0; i < dims; ++i) {
      const auto col = physical.data.column(i);
      const auto h = data::bin_histogram(col, reference[i].axis);
      scan.kls[i][static_cast<std::size_t>(j)] = kl_divergence(h, reference[i]);
      if (j == kNominalStep) scan.dropped[i] = h.out_of_range;
    }
  }
  for (std::size_t i = 0; i < dims; ++i) {
    const auto& k = scan.kls[i];
    const double nominal = k[kNominalStep];
    const auto [mn, mx] = std::minmax_element(k.begin(), k.end());
    scan.results.push_back({model.columns[i], nominal, *mx - nominal, nominal - *mn});
  }
  return scan;
}

bool RatioMap::undefined(double v) { return std::isnan(v); }

RatioMap ratio_map(const data::HistogramGrid2D& reference, const data::HistogramGrid2D& generated) {
  check_same_axis(reference.x_axis, generated.x_axis);
  check_same_axis(reference.y_axis, generated.y_axis);
  if (reference.counts.size() != generated.counts.size()) throw GridError("2D grid size mismatch");
  double sr = 0.0, sg = 0.0;
  for (double c : reference.counts) sr += c;
  for (double c : generated.counts) sg += c;
  RatioMap m;
  m.rows = reference.x_axis.bins;
  m.cols = reference.y_axis.bins;
  m.values.assign(reference.counts.size(), std::numeric_limits<double>::quiet_NaN());
  if (!(sr > 0.0)) return m;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (reference.counts[i] <= 0.0) continue;
    const double g = sg > 0.0 ? generated.counts[i] / sg : 0.0;
    m.values[i] = g / (reference.counts[i] / sr);
  }
  return m;
}

void write_kl_csv(std::ostream& out, std::span<const KlResult> results) {
  out << "dimension,nominal,plus_err,minus_err\n";
  for (const auto& r : results) {
    out << r.dimension << ',' << fmt(r.nominal) << ',' << fmt(r.upper_delta) << ','
        << fmt(r.lower_delta) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, int rows, int cols, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw DataError("matrix shape does not match its values");
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out << (c ? "," : "") << fmt(values[static_cast<std::size_t>(r * cols + c)]);
    }
    out << '\n';
  }
}

}  // namespace sqgan::eval
