#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sqgan/datapipe.hpp"
#include "sqgan/errors.hpp"
#include "sqgan/evaluation.hpp"

using namespace sqgan;
using namespace sqgan::eval;

namespace {

data::HistogramGrid grid_of(std::vector<double> counts) {
  data::HistogramGrid h;
  h.axis = data::GridAxis{data::BinScale::Linear, 0.0, 1.0, static_cast<int>(counts.size()), false};
  h.edges = h.axis.edges();
  h.counts = std::move(counts);
  return h;
}

// Direct sum, written independently of the library.
double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double sp = 0, sq = 0, kl = 0;
  for (double v : p) sp += v;
  for (double v : q) sq += v;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0) continue;
    kl += p[i] / sp * std::log((p[i] / sp) / std::max(q[i] / sq, 1e-12));
  }
  return kl;
}

struct Fixture {
  data::TransformModel model;
  std::vector<std::vector<double>> samples;  // transformed space
  std::vector<data::HistogramGrid> reference;
};

Fixture make_fixture(std::size_t k) {
  const auto raw = data::synth_dataset(data::default_oracle_spec(7), k);
  auto fit = data::fit_transform(raw);
  Fixture f{fit.model, {}, {}};
  const std::size_t n = raw.cols();
  for (std::size_t r = 0; r < k; ++r) {
    f.samples.emplace_back(fit.transformed.begin() + static_cast<std::ptrdiff_t>(r * n),
                           fit.transformed.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
  // Reference from an independent draw so the nominal KL is not zero.
  const auto ref = data::synth_dataset(data::default_oracle_spec(8), k);
  for (std::size_t c = 0; c < n; ++c) {
    const auto col = ref.column(c);
    f.reference.push_back(data::bin_histogram(col, data::fit_axis(col, data::auto_scale(col))));
  }
  return f;
}

}  // namespace

TEST(Kl, IdenticalIsExactlyZero) {
  const auto p = grid_of({3, 0, 5, 2});
  EXPECT_EQ(kl_divergence(p, p), 0.0);
}

TEST(Kl, UnitValueAndAsymmetry) {
  const auto p = grid_of({0.5, 0.5}), q = grid_of({0.25, 0.75});
  const double expect_pq = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  const double expect_qp = 0.25 * std::log(0.5) + 0.75 * std::log(1.5);
  EXPECT_NEAR(kl_divergence(p, q), expect_pq, 1e-15);
  EXPECT_NEAR(kl_divergence(p, q), 0.1438, 1e-4);
  EXPECT_NEAR(kl_divergence(q, p), expect_qp, 1e-15);
  EXPECT_NEAR(kl_divergence(q, p), 0.1308, 1e-4);
}

TEST(Kl, CountsAreNormalized) {
  EXPECT_NEAR(kl_divergence(grid_of({50, 50}), grid_of({1, 3})), 0.1438, 1e-4);
}

TEST(Kl, EmptyReferenceBinIsFloored) {
  const auto p = grid_of({1, 1}), q = grid_of({1, 0});
  const double kl = kl_divergence(p, q);
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_NEAR(kl, kl_oracle({1, 1}, {1, 0}), 1e-12);
}

TEST(Kl, NonNegativeAndMatchesOracleOnRandomDistributions) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const std::size_t bins = 1 + t % 20;
    std::vector<double> p(bins), q(bins);
    for (std::size_t i = 0; i < bins; ++i) {
      p[i] = u(rng) < 0.2 ? 0.0 : u(rng);
      q[i] = u(rng) < 0.1 ? 0.0 : u(rng);
    }
    p[0] += 0.1;
    q[0] += 0.1;
    const double kl = kl_divergence(grid_of(p), grid_of(q));
    EXPECT_GE(kl, 0.0);
    EXPECT_NEAR(kl, kl_oracle(p, q), 1e-9 * std::max(1.0, kl));
  }
}

TEST(Kl, ZeroIffSameOnSupport) {
  // Proportional on every bin: zero up to rounding.
  EXPECT_NEAR(kl_divergence(grid_of({1, 2, 3}), grid_of({2, 4, 6})), 0.0, 1e-15);
  EXPECT_GT(kl_divergence(grid_of({1, 2, 3}), grid_of({1, 2, 4})), 0.0);
}

TEST(Kl, MismatchedGridsThrow) {
  auto a = grid_of({1, 1}), b = grid_of({1, 1, 1});
  EXPECT_THROW(kl_divergence(a, b), GridError);
  auto c = grid_of({1, 1});
  c.axis.scale = data::BinScale::Log;
  c.axis.lo = 0.1;
  c.edges = c.axis.edges();
  EXPECT_THROW(kl_divergence(a, c), GridError);
}

TEST(SampleVariance, BinomialValues) {
  const std::vector<std::vector<double>> xs{{1.0, -1.0, 0.0}, {0.5, 0.0, -0.25}};
  const auto v = sample_variance(xs, 512);
  EXPECT_EQ(v[0][0], 0.0);
  EXPECT_EQ(v[0][1], 0.0);
  EXPECT_EQ(v[0][2], 1.0 / 512);
  EXPECT_NEAR(v[0][2], 0.00195, 1e-5);
  EXPECT_EQ(v[1][0], 0.75 / 512);
  EXPECT_EQ(v[1][2], (1.0 - 0.0625) / 512);
  const auto v2 = sample_variance(xs, 1024);
  for (std::size_t s = 0; s < xs.size(); ++s)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(v2[s][i], v[s][i] / 2);
}

TEST(SampleVariance, ExactModeUnsupported) {
  const std::vector<std::vector<double>> xs{{0.0}};
  EXPECT_THROW(sample_variance(xs, std::nullopt), UnsupportedError);
  EXPECT_THROW(sample_variance(xs, 0), ArgumentError);
}

TEST(ErrorBars, DeltaGrid) {
  for (int j = 0; j < kDeltaSteps; ++j) EXPECT_NEAR(scan_delta(j), -1.0 + 0.2 * j, 1e-15);
  EXPECT_EQ(kDeltaSteps, 11);
  EXPECT_EQ(scan_delta(kNominalStep), 0.0);
  EXPECT_EQ(scan_delta(0), -1.0);
  EXPECT_NEAR(scan_delta(10), 1.0, 1e-15);
}

TEST(ErrorBars, ZeroVarianceGivesConstantScan) {
  const auto f = make_fixture(4000);
  const std::vector<VarianceVector> zero(f.samples.size(), VarianceVector(3, 0.0));
  const auto scan = kl_with_errorbars(f.samples, zero, f.model, f.reference);
  ASSERT_EQ(scan.results.size(), 3u);
  for (std::size_t d = 0; d < 3; ++d) {
    for (int j = 0; j < kDeltaSteps; ++j) EXPECT_EQ(scan.kls[d][j], scan.kls[d][kNominalStep]);
    EXPECT_EQ(scan.results[d].upper_delta, 0.0);
    EXPECT_EQ(scan.results[d].lower_delta, 0.0);
    EXPECT_GT(scan.results[d].nominal, 0.0);
  }
  EXPECT_EQ(scan.results[0].dimension, f.model.columns[0]);
}

TEST(ErrorBars, NominalStepReproducesUnperturbedKlBitExactly) {
  const auto f = make_fixture(4000);
  const auto var = sample_variance(f.samples, 512);
  const auto scan = kl_with_errorbars(f.samples, var, f.model, f.reference);
  const auto phys = data::inverse_transform(f.model, f.samples).data;
  for (std::size_t d = 0; d < 3; ++d) {
    const auto h = data::bin_histogram(phys.column(d), f.reference[d].axis);
    EXPECT_EQ(scan.kls[d][kNominalStep], kl_divergence(h, f.reference[d]));
    EXPECT_EQ(scan.results[d].nominal, scan.kls[d][kNominalStep]);
  }
}

TEST(ErrorBars, PerturbedSetMatchesManualConstruction) {
  const auto f = make_fixture(3000);
  const auto var = sample_variance(f.samples, 512);
  const auto scan = kl_with_errorbars(f.samples, var, f.model, f.reference);
  for (int j : {0, 3, 10}) {
    auto moved = f.samples;
    for (std::size_t s = 0; s < moved.size(); ++s)
      for (std::size_t i = 0; i < 3; ++i)
        moved[s][i] = std::clamp(moved[s][i] + scan_delta(j) * std::sqrt(var[s][i]), -1.0, 1.0);
    const auto phys = data::inverse_transform(f.model, moved).data;
    for (std::size_t d = 0; d < 3; ++d) {
      const auto h = data::bin_histogram(phys.column(d), f.reference[d].axis);
      EXPECT_NEAR(scan.kls[d][j], kl_divergence(h, f.reference[d]), 1e-12) << "j=" << j;
    }
  }
}

TEST(ErrorBars, IntervalBracketsNominal) {
  const auto f = make_fixture(4000);
  const auto var = sample_variance(f.samples, 64);
  const auto scan = kl_with_errorbars(f.samples, var, f.model, f.reference);
  for (std::size_t d = 0; d < 3; ++d) {
    const auto& r = scan.results[d];
    double lo = r.nominal, hi = r.nominal;
    for (double k : scan.kls[d]) {
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    EXPECT_GE(r.upper_delta, 0.0);
    EXPECT_GE(r.lower_delta, 0.0);
    EXPECT_GE(r.nominal - r.lower_delta, 0.0);
    EXPECT_DOUBLE_EQ(r.nominal + r.upper_delta, hi);
    EXPECT_DOUBLE_EQ(r.nominal - r.lower_delta, lo);
  }
}

TEST(ErrorBars, ShapeErrors) {
  const auto f = make_fixture(100);
  const auto var = sample_variance(f.samples, 512);
  std::vector<VarianceVector> short_var(var.begin(), var.end() - 1);
  EXPECT_THROW(kl_with_errorbars(f.samples, short_var, f.model, f.reference), DataError);
  std::vector<data::HistogramGrid> two(f.reference.begin(), f.reference.begin() + 2);
  EXPECT_THROW(kl_with_errorbars(f.samples, var, f.model, two), DataError);
}

TEST(RatioMap, IdentityAndScaleInvariance) {
  const data::GridAxis ax{data::BinScale::Linear, 0.0, 1.0, 4, false};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(500), ys(500);
  for (auto& v : xs) v = u(rng);
  for (auto& v : ys) v = u(rng) * u(rng);
  const auto ref = data::bin_histogram2d(xs, ys, ax, ax);
  const auto same = ratio_map(ref, ref);
  auto doubled = ref;
  for (auto& c : doubled.counts) c *= 2;
  const auto scaled = ratio_map(ref, doubled);
  EXPECT_EQ(same.rows, 4);
  EXPECT_EQ(same.cols, 4);
  for (std::size_t i = 0; i < same.values.size(); ++i) {
    if (ref.counts[i] == 0) {
      EXPECT_TRUE(RatioMap::undefined(same.values[i]));
      continue;
    }
    EXPECT_EQ(same.values[i], 1.0);
    EXPECT_NEAR(scaled.values[i], 1.0, 1e-15);
  }
}

TEST(RatioMap, EmptyReferenceCellIsUndefinedNotInfinite) {
  const data::GridAxis ax{data::BinScale::Linear, 0.0, 1.0, 2, false};
  const std::vector<double> rx{0.2, 0.2}, ry{0.2, 0.2}, gx{0.2, 0.8}, gy{0.2, 0.8};
  const auto m = ratio_map(data::bin_histogram2d(rx, ry, ax, ax), data::bin_histogram2d(gx, gy, ax, ax));
  EXPECT_EQ(m.at(0, 0), 0.5);
  EXPECT_TRUE(RatioMap::undefined(m.at(1, 1)));
  EXPECT_FALSE(std::isinf(m.at(1, 1)));
}

TEST(RatioMap, GridMismatchThrows) {
  const data::GridAxis a{data::BinScale::Linear, 0.0, 1.0, 2, false};
  const data::GridAxis b{data::BinScale::Linear, 0.0, 2.0, 2, false};
  const std::vector<double> v{0.5};
  EXPECT_THROW(ratio_map(data::bin_histogram2d(v, v, a, a), data::bin_histogram2d(v, v, b, a)), GridError);
}

TEST(Export, KlCsv) {
  std::ostringstream os;
  const std::vector<KlResult> rs{{"s", 0.25, 0.1, 0.07}};
  write_kl_csv(os, rs);
  EXPECT_EQ(os.str(), "dimension,nominal,plus_err,minus_err\ns,0.25,0.10000000000000001,0.070000000000000007\n");
}
