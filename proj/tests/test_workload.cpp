#include <cmath>
#include <random>
#include <sstream>
#include <unordered_set>
#include <vector>

#include <gtest/gtest.h>

#include "support/prop.hpp"
#include "ustash/workload.hpp"

using namespace ustash;

namespace {

// Direct summation in long double, largest term first; independent of the
// library's smallest-first double loop.
long double oracle_harmonic(double s, std::uint64_t m) {
  long double sum = 0.0L;
  for (std::uint64_t k = 1; k <= m; ++k) sum += std::pow(static_cast<long double>(k), -s);
  return sum;
}

long double oracle_expected_unique(double s, std::uint64_t m, double n) {
  const long double j = oracle_harmonic(s, m);
  long double sum = 0.0L;
  for (std::uint64_t k = 1; k <= m; ++k) {
    const long double p = std::pow(static_cast<long double>(k), -s) / j;
    sum += 1.0L - std::pow(1.0L - p, static_cast<long double>(n));
  }
  return sum;
}

// Composite Simpson rule on [a, b].
template <class F>
double simpson(F f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

WorkloadConfig small_config(std::uint64_t seed = 7) {
  auto cfg = WorkloadConfig::defaults();
  cfg.nonvideo.zipf.m = 20'000;
  cfg.video.zipf.m = 5'000;
  cfg.n_requests = 20'000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(ZipfPmf, HandValues) {
  EXPECT_DOUBLE_EQ(zipf_pmf(1, {0.0, 4}), 0.25);
  EXPECT_NEAR(zipf_pmf(1, {1.0, 2}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(zipf_pmf(2, {1.0, 2}), 1.0 / 3.0, 1e-15);
}

TEST(ZipfPmf, SumsToOneAtReferenceExponent) {
  const ZipfParams p{0.716, 1000};
  double sum = 0.0;
  for (std::uint64_t k = 1; k <= p.m; ++k) sum += zipf_pmf(k, p);
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(ZipfPmf, RejectsBadArguments) {
  EXPECT_THROW(zipf_pmf(0, {1.0, 10}), std::domain_error);
  EXPECT_THROW(zipf_pmf(11, {1.0, 10}), std::domain_error);
  EXPECT_THROW(zipf_pmf(1, {-0.1, 10}), std::domain_error);
  EXPECT_THROW(zipf_pmf(1, {1.0, 0}), std::domain_error);
}

TEST(ZipfPmf, HarmonicMatchesOracle) {
  for (double s : {0.0, 0.5, 0.716, 1.0, 1.005, 2.0}) {
    for (std::uint64_t m : {1ULL, 2ULL, 17ULL, 1000ULL, 100000ULL}) {
      const auto o = oracle_harmonic(s, m);
      EXPECT_NEAR(harmonic_number({s, m}), static_cast<double>(o), 1e-12 * static_cast<double>(o))
          << "s=" << s << " m=" << m;
    }
  }
}

TEST(ZipfPmfProperty, NormalizedAndNonIncreasing) {
  prop::for_all(11, prop::kCases, [](prop::Gen& g) {
    const ZipfParams p{g.uniform(0.0, 3.0), g.integer(1, 3000)};
    const ZipfSampler table(p);
    double sum = 0.0;
    double prev = 1.0;
    for (std::uint64_t k = 1; k <= p.m; ++k) {
      const double q = table.pmf(k);
      ASSERT_LE(q, prev + 1e-15);
      prev = q;
      sum += q;
    }
    ASSERT_NEAR(sum, 1.0, 1e-9);
    const auto k = g.integer(1, p.m);
    ASSERT_NEAR(table.pmf(k), zipf_pmf(k, p), 1e-12);
  });
}

TEST(ExpectedUnique, HandValues) {
  for (double s : {0.0, 0.716, 2.0}) {
    for (std::uint64_t m : {1ULL, 5ULL, 1000ULL}) EXPECT_NEAR(expected_unique({s, m}, 1.0), 1.0, 1e-12);
  }
  EXPECT_NEAR(expected_unique({0.0, 2}, 2.0), 1.5, 1e-15);
  EXPECT_DOUBLE_EQ(expected_unique({1.0, 10}, 0.0), 0.0);
}

TEST(ExpectedUnique, MatchesLongDoubleOracle) {
  for (double s : {0.0, 0.716, 1.005, 2.0}) {
    for (double n : {1.0, 10.0, 1e3, 1e5}) {
      const auto o = static_cast<double>(oracle_expected_unique(s, 5000, n));
      EXPECT_NEAR(expected_unique({s, 5000}, n), o, 1e-9 * o) << "s=" << s << " n=" << n;
    }
  }
}

// Independent sampler (std::discrete_distribution over the raw weights) and
// a mean unique count over 500 seeded trials.
TEST(ExpectedUnique, MatchesMonteCarlo) {
  const ZipfParams p{0.716, 100'000};
  const int n = 10'000;
  const int trials = 500;
  std::vector<double> w(p.m);
  for (std::uint64_t k = 1; k <= p.m; ++k) w[k - 1] = std::pow(static_cast<double>(k), -p.s);
  std::discrete_distribution<std::uint64_t> dist(w.begin(), w.end());
  std::mt19937_64 rng(12345);
  std::vector<int> stamp(p.m, -1);
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    int unique = 0;
    for (int i = 0; i < n; ++i) {
      const auto k = dist(rng);
      if (stamp[k] != t) {
        stamp[k] = t;
        ++unique;
      }
    }
    total += unique;
  }
  const double mc = total / trials;
  EXPECT_NEAR(expected_unique(p, n), mc, 0.01 * mc);
}

TEST(ExpectedUniqueProperty, BoundsAndMonotoneInN) {
  prop::for_all(12, prop::kCases, [](prop::Gen& g) {
    const ZipfParams p{g.uniform(0.0, 2.5), g.integer(1, 2000)};
    const double n1 = std::floor(g.log_uniform(1.0, 1e5));
    const double n2 = n1 + std::floor(g.log_uniform(1.0, 1e4));
    const double e1 = expected_unique(p, n1);
    const double e2 = expected_unique(p, n2);
    const double m = static_cast<double>(p.m);
    ASSERT_GE(e1, 1.0 - 1e-9);
    ASSERT_LE(e1, std::min(n1, m) + 1e-9);
    ASSERT_GE(e2, e1 - 1e-9);
    if (e1 < m - 1e-6) {
      ASSERT_GT(e2, e1);
    }
  });
}

TEST(ExpectedUnique, NonIncreasingInSkew) {
  for (std::uint64_t m : {10ULL, 1000ULL, 100000ULL}) {
    for (double n : {2.0, 100.0, 1e4, 1e6}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double s : {0.0, 0.5, 0.716, 1.005, 2.0}) {
        const double e = expected_unique({s, m}, n);
        EXPECT_LE(e, prev + 1e-9) << "m=" << m << " n=" << n << " s=" << s;
        prev = e;
      }
    }
  }
}

TEST(ExpectedUnique, CurveMatchesDirectEvaluation) {
  const ZipfParams p{0.716, 50'000};
  const ExpectedUniqueCurve curve(p);
  for (double n : {0.0, 1.0, 7.0, 1234.0, 1e5, 1e7}) {
    EXPECT_NEAR(curve(n), expected_unique(p, n), 1e-9 * std::max(1.0, curve(n)));
  }
  const ExpectedUniqueCurve single({1.0, 1});
  EXPECT_DOUBLE_EQ(single(5.0), 1.0);
}

TEST(SampleRank, SingleItemCatalog) {
  const ZipfSampler s({0.716, 1});
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_rank(s, rng), 1u);
}

TEST(SampleRank, UniformFrequencies) {
  const ZipfSampler s({0.0, 10});
  std::mt19937_64 rng(2);
  std::vector<int> hist(11, 0);
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) ++hist[sample_rank(s, rng)];
  for (int k = 1; k <= 10; ++k) EXPECT_NEAR(hist[k] / double(draws), 0.1, 0.002) << k;
}

TEST(SampleRank, TwoItemFrequencies) {
  const ZipfSampler s({1.0, 2});
  std::mt19937_64 rng(3);
  int ones = 0;
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) ones += sample_rank(s, rng) == 1;
  EXPECT_NEAR(ones / double(draws), 2.0 / 3.0, 0.005);
}

TEST(SampleRankProperty, InRange) {
  prop::for_all(13, prop::kCases, [](prop::Gen& g) {
    const ZipfSampler s({g.uniform(0.0, 3.0), g.integer(1, 500)});
    for (int i = 0; i < 20; ++i) {
      const auto k = s(g.rng);
      ASSERT_GE(k, 1u);
      ASSERT_LE(k, s.params().m);
    }
  });
}

TEST(SampleSize, VideoGammaMean) {
  const SizeParams sp{0.64, 194.061, std::nullopt};
  std::mt19937_64 rng(4);
  double sum = 0.0;
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) sum += sample_size(sp, rng);
  EXPECT_NEAR(sum / draws, 0.64 * 194.061, 0.01 * 0.64 * 194.061);
}

TEST(SampleSize, ShapeOneIsExponential) {
  const SizeParams sp{1.0, 2.0, std::nullopt};
  std::mt19937_64 rng(5);
  double sum = 0.0;
  double above = 0.0;
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) {
    const double x = sample_size(sp, rng);
    sum += x;
    above += x > 2.0;
  }
  EXPECT_NEAR(sum / draws, 2.0, 0.02);
  EXPECT_NEAR(above / draws, std::exp(-1.0), 0.003);
}

// Shape 0.0006 has a coefficient of variation near 41, so the sample-mean
// tolerance comes from the CLT: 4 standard errors over 10^7 draws.
TEST(SampleSize, NonVideoGammaMoment) {
  const SizeParams sp{0.0006, 2.102, std::nullopt};
  std::mt19937_64 rng(6);
  const int draws = 10'000'000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = sample_size(sp, rng);
    ASSERT_GE(x, kMinSizeMb);
    sum += x;
  }
  const double mean = sp.shape * sp.scale_mb;
  const double se = sp.scale_mb * std::sqrt(sp.shape / draws);
  EXPECT_NEAR(sum / draws, mean, 4.0 * se + kMinSizeMb);
}

TEST(SampleSize, FixedOverride) {
  SizeParams sp{0.5, 1.0, 3.25};
  std::mt19937_64 rng(1);
  EXPECT_DOUBLE_EQ(sample_size(sp, rng), 3.25);
  EXPECT_DOUBLE_EQ(sp.mean_mb(), 3.25);
}

TEST(SampleViewRatio, NonVideoIsWhole) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(sample_view_ratio({2.77}, ContentClass::NonVideo, rng), 1.0);
  }
}

TEST(SampleViewRatio, ClampedExponentialMean) {
  const double lambda = 2.77;
  // E[min(X,1)] = integral over [0,1] of P(X > t).
  const double oracle = simpson([&](double t) { return std::exp(-lambda * t); }, 0.0, 1.0, 1000);
  std::mt19937_64 rng(9);
  const int draws = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < draws; ++i) sum += sample_view_ratio({lambda}, ContentClass::Video, rng);
  EXPECT_NEAR(sum / draws, oracle, 0.01 * oracle);
}

TEST(SampleViewRatioProperty, Support) {
  prop::for_all(14, prop::kCases, [](prop::Gen& g) {
    const ViewParams vp{g.log_uniform(0.01, 50.0)};
    for (int i = 0; i < 20; ++i) {
      const double v = sample_view_ratio(vp, ContentClass::Video, g.rng);
      ASSERT_GE(v, kMinViewRatio);
      ASSERT_LE(v, 1.0);
    }
  });
}

TEST(SampleViewRatio, SmallRateSaturatesAtOne) {
  std::mt19937_64 rng(10);
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += sample_view_ratio({1e-3}, ContentClass::Video, rng) == 1.0;
  EXPECT_GT(ones, 9900);
}

TEST(ContentIdTest, RoundTrip) {
  const ContentId a(ContentClass::Video, 42);
  EXPECT_EQ(a.to_string(), "v:42");
  EXPECT_EQ(ContentId::parse("v:42"), a);
  EXPECT_EQ(ContentId::parse("nv:7"), ContentId(ContentClass::NonVideo, 7));
  EXPECT_THROW(ContentId::parse("x:1"), std::exception);
  EXPECT_THROW(ContentId::parse("nv:0"), std::exception);
  EXPECT_THROW(ContentId::parse("nv7"), std::exception);
}

TEST(Catalog, RanksDenseAndSizesPositive) {
  const auto cfg = small_config();
  const auto cat = ContentCatalog::build(cfg);
  EXPECT_EQ(cat.count(ContentClass::NonVideo), cfg.nonvideo.zipf.m);
  EXPECT_EQ(cat.count(ContentClass::Video), cfg.video.zipf.m);
  for (auto c : kContentClasses) {
    for (std::uint32_t k = 1; k <= cat.count(c); ++k) ASSERT_GT(cat.size_mb(ContentId(c, k)), 0.0);
  }
  EXPECT_FALSE(cat.contains(ContentId(ContentClass::Video, 5001)));
  EXPECT_THROW(cat.size_mb(ContentId(ContentClass::Video, 5001)), std::out_of_range);
}

TEST(Catalog, IndependentOfMixingRatio) {
  auto a = small_config();
  auto b = a;
  b.r_v = 3.0;
  const auto ca = ContentCatalog::build(a);
  const auto cb = ContentCatalog::build(b);
  for (std::uint32_t k = 1; k <= 100; ++k) {
    ASSERT_EQ(ca.size_mb(ContentId(ContentClass::Video, k)), cb.size_mb(ContentId(ContentClass::Video, k)));
  }
}

TEST(GenerateTrace, VideoShareAtReferenceMix) {
  auto cfg = small_config(21);
  cfg.r_v = 80.0;
  cfg.n_requests = 81'000;
  const auto t = generate_trace(cfg);
  const double mean = 81'000.0 / 81.0;
  const double sigma = std::sqrt(81'000.0 * (1.0 / 81.0) * (80.0 / 81.0));
  EXPECT_NEAR(static_cast<double>(t.count(ContentClass::Video)), mean, 3.0 * sigma);
}

TEST(GenerateTrace, NearInfiniteMixHasNoVideo) {
  auto cfg = small_config(22);
  cfg.r_v = 1e9;
  cfg.n_requests = 100;
  EXPECT_EQ(generate_trace(cfg).count(ContentClass::Video), 0u);
}

TEST(GenerateTrace, TraceInvariants) {
  const auto cfg = small_config(23);
  const auto t = generate_trace(cfg);
  ASSERT_EQ(t.size(), cfg.n_requests);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& r = t.requests[i];
    ASSERT_EQ(r.index, i);
    ASSERT_TRUE(t.catalog->contains(r.content_id));
    ASSERT_GT(r.view_ratio, 0.0);
    ASSERT_LE(r.view_ratio, 1.0);
    if (r.content_id.content_class() == ContentClass::NonVideo) {
      ASSERT_EQ(r.view_ratio, 1.0);
    }
  }
}

TEST(GenerateTrace, DeterministicBytes) {
  const auto cfg = small_config(24);
  std::ostringstream a, b;
  write_trace_csv(a, generate_trace(cfg));
  write_trace_csv(b, generate_trace(cfg));
  EXPECT_EQ(a.str(), b.str());
  auto other = cfg;
  other.seed = 25;
  std::ostringstream c;
  write_trace_csv(c, generate_trace(other));
  EXPECT_NE(a.str(), c.str());
}

// Per class, the unique count given the class's request count n_c has mean
// E(Y)(n_c) and variance at most sum q(1-q) (occupancy indicators are
// negatively correlated).
TEST(GenerateTrace, UniqueCountMatchesAnalytic) {
  for (std::uint64_t seed : {31ULL, 32ULL, 33ULL}) {
    auto cfg = small_config(seed);
    cfg.r_v = 3.0;
    cfg.n_requests = 50'000;
    const auto t = generate_trace(cfg);
    for (auto c : kContentClasses) {
      std::unordered_set<ContentId, ContentIdHash> ids;
      for (const auto& r : t.requests) {
        if (r.content_id.content_class() == c) ids.insert(r.content_id);
      }
      const auto& z = cfg.of(c).zipf;
      const double n = static_cast<double>(t.count(c));
      const double j = harmonic_number(z);
      double var = 0.0;
      for (std::uint64_t k = 1; k <= z.m; ++k) {
        const double q = requested_at_least_once(std::pow(double(k), -z.s) / j, n);
        var += q * (1.0 - q);
      }
      EXPECT_NEAR(static_cast<double>(ids.size()), expected_unique(z, n), 4.0 * std::sqrt(var))
          << "seed " << seed << " class " << to_string(c);
    }
  }
}

TEST(TraceCsv, RoundTrip) {
  const auto cfg = small_config(41);
  const auto t = generate_trace(cfg);
  std::stringstream ss;
  write_trace_csv(ss, t);
  const auto back = read_trace_csv(ss);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    ASSERT_EQ(back.requests[i].content_id, t.requests[i].content_id);
    ASSERT_EQ(back.requests[i].view_ratio, t.requests[i].view_ratio);
    ASSERT_EQ(back.catalog->size_mb(t.requests[i].content_id), t.catalog->size_mb(t.requests[i].content_id));
  }
  std::stringstream again;
  write_trace_csv(again, back);
  std::stringstream first;
  write_trace_csv(first, t);
  EXPECT_EQ(again.str(), first.str());
}

TEST(TraceCsv, RejectsMalformedInput) {
  std::istringstream bad_header("idx,content\n");
  EXPECT_THROW(read_trace_csv(bad_header), io::IoError);
  std::istringstream bad_ratio(std::string(kTraceCsvHeader) + "\n0,v:1,video,1,2.5,1.5\n");
  EXPECT_THROW(read_trace_csv(bad_ratio), io::IoError);
  std::istringstream mismatch(std::string(kTraceCsvHeader) + "\n0,v:1,nonvideo,1,2.5,0.5\n");
  EXPECT_THROW(read_trace_csv(mismatch), io::IoError);
  std::istringstream bad_size(std::string(kTraceCsvHeader) + "\n0,v:1,video,1,0,0.5\n");
  EXPECT_THROW(read_trace_csv(bad_size), io::IoError);
}

TEST(WorkloadConfigTest, Validation) {
  auto cfg = WorkloadConfig::defaults();
  EXPECT_NO_THROW(cfg.validate());
  cfg.r_v = 0.0;
  EXPECT_THROW(cfg.validate(), std::domain_error);
  cfg = WorkloadConfig::defaults();
  cfg.n_requests = 0;
  EXPECT_THROW(cfg.validate(), std::domain_error);
  cfg = WorkloadConfig::defaults();
  cfg.video.view.lambda_e = 0.0;
  EXPECT_THROW(cfg.validate(), std::domain_error);
}
