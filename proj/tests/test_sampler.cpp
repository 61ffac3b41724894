#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstring>
#include <map>

#include "gibbslab/sampler.hpp"

using namespace gibbs;

namespace {

// Symmetric random table with zero diagonal from a fixed stream.
std::vector<std::vector<double>> random_table(std::size_t m, std::uint64_t seed) {
  Rng rng = make_stream(seed, "table");
  std::vector<std::vector<double>> t(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) t[a][b] = t[b][a] = 2.0 * uniform01(rng);
  return t;
}

std::size_t atom(const Point& p) { return static_cast<std::size_t>(p.c[0]); }

struct Moments {
  std::vector<double> mean, err;
};

// Mean occupation of each atom and fraction of ordered pairs on each (a, b)
// with a <= b, from thinned samples, with batch-means standard errors.
Moments sample_moments(const ChainReport& r, std::size_t m) {
  const std::size_t stats = m + m * (m + 1) / 2;
  std::vector<std::vector<double>> series(stats);
  for (const auto& cfg : r.samples) {
    std::vector<double> c(m, 0.0);
    for (const auto& p : cfg) c[atom(p)] += 1.0;
    const double n = static_cast<double>(cfg.size());
    std::size_t k = 0;
    for (std::size_t a = 0; a < m; ++a) series[k++].push_back(c[a] / n);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b)
        series[k++].push_back((a == b ? c[a] * (c[a] - 1) : 2.0 * c[a] * c[b]) / (n * (n - 1)));
  }
  Moments out;
  const std::size_t batches = 40;
  for (const auto& s : series) {
    const std::size_t len = s.size() / batches;
    double mean = 0.0;
    std::vector<double> bm(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t i = 0; i < len; ++i) bm[b] += s[b * len + i];
      bm[b] /= static_cast<double>(len);
      mean += bm[b] / batches;
    }
    double var = 0.0;
    for (double v : bm) var += (v - mean) * (v - mean);
    var /= static_cast<double>(batches - 1);
    out.mean.push_back(mean);
    out.err.push_back(std::sqrt(var / batches));
  }
  return out;
}

std::vector<double> exact_moments(const ExactDistribution& d, std::size_t m, int n) {
  std::vector<double> out(m + m * (m + 1) / 2, 0.0);
  for (const auto& tc : d.classes) {
    std::size_t k = 0;
    for (std::size_t a = 0; a < m; ++a) out[k++] += tc.probability * tc.counts[a] / double(n);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) {
        const double ca = tc.counts[a], cb = tc.counts[b];
        out[k++] += tc.probability * (a == b ? ca * (ca - 1) : 2.0 * ca * cb) / (n * (n - 1.0));
      }
  }
  return out;
}

// Returns finite values for the first `budget` evaluations, then +inf.
class ExhaustingKernel final : public PairKernel {
 public:
  explicit ExhaustingKernel(int budget) : left_(budget) {}
  std::string name() const override { return "exhausting"; }
  double pair(const Point&, const Point&) const override { return left_-- > 0 ? 0.0 : kInf; }
  double known_lower_bound(const Space&) const override { return 0.0; }

 private:
  mutable std::atomic<int> left_;
};

// A kernel whose value drifts between calls, so cached energies go stale.
class DriftingKernel final : public PairKernel {
 public:
  std::string name() const override { return "drifting"; }
  double pair(const Point&, const Point&) const override { return 1e-3 * calls_++; }
  double known_lower_bound(const Space&) const override { return 0.0; }

 private:
  mutable std::atomic<long> calls_{0};
};

}  // namespace

TEST_CASE("exact enumeration") {
  SUBCASE("zero kernel gives Z = 1") {
    auto s = Space::finite({0.2, 0.3, 0.5});
    EnergyModel e(s, std::make_shared<ConstantPairKernel>(0.0), BetaSchedule::constant(1.0));
    auto d = exact_enumerate(e, 5);
    CHECK(d.z == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.classes.size() == 21);
  }
  SUBCASE("two atoms, two particles") {
    auto s = Space::finite({0.5, 0.5});
    // G = 4 off the diagonal makes W_2 = G / 4 the indicator of x1 != x2.
    EnergyModel e(s, std::make_shared<TableKernel>(std::vector<std::vector<double>>{{0, 4}, {4, 0}}),
                  BetaSchedule::constant(1.0));
    auto d = exact_enumerate(e, 2);
    CHECK(d.z == doctest::Approx(0.5 + 0.5 * std::exp(-2.0)).epsilon(1e-14));
  }
  SUBCASE("probabilities sum to one") {
    auto s = Space::finite({0.1, 0.2, 0.3, 0.4});
    EnergyModel e(s, std::make_shared<TableKernel>(random_table(4, 3)), BetaSchedule::linear(1.0));
    auto d = exact_enumerate(e, 9);
    double total = 0.0;
    for (const auto& c : d.classes) total += c.probability;
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }
  SUBCASE("cap") {
    auto s = Space::finite({0.1, 0.2, 0.3, 0.4});
    EnergyModel e(s, std::make_shared<ConstantPairKernel>(0.0), BetaSchedule::constant(1.0));
    CHECK_THROWS_AS(exact_enumerate(e, 14), Error);
  }
}

TEST_CASE("zero kernel samples the reference measure") {
  auto s = Space::finite({0.1, 0.2, 0.3, 0.4});
  EnergyModel e(s, std::make_shared<ConstantPairKernel>(0.0), BetaSchedule::constant(1.0));
  SamplerOptions opt;
  opt.steps = 100000;
  opt.seed = 11;
  auto r = mcmc_run(e, 3, opt);
  std::vector<double> counts(4, 0.0);
  double total = 0.0;
  for (const auto& cfg : r.samples)
    for (const auto& p : cfg) {
      counts[atom(p)] += 1.0;
      total += 1.0;
    }
  double chi2 = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    const double expected = total * s->weight(a);
    chi2 += (counts[a] - expected) * (counts[a] - expected) / expected;
  }
  // 99th percentile of chi-square with 3 degrees of freedom.
  CHECK(chi2 < 11.345);
  CHECK(r.acceptance_rate == doctest::Approx(1.0));
}

TEST_CASE("finite chain matches exact enumeration") {
  auto s = Space::finite({0.1, 0.2, 0.3, 0.4});
  EnergyModel e(s, std::make_shared<TableKernel>(random_table(4, 5)), BetaSchedule::constant(1.0));
  const int n = 6;
  auto exact = exact_moments(exact_enumerate(e, n), 4, n);
  SamplerOptions opt;
  opt.steps = 200000;
  opt.thin = 6;
  opt.seed = 21;
  auto r = mcmc_run(e, n, opt);
  auto mc = sample_moments(r, 4);
  for (std::size_t k = 0; k < exact.size(); ++k) {
    INFO("statistic " << k);
    CHECK(std::fabs(mc.mean[k] - exact[k]) <= 3.0 * mc.err[k]);
  }
  CHECK(r.acceptance_rate >= 0.0);
  CHECK(r.acceptance_rate <= 1.0);
  CHECK(r.effective_sample_size > 0.0);
  CHECK(r.cache_checks == 200);
}

TEST_CASE("tempered chain keeps the target") {
  auto s = Space::finite({0.25, 0.25, 0.25, 0.25});
  EnergyModel e(s, std::make_shared<TableKernel>(random_table(4, 8)), BetaSchedule::linear(1.0));
  const int n = 5;
  auto exact = exact_moments(exact_enumerate(e, n), 4, n);
  SamplerOptions opt;
  opt.steps = 100000;
  opt.thin = 5;
  opt.seed = 4;
  opt.ladder = geometric_ladder(3, 0.5);
  auto r = mcmc_run(e, n, opt);
  REQUIRE(r.swap_acceptance.size() == 2);
  for (double a : r.swap_acceptance) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
  auto mc = sample_moments(r, 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::fabs(mc.mean[k] - exact[k]) <= 3.0 * mc.err[k]);
  // A very cold-to-hot jump rarely swaps and is flagged.
  opt.ladder = {1.0, 1e-3};
  opt.steps = 20000;
  auto cold = mcmc_run(EnergyModel(s, std::make_shared<TableKernel>(random_table(4, 8)),
                                   BetaSchedule::constant(20.0)),
                       n, opt);
  CHECK(cold.swap_acceptance.size() == 1);
  if (cold.swap_acceptance[0] < 0.1 || cold.swap_acceptance[0] > 0.9) CHECK(cold.warnings.size() == 1);
}

TEST_CASE("detailed balance on three atoms") {
  auto s = Space::finite({0.2, 0.3, 0.5});
  EnergyModel e(s, std::make_shared<TableKernel>(random_table(3, 9)), BetaSchedule::constant(1.5));
  Chain chain(e, 2, 1.0, 1.0, make_stream(3, "balance"));
  auto state = [&] { return 3 * atom(chain.config()[0]) + atom(chain.config()[1]); };
  std::map<std::pair<std::size_t, std::size_t>, double> flow;
  std::size_t prev = state();
  for (int i = 0; i < 300000; ++i) {
    chain.step();
    const std::size_t cur = state();
    if (cur != prev) flow[{prev, cur}] += 1.0;
    prev = cur;
  }
  for (const auto& [edge, count] : flow) {
    const double back = flow[{edge.second, edge.first}];
    CHECK(std::fabs(count - back) <= 4.0 * std::sqrt(count + back));
  }
}

TEST_CASE("seed determinism") {
  auto s = Space::manifold(SpaceKind::Circle, 64, 4);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  SamplerOptions opt;
  opt.steps = 20000;
  opt.seed = 99;
  opt.ladder = geometric_ladder(3, 0.3);
  auto a = mcmc_run(e, 8, opt);
  auto b = mcmc_run(e, 8, opt);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(std::memcmp(a.energies.data(), b.energies.data(), a.energies.size() * sizeof(double)) == 0);
  bool same = true;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    for (std::size_t j = 0; j < a.samples[i].size(); ++j)
      same = same && std::memcmp(&a.samples[i][j], &b.samples[i][j], sizeof(Point)) == 0;
  CHECK(same);
  opt.seed = 100;
  auto c = mcmc_run(e, 8, opt);
  CHECK(c.energies != a.energies);
}

TEST_CASE("circle log-gas spreads out") {
  auto s = Space::manifold(SpaceKind::Circle, 256, 8);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  SamplerOptions opt;
  opt.steps = 200000;
  opt.seed = 5;
  auto r = mcmc_run(e, 32, opt);
  std::vector<Point> pooled;
  for (const auto& cfg : r.samples) pooled.insert(pooled.end(), cfg.begin(), cfg.end());
  auto mean = EmpiricalMeasure::from_points(s, pooled);
  CHECK(bounded_lipschitz_distance(mean, GridMeasure::uniform(s)) < 0.05);
  CHECK(r.acceptance_rate > 0.2);
  CHECK(r.acceptance_rate < 0.6);
}

TEST_CASE("sampler failure modes") {
  auto box = Space::box(0.0, 1.0, 1, 16);
  SUBCASE("trapped") {
    EnergyModel e(box, std::make_shared<ExhaustingKernel>(1), BetaSchedule::constant(1.0));
    SamplerOptions opt;
    opt.steps = 200000;
    CHECK_THROWS_AS(mcmc_run(e, 2, opt), Error);
  }
  SUBCASE("stale cache") {
    EnergyModel e(box, std::make_shared<DriftingKernel>(), BetaSchedule::constant(1.0));
    SamplerOptions opt;
    opt.steps = 5000;
    try {
      mcmc_run(e, 3, opt);
      FAIL("expected a cache error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::CacheIncoherent);
    }
  }
  SUBCASE("bad options") {
    EnergyModel e(box, std::make_shared<ConstantPairKernel>(0.0), BetaSchedule::constant(1.0));
    SamplerOptions opt;
    opt.ladder = {0.5, 1.0};
    CHECK_THROWS_AS(mcmc_run(e, 2, opt), Error);
    CHECK_THROWS_AS(mcmc_run(e, 1, SamplerOptions{}), Error);
  }
}
