#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hmmilm/archive.hpp"
#include "hmmilm/diagnostics.hpp"
#include "hmmilm/error.hpp"
#include "stats.hpp"

using namespace hmmilm;

namespace {

std::vector<double> normals(int n, double mean, unsigned long long seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(mean, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(gen);
  return x;
}

}  // namespace

TEST_CASE("WAIC assembly") {
  // Hand-computed: two cells, three draws.
  const std::vector<std::vector<double>> draws{{-1.0, -2.0}, {-1.5, -2.0}, {-0.5, -2.0}};
  const WaicResult r = waic_from_draws(draws);
  const double lppd0 = std::log((std::exp(-1.0) + std::exp(-1.5) + std::exp(-0.5)) / 3.0);
  CHECK(r.lppd == doctest::Approx(lppd0 - 2.0).epsilon(1e-14));
  CHECK(r.p_waic == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(r.waic == -2.0 * (r.lppd - r.p_waic));
  CHECK(r.pointwise_var[1] == 0.0);

  const WaicResult flat = waic_from_draws({{-0.3, -0.7}, {-0.3, -0.7}});
  CHECK(flat.p_waic == 0.0);
  CHECK(flat.waic == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(waic_from_draws({{-1.0}}), InputError);
}

TEST_CASE("WAIC accumulator merging equals a single stream") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> d(-2.0, 0.7);
  WaicAccumulator all(4), a(4), b(4);
  for (int q = 0; q < 200; ++q) {
    std::vector<double> row(4);
    for (auto& x : row) x = d(gen);
    all.add(row);
    (q < 120 ? a : b).add(row);
  }
  a.merge(b);
  const auto x = waic_assemble(all);
  const auto y = waic_assemble(a);
  CHECK(x.lppd == doctest::Approx(y.lppd).epsilon(1e-13));
  CHECK(x.p_waic == doctest::Approx(y.p_waic).epsilon(1e-12));
  CHECK(y.p_waic >= 0.0);
}

TEST_CASE("WAIC flags cells that saw a zero density") {
  WaicAccumulator acc(2);
  acc.add(std::vector<double>{-1.0, kNegInf});
  acc.add(std::vector<double>{-1.0, -2.0});
  CHECK(acc.saw_neg_inf(1));
  CHECK(std::isinf(acc.variance(1)));
  const auto r = waic_assemble(acc);
  CHECK(r.neg_inf_cells == 1);
}

TEST_CASE("Gelman-Rubin") {
  const auto a = normals(10000, 0.0, 1);
  CHECK(gelman_rubin({a, a, a}).value == 1.0);
  const auto b = normals(10000, 0.0, 2);
  CHECK(gelman_rubin({a, b}).value < 1.01);
  CHECK(gelman_rubin({a, normals(10000, 10.0, 3)}).value > 1.05 * 4);

  // invariant under a common affine map
  const auto c = normals(500, 0.3, 4);
  const auto e = normals(500, 0.0, 5);
  auto affine = [](std::vector<double> v) {
    for (auto& x : v) x = -3.0 * x + 7.0;
    return v;
  };
  CHECK(gelman_rubin({affine(c), affine(e)}).value == doctest::Approx(gelman_rubin({c, e}).value).epsilon(1e-12));
  const std::vector<double> k(20, 1.0);
  CHECK(gelman_rubin({k, k}).flagged);
  CHECK_THROWS_AS(gelman_rubin({a}), InputError);
}

TEST_CASE("effective sample size") {
  const auto white = normals(10000, 0.0, 7);
  CHECK(effective_sample_size(white).value == doctest::Approx(10000).epsilon(0.15));
  const auto ar = testing::ar1_series(0.9, 100000, 8);
  CHECK(effective_sample_size(ar).value == doctest::Approx(100000.0 / 19.0).epsilon(0.2));
  const std::vector<double> constant(10, 2.5);
  const auto flat = effective_sample_size(constant);
  CHECK(flat.value == 0.0);
  CHECK(flat.flagged);
  std::vector<double> reversed(ar.rbegin(), ar.rend());
  CHECK(effective_sample_size(reversed).value == doctest::Approx(effective_sample_size(ar).value).epsilon(1e-9));
  for (unsigned long long s = 0; s < 20; ++s) {
    const auto x = testing::ar1_series(-0.7, 300, s);
    CHECK(effective_sample_size(x).value <= 300.0);
  }
  CHECK(effective_sample_size(std::vector<std::vector<double>>{white, ar}).value ==
        doctest::Approx(effective_sample_size(white).value + effective_sample_size(ar).value));
}

TEST_CASE("quantiles and intervals") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({5}, 0.975) == 5);
  CHECK(quantile({0, 10}, 0.025) == doctest::Approx(0.25));
  const auto s = summarize_interval({3.0});
  CHECK(s.median == 3.0);
  CHECK(s.lo95 == 3.0);
  CHECK(s.hi95 == 3.0);
}

TEST_CASE("basic reproduction number") {
  KernelSpec homog;
  homog.kind = KernelKind::HomogeneousWardClosure;
  CHECK(r0(homog, 0.01, 3.0, 89) == doctest::Approx(2.64).epsilon(1e-14));
  CHECK(r0(homog, 0.0, 3.0, 89) == 0.0);
  CHECK_THROWS_AS(r0(KernelSpec{}, 0.01, 3.0, 89), NotApplicableError);
}

TEST_CASE("state summaries from a single retained draw") {
  PosteriorArchive archive;
  archive.individuals = 1;
  archive.horizon = 1;
  archive.functional_names = {"f"};
  ChainArchive chain;
  chain.retained = {10};
  chain.functionals = {{4.0}};
  chain.state_counts = {1, 0, 0, 0, 1, 0};
  archive.chains.push_back(chain);
  const StateSummary s = summarize_states(archive);
  CHECK(s.probs[0] == std::array<double, 3>{1.0, 0.0, 0.0});
  CHECK(s.probs[1] == std::array<double, 3>{0.0, 1.0, 0.0});
  CHECK(s.functionals[0].second.lo95 == 4.0);
  CHECK(s.functionals[0].second.hi95 == 4.0);
}
