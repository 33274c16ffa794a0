#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hmmilm/error.hpp"
#include "hmmilm/io.hpp"

using namespace hmmilm;

namespace {

std::string render(const CsvTable& t) {
  std::ostringstream out;
  write_csv(out, t);
  return out.str();
}

CsvTable reparse(const std::string& text, const std::vector<std::string>& header) {
  std::istringstream in(text);
  return read_csv(in, header);
}

// write(read(write(x))) == write(x) for one schema.
template <class From, class To>
void check_round_trip(const CsvTable& table, From from, To to) {
  const std::string first = render(table);
  const std::string second = render(to(from(reparse(first, table.header))));
  CHECK(first == second);
}

double awkward(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return std::ldexp(u(gen), static_cast<int>(gen() % 40) - 20);
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(NAN) == "NA");
  CHECK(format_double(3.0) == "3");
  CHECK(std::isnan(parse_double("NA", 1)));
  std::mt19937_64 gen(1);
  for (int k = 0; k < 1000; ++k) {
    const double x = awkward(gen);
    CHECK(parse_double(format_double(x), 1) == x);
  }
  CHECK_THROWS_AS(parse_double("1.5x", 4), DataError);
  CHECK_THROWS_AS(parse_int("2.5", 4), DataError);
  CHECK(parse_bool("true", 1));
  CHECK_FALSE(parse_bool("0", 1));
}

TEST_CASE("detections") {
  CsvTable t;
  t.header = {"id", "t"};
  for (int i = 0; i < 327; ++i) {
    t.rows.push_back({std::to_string(i), std::to_string(1 + i % 7)});
    t.lines.push_back(i + 2);
  }
  const ObservationMatrix y = detections_from_table(t, 520, 7, true);
  CHECK(y.total_detections() == 327);
  check_round_trip(t, [](const CsvTable& c) { return detections_from_table(c, 520, 7, true); },
                   detections_to_table);

  const ObservationMatrix empty = detections_from_table(reparse("id,t\n", {"id", "t"}), 10, 7, true);
  CHECK(empty.total_detections() == 0);

  try {
    detections_from_table(reparse("id,t\n1,3\n5,9\n", {"id", "t"}), 10, 7, true);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(detections_from_table(reparse("id,t\n1,3\n1,3\n", {"id", "t"}), 10, 7, false), DataError);
  CHECK_THROWS_AS(detections_from_table(reparse("id,t\n1,3\n1,4\n", {"id", "t"}), 10, 7, true), DataError);
  CHECK(detections_from_table(reparse("id,t\n1,3\n1,4\n", {"id", "t"}), 10, 7, false).detection_count(1) == 2);
  CHECK_THROWS_AS(detections_from_table(reparse("id,t\n10,3\n", {"id", "t"}), 10, 7, true), DataError);
  CHECK_THROWS_AS(detections_from_table(reparse("id,t\n1,0\n", {"id", "t"}), 10, 7, true), DataError);
  CHECK_THROWS_AS(reparse("id,time\n", {"id", "t"}), DataError);
  CHECK_THROWS_AS(reparse("id,t\n1\n", {"id", "t"}), DataError);
}

TEST_CASE("population and covariate files") {
  std::mt19937_64 gen(2);
  std::vector<Point> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({awkward(gen), awkward(gen)});
  const CsvTable pt = points_to_table(pts);
  const auto back = points_from_table(reparse(render(pt), pt.header));
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].x == pts[i].x);
    CHECK(back[i].y == pts[i].y);
  }
  CHECK_THROWS_AS(points_from_table(reparse("id,x,y\n0,0,0\n2,1,1\n", {"id", "x", "y"})), DataError);

  const std::vector<std::uint8_t> w{0, 0, 1, 1, 0, 0, 0, 0};
  const CsvTable ct = covariates_to_table(w);
  CHECK(covariates_from_table(reparse(render(ct), ct.header), 7) == w);
  CHECK_THROWS_AS(covariates_from_table(ct, 6), DataError);
  CHECK_THROWS_AS(covariates_from_table(reparse("t,W\n0,2\n1,0\n", {"t", "W"}), 1), DataError);
}

TEST_CASE("output schemas round-trip byte for byte") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> state(1, 3);

  StateMatrix s(6, 4);
  for (int i = 0; i < 6; ++i)
    for (int t = 0; t <= 4; ++t) s(i, t) = static_cast<DiseaseState>(state(gen));
  check_round_trip(states_to_table(s), states_from_table, states_to_table);
  CHECK(states_from_table(states_to_table(s)) == s);

  for (int beta_count = 1; beta_count <= 3; ++beta_count) {
    std::vector<ParamDraw> draws;
    for (int k = 0; k < 30; ++k) {
      ParamDraw d{k % 3, k, {}};
      d.v.theta = k % 5 == 0 ? NAN : awkward(gen);
      d.v.m = awkward(gen);
      d.v.alpha = awkward(gen);
      for (int b = 0; b < beta_count; ++b) d.v.beta[b] = awkward(gen);
      draws.push_back(d);
    }
    check_round_trip(param_draws_to_table(draws, beta_count), param_draws_from_table,
                     [&](const auto& d) { return param_draws_to_table(d, beta_count); });
  }

  std::vector<FunctionalDraw> fd;
  for (int k = 0; k < 20; ++k) fd.push_back({k % 2, k, k % 3 ? "undetected" : "total", awkward(gen)});
  check_round_trip(functional_draws_to_table(fd), functional_draws_from_table, functional_draws_to_table);

  std::vector<StateCount> sc;
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t <= 2; ++t) sc.push_back({i, t, {static_cast<long long>(gen() % 100), 7, 0}});
  check_round_trip(state_counts_to_table(sc), state_counts_from_table, state_counts_to_table);

  StateSummary ss;
  ss.individuals = 2;
  ss.horizon = 2;
  for (int k = 0; k < 6; ++k) {
    const double a = std::abs(awkward(gen)) / 4;
    ss.probs.push_back({a, 0.5 - a, 0.5});
  }
  check_round_trip(state_probs_to_table(ss), state_probs_from_table, state_probs_to_table);

  std::vector<NamedInterval> iv{{"theta", {0.5, 0.25, 0.75}}, {"R0", {awkward(gen), -1.0, 2.0}}};
  check_round_trip(intervals_to_table(iv), intervals_from_table, intervals_to_table);

  std::vector<WaicRow> wr{{"marginal", awkward(gen), awkward(gen), awkward(gen)}, {"conditional", -3.0, 0.5, 7.0}};
  check_round_trip(waic_to_table(wr), waic_from_table, waic_to_table);

  ConvergenceReport cr;
  cr.params = {{ParamId::Theta, 1.01, 1500.0, true}, {ParamId::Beta1, 1.2, 80.5, false}};
  check_round_trip(convergence_to_table(cr), convergence_from_table, convergence_to_table);

  std::vector<RecoveryRow> rr{{0, ParamId::Alpha, 0.01, 0.002, 0.03, true, true},
                              {1, ParamId::M, 3.1, 1.5, awkward(gen), false, true}};
  check_round_trip(recovery_to_table(rr), recovery_from_table, recovery_to_table);

  std::vector<CoverageRow> cov{{ParamId::Alpha, 93.91, 0.02, 20}, {ParamId::M, 99.56, 13.03, 20}};
  check_round_trip(coverage_to_table(cov), coverage_from_table, coverage_to_table);

  std::vector<MedianRow> med{{ParamId::Beta0, 0.071, 0.05, 0.09}};
  check_round_trip(medians_to_table(med), medians_from_table, medians_to_table);

  NeighborhoodSelection sel{{{2, 1602.68, true}, {3, 1591.76, true}, {4, 1587.32, false}}, 3};
  check_round_trip(orders_to_table(sel), orders_from_table, orders_to_table);
  CHECK(orders_from_table(orders_to_table(sel)).selected == 3);

  std::vector<CurvePoint> curve{{0.5, {0.39, 0.3, 0.5}}, {1.0, {awkward(gen), 0.0, 1.0}}};
  check_round_trip(curve_to_table(curve), curve_from_table, curve_to_table);
}
