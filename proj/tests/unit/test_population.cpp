#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "hmmilm/error.hpp"
#include "hmmilm/population.hpp"

using namespace hmmilm;

namespace {

std::vector<int> ids(std::span<const Neighbor> list) {
  std::vector<int> out;
  for (const auto& nb : list) out.push_back(nb.id);
  return out;
}

}  // namespace

TEST_CASE("grid coordinates") {
  const auto tswv = build_grid(GridSpec{26, 20, 1.0, 0.5});
  CHECK(tswv.size() == 520);
  CHECK(std::hypot(tswv[1].x - tswv[0].x, tswv[1].y - tswv[0].y) == 0.5);
  const auto one = build_grid(GridSpec{1, 1, 1.0, 1.0});
  REQUIRE(one.size() == 1);
  CHECK(one[0].x == 0.0);
  CHECK(one[0].y == 0.0);
  const auto sq = build_grid(GridSpec{2, 2, 1.0, 0.5});
  CHECK(std::hypot(sq[3].x - sq[0].x, sq[3].y - sq[0].y) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
}

TEST_CASE("queen neighbourhood counts") {
  const GridSpec g{26, 20, 1.0, 0.5};
  const Population p3 = queen_neighbors(g, 3);
  const int interior = 10 * 20 + 10;
  CHECK(p3.neighbors(interior).size() == 48);
  CHECK(p3.neighbors(0).size() == 15);
  CHECK(queen_neighbors(g, 1).neighbors(interior).size() == 8);
  CHECK(p3.max_neighbor_distance() == doctest::Approx(std::hypot(3.0, 1.5)).epsilon(1e-12));
  CHECK(p3.min_neighbor_distance() == 0.5);
  CHECK(p3.max_neighbor_order() == 3);
}

TEST_CASE("queen neighbourhoods agree with an exhaustive window scan") {
  const GridSpec g{26, 20, 1.0, 0.5};
  for (int order : {2, 3, 4}) {
    const Population pop = queen_neighbors(g, order);
    for (int i = 0; i < pop.size(); ++i) {
      std::vector<int> expected;
      const int r = i / g.cols;
      const int c = i % g.cols;
      for (int j = 0; j < pop.size(); ++j) {
        const int dr = std::abs(j / g.cols - r);
        const int dc = std::abs(j % g.cols - c);
        if (j != i && dr <= order && dc <= order) expected.push_back(j);
      }
      REQUIRE(ids(pop.neighbors(i)) == expected);
      for (const auto& nb : pop.neighbors(i)) {
        const int dr = std::abs(nb.id / g.cols - r);
        const int dc = std::abs(nb.id % g.cols - c);
        CHECK(pop.pair_class(nb.cls).order == std::max(dr, dc));
        CHECK(pop.pair_class(nb.cls).distance == doctest::Approx(std::hypot(dr * 1.0, dc * 0.5)).epsilon(1e-14));
      }
      // symmetric grid: reverse lists equal forward lists
      CHECK(ids(pop.reverse_neighbors(i)) == expected);
    }
  }
}

TEST_CASE("complete graph") {
  const Population p = complete_graph(89);
  for (int i = 0; i < 89; ++i) CHECK(p.neighbors(i).size() == 88);
  CHECK(complete_graph(1).neighbors(0).empty());
  const Population three = complete_graph(3);
  CHECK(ids(three.neighbors(0)) == std::vector<int>{1, 2});
  CHECK(ids(three.neighbors(1)) == std::vector<int>{0, 2});
  CHECK(ids(three.neighbors(2)) == std::vector<int>{0, 1});
  CHECK_FALSE(three.has_coordinates());
}

TEST_CASE("reverse index") {
  CHECK(reverse_index({{1}, {}}) == std::vector<std::vector<int>>{{}, {0}});
  std::mt19937_64 gen(50);
  std::vector<std::vector<int>> g(50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j)
      if (i != j && gen() % 5 == 0) g[i].push_back(j);
  CHECK(reverse_index(reverse_index(g)) == g);

  std::vector<std::vector<Neighbor>> lists(50);
  for (int i = 0; i < 50; ++i)
    for (int j : g[i]) lists[i].push_back({j, 0});
  const Population pop(50, {}, lists, {PairClass{NAN, 0}});
  const auto rev = reverse_index(g);
  for (int i = 0; i < 50; ++i) {
    CHECK(ids(pop.neighbors(i)) == g[i]);
    CHECK(ids(pop.reverse_neighbors(i)) == rev[i]);
  }
}

TEST_CASE("radius neighbourhoods and validation") {
  const Population p = radius_neighbors(build_grid(GridSpec{3, 3, 1.0, 0.5}), 1.0);
  CHECK(ids(p.neighbors(4)) == std::vector<int>{1, 3, 5, 7});
  CHECK_THROWS_AS(Population(2, {}, {{Neighbor{0, 0}}, {}}, {PairClass{}}), InputError);
  CHECK_THROWS_AS(Population(2, {}, {{Neighbor{5, 0}}, {}}, {PairClass{}}), InputError);
  CHECK_THROWS_AS(queen_neighbors(GridSpec{2, 2, 1.0, 0.5}, 0), Error);
}
