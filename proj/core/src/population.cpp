#include "hmmilm/population.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "hmmilm/error.hpp"

namespace hmmilm {

namespace {

// Deduplicates pair geometry by exact bit pattern so identical offsets share a class.
class ClassTable {
 public:
  int intern(double distance, int order) {
    const auto key = std::make_pair(std::bit_cast<std::uint64_t>(distance), order);
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(classes_.size()));
    if (inserted) classes_.push_back({distance, order});
    return it->second;
  }
  std::vector<PairClass> release() { return std::move(classes_); }

 private:
  std::map<std::pair<std::uint64_t, int>, int> index_;
  std::vector<PairClass> classes_;
};

double euclid(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

Population::Population(int n, std::vector<Point> coords, std::vector<std::vector<Neighbor>> neighbors,
                       std::vector<PairClass> classes, std::optional<GridSpec> grid)
    : n_(n), coords_(std::move(coords)), grid_(grid), classes_(std::move(classes)) {
  if (n < 0) throw InputError("population size must be non-negative");
  if (static_cast<int>(neighbors.size()) != n) throw InputError("neighbour lists must have one entry per individual");
  if (!coords_.empty() && static_cast<int>(coords_.size()) != n)
    throw InputError("coordinates must have one entry per individual");

  std::vector<std::vector<Neighbor>> reverse(n);
  nbr_offsets_.assign(1, 0);
  for (int i = 0; i < n; ++i) {
    auto& list = neighbors[i];
    std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Neighbor& nb = list[k];
      if (nb.id < 0 || nb.id >= n) throw InputError("neighbour id out of range");
      if (nb.id == i) throw InputError("an individual cannot be its own neighbour");
      if (k > 0 && list[k - 1].id == nb.id) throw InputError("duplicate neighbour entry");
      if (nb.cls < 0 || nb.cls >= static_cast<int>(classes_.size())) throw InputError("pair class out of range");
      nbr_.push_back(nb);
      // i has j in NE(i): so i belongs to the reverse list of j.
      reverse[nb.id].push_back({i, nb.cls});
    }
    nbr_offsets_.push_back(nbr_.size());
  }
  rev_offsets_.assign(1, 0);
  for (int i = 0; i < n; ++i) {
    // Filled in ascending i order, hence already sorted.
    rev_.insert(rev_.end(), reverse[i].begin(), reverse[i].end());
    rev_offsets_.push_back(rev_.size());
  }
}

double Population::max_neighbor_distance() const {
  double best = 0.0;
  for (const Neighbor& nb : nbr_) best = std::max(best, classes_[nb.cls].distance);
  return best;
}

double Population::min_neighbor_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (const Neighbor& nb : nbr_) best = std::min(best, classes_[nb.cls].distance);
  return best;
}

int Population::max_neighbor_order() const {
  int best = 0;
  for (const Neighbor& nb : nbr_) best = std::max(best, classes_[nb.cls].order);
  return best;
}

std::vector<Point> build_grid(const GridSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1) throw InputError("grid dimensions must be at least 1x1");
  if (!(spec.row_spacing > 0.0) || !(spec.within_row_spacing > 0.0))
    throw InputError("grid spacings must be positive");
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(spec.rows) * spec.cols);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) pts.push_back({c * spec.within_row_spacing, r * spec.row_spacing});
  return pts;
}

Population queen_neighbors(const GridSpec& spec, int order) {
  if (order < 1) throw InputError("neighbourhood order must be at least 1");
  auto coords = build_grid(spec);
  const int n = spec.rows * spec.cols;
  ClassTable table;
  std::vector<std::vector<Neighbor>> lists(n);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      auto& list = lists[r * spec.cols + c];
      for (int r2 = std::max(0, r - order); r2 <= std::min(spec.rows - 1, r + order); ++r2) {
        for (int c2 = std::max(0, c - order); c2 <= std::min(spec.cols - 1, c + order); ++c2) {
          if (r2 == r && c2 == c) continue;
          const int dr = std::abs(r2 - r);
          const int dc = std::abs(c2 - c);
          // Distance from the offsets (not the coordinates) keeps equal offsets bit-identical.
          const double d = std::hypot(dr * spec.row_spacing, dc * spec.within_row_spacing);
          list.push_back({r2 * spec.cols + c2, table.intern(d, std::max(dr, dc))});
        }
      }
    }
  }
  return Population(n, std::move(coords), std::move(lists), table.release(), spec);
}

Population complete_graph(int n, std::vector<Point> coords) {
  if (n < 1) throw InputError("population must have at least one individual");
  if (!coords.empty() && static_cast<int>(coords.size()) != n)
    throw InputError("coordinates must have one entry per individual");
  ClassTable table;
  std::vector<std::vector<Neighbor>> lists(n);
  const double no_distance = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < n; ++i) {
    lists[i].reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = coords.empty() ? no_distance : euclid(coords[i], coords[j]);
      lists[i].push_back({j, table.intern(d, coords.empty() ? 1 : 0)});
    }
  }
  return Population(n, std::move(coords), std::move(lists), table.release());
}

Population radius_neighbors(std::vector<Point> coords, double radius) {
  if (!(radius > 0.0)) throw InputError("neighbourhood radius must be positive");
  const int n = static_cast<int>(coords.size());
  if (n < 1) throw InputError("population must have at least one individual");
  ClassTable table;
  std::vector<std::vector<Neighbor>> lists(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = euclid(coords[i], coords[j]);
      if (d <= radius) {
        if (!(d > 0.0)) throw InputError("distinct individuals share a location");
        lists[i].push_back({j, table.intern(d, 0)});
      }
    }
  }
  return Population(n, std::move(coords), std::move(lists), table.release());
}

std::vector<std::vector<int>> reverse_index(const std::vector<std::vector<int>>& neighbors) {
  const int n = static_cast<int>(neighbors.size());
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    for (int j : neighbors[i]) {
      if (j < 0 || j >= n) throw InputError("neighbour id out of range");
      out[j].push_back(i);
    }
  }
  return out;
}

}  // namespace hmmilm
