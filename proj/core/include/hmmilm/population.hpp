#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hmmilm {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Geometry shared by every pair in one equivalence class. Kernels only ever see
/// these descriptors, so the distance of a pair is computed exactly once.
struct PairClass {
  double distance = 0.0;  // metres; NaN when the population has no coordinates
  int order = 0;          // queen neighbour order, 0 when not grid based
};

/// An entry of NE(i) (or of the reverse list), tagged with its pair class.
struct Neighbor {
  int id = 0;
  int cls = 0;
};

/// Rectangular planting layout: `rows` rows of `cols` individuals.
struct GridSpec {
  int rows = 1;
  int cols = 1;
  double row_spacing = 1.0;         // distance between rows (y axis)
  double within_row_spacing = 0.5;  // distance between neighbours in a row (x axis)
};

/// Individuals, their optional coordinates and the directed contact structure.
/// Neighbour lists are sorted by id; the reverse lists are the exact transpose.
/// Immutable after construction.
class Population {
 public:
  Population() = default;

  /// Builds a population from per-individual neighbour lists. `classes` holds the
  /// geometry referenced by `Neighbor::cls`. Lists are sorted and validated here.
  Population(int n, std::vector<Point> coords, std::vector<std::vector<Neighbor>> neighbors,
             std::vector<PairClass> classes, std::optional<GridSpec> grid = std::nullopt);

  int size() const noexcept { return n_; }
  bool has_coordinates() const noexcept { return !coords_.empty(); }
  std::span<const Point> coordinates() const noexcept { return coords_; }
  const std::optional<GridSpec>& grid() const noexcept { return grid_; }

  /// NE(i), ascending by id.
  std::span<const Neighbor> neighbors(int i) const noexcept {
    return {nbr_.data() + nbr_offsets_[i], nbr_.data() + nbr_offsets_[i + 1]};
  }
  /// {j : i in NE(j)}, ascending by id; `cls` is the class of the pair (i in NE(j)).
  std::span<const Neighbor> reverse_neighbors(int i) const noexcept {
    return {rev_.data() + rev_offsets_[i], rev_.data() + rev_offsets_[i + 1]};
  }

  int class_count() const noexcept { return static_cast<int>(classes_.size()); }
  const PairClass& pair_class(int c) const { return classes_.at(c); }
  std::span<const PairClass> classes() const noexcept { return classes_; }

  /// Largest / smallest neighbour distance over all stored pairs.
  double max_neighbor_distance() const;
  double min_neighbor_distance() const;
  int max_neighbor_order() const;
  std::size_t edge_count() const noexcept { return nbr_.size(); }

 private:
  int n_ = 0;
  std::vector<Point> coords_;
  std::optional<GridSpec> grid_;
  std::vector<PairClass> classes_;
  std::vector<std::size_t> nbr_offsets_{0};
  std::vector<Neighbor> nbr_;
  std::vector<std::size_t> rev_offsets_{0};
  std::vector<Neighbor> rev_;
};

/// Ward closure indicators W_t for t = 0..T.
struct TimeCovariates {
  std::vector<std::uint8_t> ward_closed;
};

/// Row-major lattice coordinates: id = row * cols + col, x = col * within_row_spacing,
/// y = row * row_spacing.
std::vector<Point> build_grid(const GridSpec& spec);

/// Queen neighbourhood of the given order on a grid: every cell whose row and column
/// offsets are both at most `order`, tagged with max(|row offset|, |col offset|).
Population queen_neighbors(const GridSpec& spec, int order);

/// NE(i) = {j : j != i}. Optional coordinates are carried along for distance kernels.
Population complete_graph(int n, std::vector<Point> coords = {});

/// NE(i) = {j != i : d(i, j) <= radius}.
Population radius_neighbors(std::vector<Point> coords, double radius);

/// Exact transpose of an adjacency given as neighbour id lists.
std::vector<std::vector<int>> reverse_index(const std::vector<std::vector<int>>& neighbors);

}  // namespace hmmilm
