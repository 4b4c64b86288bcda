#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "repgame/belief.hpp"

namespace repgame {

// Regular discretization of the belief simplex: all rational points with
// denominator `resolution`, plus the Freudenthal (Kuhn) triangulation for
// barycentric interpolation of off-grid beliefs. Interpolation weights are a
// convex combination, which is what keeps the discretized Bellman operator a
// contraction.
class BeliefGrid {
 public:
  BeliefGrid(int dim, int resolution);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return points_.size(); }

  const Belief& point(std::size_t index) const { return points_[index]; }
  const std::vector<Belief>& points() const { return points_; }

  // Grid index of the vertex with all mass on `coordinate`.
  std::size_t vertex_index(int coordinate) const;

  // Exact index of an on-grid belief given its integer composition.
  std::size_t index_of(const std::vector<int>& composition) const;

  struct Support {
    std::vector<std::size_t> indices;
    std::vector<double> weights;  // nonnegative, sums to 1
  };

  // Barycentric support of an arbitrary belief; at most dim() vertices.
  Support locate(const Belief& b) const;

  // Interpolate a per-grid-point table at an arbitrary belief.
  double interpolate(std::span<const double> values, const Belief& b) const;

 private:
  static std::uint64_t key_of(const std::vector<int>& composition);

  int dim_;
  int resolution_;
  std::vector<Belief> points_;
  std::vector<std::vector<int>> compositions_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace repgame
