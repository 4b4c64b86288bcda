#include "repgame/grid.hpp"

#include <algorithm>
#include <cmath>

#include "repgame/errors.hpp"

namespace repgame {

namespace {

void enumerate_compositions(int dim, int total, std::vector<int>& current,
                            std::vector<std::vector<int>>& out) {
  if (dim == 1) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    current.push_back(k);
    enumerate_compositions(dim - 1, total - k, current, out);
    current.pop_back();
  }
}

}  // namespace

std::uint64_t BeliefGrid::key_of(const std::vector<int>& composition) {
  // Positional key; resolutions comfortably below 2^16 per coordinate.
  std::uint64_t key = 1469598103934665603ULL;
  for (int v : composition) {
    key ^= static_cast<std::uint64_t>(v) + 0x9e3779b9ULL;
    key *= 1099511628211ULL;
  }
  return key;
}

BeliefGrid::BeliefGrid(int dim, int resolution) : dim_(dim), resolution_(resolution) {
  if (dim < 1 || resolution < 1) {
    raise(Errc::BadArgument, "grid needs dim >= 1 and resolution >= 1");
  }
  std::vector<int> scratch;
  enumerate_compositions(dim, resolution, scratch, compositions_);
  points_.reserve(compositions_.size());
  index_.reserve(compositions_.size() * 2);
  for (std::size_t i = 0; i < compositions_.size(); ++i) {
    Belief b;
    b.w.resize(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
      b.w[static_cast<std::size_t>(k)] =
          static_cast<double>(compositions_[i][static_cast<std::size_t>(k)]) / resolution;
    }
    points_.push_back(std::move(b));
    index_.emplace(key_of(compositions_[i]), i);
  }
}

std::size_t BeliefGrid::vertex_index(int coordinate) const {
  std::vector<int> comp(static_cast<std::size_t>(dim_), 0);
  comp[static_cast<std::size_t>(coordinate)] = resolution_;
  return index_of(comp);
}

std::size_t BeliefGrid::index_of(const std::vector<int>& composition) const {
  auto it = index_.find(key_of(composition));
  if (it == index_.end()) {
    raise(Errc::BadArgument, "composition not on the grid");
  }
  return it->second;
}

BeliefGrid::Support BeliefGrid::locate(const Belief& b) const {
  // Freudenthal triangulation in cumulative coordinates. The staircase map
  // v_j = r * (x_0 + ... + x_j) is affine and order-preserving, so every cell
  // vertex maps back to a valid grid composition and affine functions
  // interpolate exactly.
  int d = dim_;
  Support support;
  if (d == 1) {
    support.indices = {0};
    support.weights = {1.0};
    return support;
  }
  int m = d - 1;

  std::vector<double> v(static_cast<std::size_t>(m));
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    acc += std::max(0.0, b.w[static_cast<std::size_t>(j)]);
    v[static_cast<std::size_t>(j)] =
        std::min(acc * resolution_, static_cast<double>(resolution_));
  }
  for (int j = 1; j < m; ++j) {
    v[static_cast<std::size_t>(j)] =
        std::max(v[static_cast<std::size_t>(j)], v[static_cast<std::size_t>(j - 1)]);
  }

  std::vector<int> base(static_cast<std::size_t>(m));
  std::vector<std::pair<double, int>> fractional(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    double y = v[static_cast<std::size_t>(j)];
    double fl = std::floor(y);
    if (fl > y) fl -= 1.0;
    base[static_cast<std::size_t>(j)] = static_cast<int>(fl);
    fractional[static_cast<std::size_t>(j)] = {y - fl, j};
  }
  // Descending fractional parts. Equal fractions increment the later
  // cumulative coordinate first, which keeps the staircase monotone.
  std::sort(fractional.begin(), fractional.end(), [](const auto& a, const auto& b2) {
    if (a.first != b2.first) return a.first > b2.first;
    return a.second > b2.second;
  });

  auto push_vertex = [&](const std::vector<int>& cumulative, double weight) {
    if (!(weight > 0.0)) return;
    std::vector<int> comp(static_cast<std::size_t>(d));
    comp[0] = cumulative[0];
    for (int j = 1; j < m; ++j) {
      comp[static_cast<std::size_t>(j)] =
          cumulative[static_cast<std::size_t>(j)] - cumulative[static_cast<std::size_t>(j - 1)];
    }
    comp[static_cast<std::size_t>(d - 1)] =
        resolution_ - cumulative[static_cast<std::size_t>(m - 1)];
    auto it = index_.find(key_of(comp));
    if (it == index_.end()) {
      raise(Errc::BadArgument, "belief outside the simplex");
    }
    support.indices.push_back(it->second);
    support.weights.push_back(weight);
  };

  std::vector<int> current = base;
  double prev = 1.0;
  for (int s = 0; s < m; ++s) {
    double f = fractional[static_cast<std::size_t>(s)].first;
    push_vertex(current, prev - f);
    current[static_cast<std::size_t>(fractional[static_cast<std::size_t>(s)].second)] += 1;
    prev = f;
  }
  push_vertex(current, prev);

  double total = 0.0;
  for (double w : support.weights) total += w;
  if (support.indices.empty() || !(total > 0.0)) {
    raise(Errc::BadArgument, "belief outside the simplex");
  }
  for (double& w : support.weights) w /= total;
  return support;
}

double BeliefGrid::interpolate(std::span<const double> values, const Belief& b) const {
  Support s = locate(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    acc += s.weights[i] * values[s.indices[i]];
  }
  return acc;
}

}  // namespace repgame
