#include "kyle/intensity.hpp"

#include <cmath>
#include <limits>

namespace kyle {

namespace {

void check_values(const std::vector<double>& v) {
  for (double x : v) {
    if (std::isnan(x) || x < 0.0) throw ModelError("beta must be non-negative and not NaN");
  }
}

std::vector<double> interpolate_mids(const std::vector<double>& y) {
  const std::size_t n = y.size() - 1;
  std::vector<double> mids(n);
  for (std::size_t k = 0; k < n; ++k) {
    double m;
    if (n < 3) {
      m = 0.5 * (y[k] + y[k + 1]);
    } else if (k == 0) {
      m = (3.0 * y[0] + 6.0 * y[1] - y[2]) / 8.0;
    } else if (k + 1 == n) {
      m = (3.0 * y[n] + 6.0 * y[n - 1] - y[n - 2]) / 8.0;
    } else {
      m = (-y[k - 1] + 9.0 * y[k] + 9.0 * y[k + 1] - y[k + 2]) / 16.0;
    }
    // Unbounded tails (beta -> inf at T) make the stencil meaningless.
    if (!std::isfinite(m)) m = std::isinf(y[k + 1]) ? y[k + 1] : 0.5 * (y[k] + y[k + 1]);
    mids[k] = std::max(m, 0.0);
  }
  return mids;
}

}  // namespace

IntensityPath::IntensityPath(TimeGrid grid, std::vector<double> nodes)
    : grid_(grid), nodes_(std::move(nodes)) {
  if (nodes_.size() != static_cast<std::size_t>(grid_.nodes()))
    throw ModelError("intensity path length does not match the grid");
  check_values(nodes_);
  mids_ = interpolate_mids(nodes_);
}

IntensityPath::IntensityPath(TimeGrid grid, std::vector<double> nodes, std::vector<double> mids)
    : grid_(grid), nodes_(std::move(nodes)), mids_(std::move(mids)) {
  if (nodes_.size() != static_cast<std::size_t>(grid_.nodes()) ||
      mids_.size() != static_cast<std::size_t>(grid_.steps()))
    throw ModelError("intensity path length does not match the grid");
  check_values(nodes_);
  check_values(mids_);
}

IntensityPath IntensityPath::constant(const TimeGrid& grid, double value) {
  return sample(grid, [value](double) { return value; });
}

IntensityPath IntensityPath::truncated(int last_node) const {
  if (last_node < 1 || last_node > grid_.steps()) throw ModelError("truncation node out of range");
  const auto n = static_cast<std::ptrdiff_t>(last_node);
  return IntensityPath(TimeGrid(grid_.time(last_node), last_node),
                       std::vector<double>(nodes_.begin(), nodes_.begin() + n + 1),
                       std::vector<double>(mids_.begin(), mids_.begin() + n));
}

double IntensityPath::l2_norm(int last_node) const {
  const double dt = grid_.dt();
  double acc = 0.0;
  for (int k = 0; k <= last_node; ++k) {
    const double w = (k == 0 || k == last_node) ? 0.5 : 1.0;
    acc += w * at(k) * at(k);
  }
  return std::sqrt(acc * dt);
}

double l2_distance(const IntensityPath& a, const IntensityPath& b, int last_node) {
  if (!(a.grid() == b.grid())) throw ModelError("intensity paths live on different grids");
  const double dt = a.grid().dt();
  double acc = 0.0;
  for (int k = 0; k <= last_node; ++k) {
    const double w = (k == 0 || k == last_node) ? 0.5 : 1.0;
    const double d = a.at(k) - b.at(k);
    acc += w * d * d;
  }
  return std::sqrt(acc * dt);
}

IntensityPath classical_kyle_intensity(const ModelParams& p, const TimeGrid& grid) {
  const double scale = std::sqrt(p.observation_variance() * p.T) / p.sigma_v;
  return IntensityPath::sample(grid, [&](double t) {
    const double rem = p.T - t;
    return rem > 0.0 ? scale / rem : std::numeric_limits<double>::infinity();
  });
}

}  // namespace kyle
