#ifndef KYLE_INTENSITY_HPP
#define KYLE_INTENSITY_HPP

#include <span>
#include <vector>

#include "kyle/model.hpp"

namespace kyle {

/// Deterministic insider trading intensity beta_t sampled on a TimeGrid.
///
/// Values are kept at the grid nodes and at the interval midpoints; the
/// fixed-step RK4 integrators evaluate beta at t_k + dt/2, so paths built from
/// a known function should be sampled there directly. Paths built from node
/// values alone get midpoints by four-point interpolation.
class IntensityPath {
 public:
  IntensityPath() = default;
  IntensityPath(TimeGrid grid, std::vector<double> nodes);
  IntensityPath(TimeGrid grid, std::vector<double> nodes, std::vector<double> mids);

  template <class Fn>
  static IntensityPath sample(const TimeGrid& grid, Fn&& fn) {
    std::vector<double> nodes(static_cast<std::size_t>(grid.nodes()));
    std::vector<double> mids(static_cast<std::size_t>(grid.steps()));
    for (int k = 0; k <= grid.steps(); ++k) nodes[static_cast<std::size_t>(k)] = fn(grid.time(k));
    for (int k = 0; k < grid.steps(); ++k)
      mids[static_cast<std::size_t>(k)] = fn(grid.time(k) + 0.5 * grid.dt());
    return IntensityPath(grid, std::move(nodes), std::move(mids));
  }

  static IntensityPath constant(const TimeGrid& grid, double value);

  /// Restriction to nodes 0..last_node, on a grid ending at t_last_node.
  IntensityPath truncated(int last_node) const;

  const TimeGrid& grid() const noexcept { return grid_; }
  double at(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
  double mid(int k) const { return mids_[static_cast<std::size_t>(k)]; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> mids() const noexcept { return mids_; }

  /// Discrete L2 norm (trapezoid weights) over nodes 0..last_node.
  double l2_norm(int last_node) const;
  double l2_norm() const { return l2_norm(grid_.steps()); }

 private:
  TimeGrid grid_;
  std::vector<double> nodes_;
  std::vector<double> mids_;
};

/// Discrete L2 distance (trapezoid weights) over nodes 0..last_node.
double l2_distance(const IntensityPath& a, const IntensityPath& b, int last_node);

/// Last node of the truncated grid [0, T - delta], delta = offset * dt.
inline int truncated_last_node(const TimeGrid& grid, int offset = 10) {
  return grid.steps() > offset ? grid.steps() - offset : 0;
}

/// beta_t = sqrt(R T) / (sigma_v (T - t)), the h = 0 equilibrium intensity.
/// Infinite at t = T; the grid may stop short of T.
IntensityPath classical_kyle_intensity(const ModelParams& p, const TimeGrid& grid);

}  // namespace kyle

#endif  // KYLE_INTENSITY_HPP
