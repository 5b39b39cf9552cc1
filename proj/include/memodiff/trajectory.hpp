#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace memodiff {

/// Uniform time grid: history nodes −n_history … 0 and solution nodes 1 … n_steps.
struct TimeGrid {
    double dt = 0.0;
    int n_history = 0;
    int n_steps = 0;

    double horizon() const noexcept { return n_steps * dt; }
    double time(int n) const noexcept { return n * dt; }
};

/// Requires dt to divide T (relative tolerance 1e−9) and sets
/// n_history = ⌈tau_max/dt⌉.
TimeGrid make_time_grid(double T, double dt, double tau_max);

/// Nodal vectors on a time grid, indexed −n_history … n_steps.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(TimeGrid grid, std::size_t dim);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    int first_index() const noexcept { return -grid_.n_history; }
    int last_index() const noexcept { return grid_.n_steps; }
    bool contains(int n) const noexcept { return n >= first_index() && n <= last_index(); }

    std::span<double> at(int n);
    std::span<const double> at(int n) const;

    const std::vector<double>& raw() const noexcept { return data_; }

private:
    TimeGrid grid_;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

} // namespace memodiff
