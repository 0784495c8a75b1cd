#pragma once

#include "koop/basis.hpp"
#include "koop/linalg.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace koop {

// Ordered frames grouped into independent trajectories sharing a time step.
struct TrajectorySet {
    std::vector<Matrix> trajectories; // each T_k x d
    double dt = 1.0;                  // physical time per frame
    std::vector<std::string> labels;  // optional, parallel to trajectories

    int dim() const { return trajectories.empty() ? 0 : static_cast<int>(trajectories.front().cols()); }
    Index total_frames() const;
    void validate() const; // throws on inconsistent dimensions / dt <= 0
};

// CSV: one frame per row, comma-separated; '#' lines are comments; a blank
// line separates trajectories. A "# dt = <value>" comment sets the time step.
TrajectorySet load_trajectories(const std::filesystem::path& path);

// Manifest: plain text, one CSV path per line (relative to the manifest).
TrajectorySet load_trajectory_manifest(const std::filesystem::path& path);

void write_trajectories(const std::filesystem::path& path, const TrajectorySet& ts);

// Time-lagged frame pairs stacked over all usable trajectories, evaluated
// through a basis. Row i of y is the same trajectory's frame lag_steps after
// row i of x.
struct LagPairView {
    Matrix x;     // N x m features of frames t = 1..T-tau
    Matrix y;     // N x m features of frames t = tau+1..T
    Matrix x_raw; // N x d raw coordinates of the x frames
    Matrix y_raw;
    Index pair_count = 0;
    int lag_steps = 0;
    int skipped_trajectories = 0; // too short to contribute pairs
};

LagPairView lag_pairs(const TrajectorySet& ts, const BasisSet& basis, int lag_steps);

// Raw coordinates as features (identity basis).
LagPairView lag_pairs_raw(const TrajectorySet& ts, int lag_steps);

} // namespace koop
