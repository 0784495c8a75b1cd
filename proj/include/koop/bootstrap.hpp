#pragma once

#include "koop/model.hpp"
#include "koop/spectral.hpp"

#include <cstdint>
#include <vector>

namespace koop {

struct BootstrapOptions {
    int n_boot = 100;
    int n_timescales = 2; // sub-stationary timescales t_2 .. t_{1+n}
    Estimator estimator = Estimator::reversible;
    double eps0 = kDefaultEps0;
};

struct BootstrapResult {
    enum class Status { ok, estimation_failed, non_contractive };
    Matrix samples; // n_boot x n_timescales, NaN where rejected
    std::vector<Status> status;
    // accepted samples per timescale index, in draw order
    std::vector<std::vector<double>> accepted;

    int n_used() const;
};

// Resamples trajectories with replacement and re-estimates the timescales.
// Samples where estimation fails or a sub-stationary eigenvalue has modulus
// >= 1 are rejected as outliers. Resample r uses the stream (seed, r).
BootstrapResult bootstrap_timescales(const TrajectorySet& ts, const BasisSet& basis,
                                     int lag_steps, const BootstrapOptions& opts,
                                     std::uint64_t seed);

// Same, with explicit resample index lists (one vector of trajectory indices
// per resample).
BootstrapResult bootstrap_timescales_with_indices(
    const TrajectorySet& ts, const BasisSet& basis, int lag_steps, const BootstrapOptions& opts,
    const std::vector<std::vector<int>>& resamples);

// Linear-interpolation percentile of an unsorted sample set, p in [0, 100].
double percentile(std::vector<double> values, double p);

} // namespace koop
