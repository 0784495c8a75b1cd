#pragma once

#include "koop/linalg.hpp"
#include "koop/trajectory.hpp"

#include <span>
#include <string>

namespace koop {

enum class CovEstimator { direct, symmetrized, weighted_reversible, exact_equilibrium };

std::string to_string(CovEstimator e);

// Paired instantaneous / time-lagged covariance matrices. All bundles store
// normalized matrices: direct and symmetrized carry the 1/N factor, the
// weighted estimator expects weights summing to 1.
struct CovarianceBundle {
    Matrix c0;
    Matrix ct;
    CovEstimator estimator = CovEstimator::direct;
    Index pair_count = 0;
    int lag_steps = 0;
    std::string weights_id;
    // Accumulation weight of this bundle: pair count for direct/symmetrized,
    // total weight mass for weighted estimates.
    double mass = 0;
    Index negative_weights = 0;

    Index dim() const { return c0.rows(); }
};

// C0 = X^T X / N, Ct = X^T Y / N.
CovarianceBundle direct_covariances(const LagPairView& pairs);

// C0 = (X^T X + Y^T Y) / 2N, Ct = (X^T Y + Y^T X) / 2N; Ct exactly symmetric.
CovarianceBundle symmetrized_covariances(const LagPairView& pairs);

// C0 = (X^T W X + Y^T W Y)/2, Ct = (X^T W Y + Y^T W X)/2 with W = diag(w);
// w must be finite and sum to 1. Negative weights are accepted and counted.
CovarianceBundle weighted_reversible_covariances(const LagPairView& pairs, const Vector& w);

// Mass-weighted combination; equals the single-pass estimate over the
// concatenated data. Requires identical shape, estimator and lag.
CovarianceBundle accumulate(std::span<const CovarianceBundle> partials);

namespace detail {
// Unnormalized weighted bundle for partial accumulation (mass = sum of w).
CovarianceBundle weighted_reversible_partial(const LagPairView& pairs, const Vector& w);
} // namespace detail

} // namespace koop
