#include "koop/covariance.hpp"

#include "koop/errors.hpp"

#include <cmath>

namespace koop {

std::string to_string(CovEstimator e) {
    switch (e) {
        case CovEstimator::direct: return "direct";
        case CovEstimator::symmetrized: return "symmetrized";
        case CovEstimator::weighted_reversible: return "weighted_reversible";
        case CovEstimator::exact_equilibrium: return "exact_equilibrium";
    }
    return "?";
}

namespace {

constexpr Index kChunk = 8192;

// Accumulates X^T diag(w) Y in fixed row-block order.
Matrix weighted_product(const Matrix& x, const Matrix& y, const Vector& w) {
    Matrix acc = Matrix::Zero(x.cols(), y.cols());
    for (Index at = 0; at < x.rows(); at += kChunk) {
        const Index n = std::min(kChunk, x.rows() - at);
        acc.noalias() += x.middleRows(at, n).transpose() *
                         (w.segment(at, n).asDiagonal() * y.middleRows(at, n));
    }
    return acc;
}

} // namespace

CovarianceBundle direct_covariances(const LagPairView& pairs) {
    if (pairs.pair_count < 1) throw data_error("covariance: no pairs");
    const double n = static_cast<double>(pairs.pair_count);
    CovarianceBundle b;
    b.estimator = CovEstimator::direct;
    b.pair_count = pairs.pair_count;
    b.lag_steps = pairs.lag_steps;
    b.mass = n;
    b.c0 = symmetrized(pairs.x.transpose() * pairs.x / n);
    b.ct.noalias() = pairs.x.transpose() * pairs.y / n;
    return b;
}

CovarianceBundle symmetrized_covariances(const LagPairView& pairs) {
    if (pairs.pair_count < 1) throw data_error("covariance: no pairs");
    const double n = static_cast<double>(pairs.pair_count);
    CovarianceBundle b;
    b.estimator = CovEstimator::symmetrized;
    b.pair_count = pairs.pair_count;
    b.lag_steps = pairs.lag_steps;
    b.mass = n;
    b.c0 = 0.5 * (symmetrized(pairs.x.transpose() * pairs.x) +
                  symmetrized(pairs.y.transpose() * pairs.y)) /
           n;
    b.ct = symmetrized(pairs.x.transpose() * pairs.y) / n;
    return b;
}

namespace detail {

CovarianceBundle weighted_reversible_partial(const LagPairView& pairs, const Vector& w) {
    if (pairs.pair_count < 1) throw data_error("covariance: no pairs");
    if (w.size() != pairs.pair_count) throw usage_error("covariance: weight length mismatch");
    if (!w.allFinite()) throw numerical_error("covariance: non-finite weight");
    CovarianceBundle b;
    b.estimator = CovEstimator::weighted_reversible;
    b.pair_count = pairs.pair_count;
    b.lag_steps = pairs.lag_steps;
    b.mass = w.sum();
    b.negative_weights = (w.array() < 0.0).count();
    b.c0 = 0.5 * (symmetrized(weighted_product(pairs.x, pairs.x, w)) +
                  symmetrized(weighted_product(pairs.y, pairs.y, w)));
    b.ct = symmetrized(weighted_product(pairs.x, pairs.y, w));
    return b;
}

} // namespace detail

CovarianceBundle weighted_reversible_covariances(const LagPairView& pairs, const Vector& w) {
    CovarianceBundle b = detail::weighted_reversible_partial(pairs, w);
    if (std::abs(b.mass - 1.0) > 1e-8)
        throw usage_error("covariance: weights must sum to 1 (got " + std::to_string(b.mass) + ")");
    return b;
}

CovarianceBundle accumulate(std::span<const CovarianceBundle> partials) {
    if (partials.empty()) throw usage_error("accumulate: no bundles");
    const CovarianceBundle& first = partials.front();
    CovarianceBundle out;
    out.estimator = first.estimator;
    out.lag_steps = first.lag_steps;
    out.weights_id = first.weights_id;
    out.c0 = Matrix::Zero(first.dim(), first.dim());
    out.ct = Matrix::Zero(first.dim(), first.dim());
    double mass = 0;
    for (const CovarianceBundle& b : partials) {
        if (b.dim() != first.dim() || b.estimator != first.estimator ||
            b.lag_steps != first.lag_steps)
            throw usage_error("accumulate: mismatched bundles");
        out.c0 += b.mass * b.c0;
        out.ct += b.mass * b.ct;
        out.pair_count += b.pair_count;
        out.negative_weights += b.negative_weights;
        mass += b.mass;
    }
    if (!(mass != 0)) throw numerical_error("accumulate: zero total mass");
    out.c0 /= mass;
    out.ct /= mass;
    out.mass = mass;
    return out;
}

} // namespace koop
