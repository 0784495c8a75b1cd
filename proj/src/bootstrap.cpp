#include "koop/bootstrap.hpp"

#include "koop/errors.hpp"
#include "koop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace koop {

int BootstrapResult::n_used() const {
    return static_cast<int>(std::count(status.begin(), status.end(), Status::ok));
}

BootstrapResult bootstrap_timescales_with_indices(
    const TrajectorySet& ts, const BasisSet& basis, int lag_steps, const BootstrapOptions& opts,
    const std::vector<std::vector<int>>& resamples) {
    ts.validate();
    if (opts.n_timescales < 1) throw usage_error("bootstrap: need at least one timescale");
    if (resamples.empty()) throw usage_error("bootstrap: no resamples");

    BootstrapResult res;
    const auto n_boot = static_cast<Index>(resamples.size());
    res.samples = Matrix::Constant(n_boot, opts.n_timescales,
                                   std::numeric_limits<double>::quiet_NaN());
    res.status.assign(static_cast<std::size_t>(n_boot), BootstrapResult::Status::ok);
    res.accepted.assign(static_cast<std::size_t>(opts.n_timescales), {});

    for (Index r = 0; r < n_boot; ++r) {
        TrajectorySet sample;
        sample.dt = ts.dt;
        for (int idx : resamples[static_cast<std::size_t>(r)]) {
            if (idx < 0 || idx >= static_cast<int>(ts.trajectories.size()))
                throw usage_error("bootstrap: resample index out of range");
            sample.trajectories.push_back(ts.trajectories[static_cast<std::size_t>(idx)]);
            sample.labels.push_back(ts.labels.empty() ? "" : ts.labels[static_cast<std::size_t>(idx)]);
        }
        SpectralDecomposition dec;
        try {
            const KoopmanModel model = estimate(sample, basis, lag_steps, opts.estimator, opts.eps0);
            dec = spectral_decomposition(model);
        } catch (const std::exception&) {
            res.status[static_cast<std::size_t>(r)] = BootstrapResult::Status::estimation_failed;
            continue;
        }
        bool contractive = true;
        for (int i = 0; i < opts.n_timescales; ++i) {
            const Index idx = i + 1; // skip the stationary eigenvalue
            if (idx >= dec.size() || std::abs(dec.eigenvalues[idx]) >= 1.0) {
                contractive = false;
                break;
            }
        }
        if (!contractive) {
            res.status[static_cast<std::size_t>(r)] = BootstrapResult::Status::non_contractive;
            continue;
        }
        for (int i = 0; i < opts.n_timescales; ++i) {
            const double t = dec.timescales[static_cast<std::size_t>(i + 1)];
            res.samples(r, i) = t;
            res.accepted[static_cast<std::size_t>(i)].push_back(t);
        }
    }
    if (res.n_used() == 0) throw numerical_error("bootstrap: all resamples were rejected");
    return res;
}

BootstrapResult bootstrap_timescales(const TrajectorySet& ts, const BasisSet& basis,
                                     int lag_steps, const BootstrapOptions& opts,
                                     std::uint64_t seed) {
    ts.validate();
    if (ts.trajectories.size() < 2)
        throw data_error("bootstrap: need at least 2 trajectories to resample");
    if (opts.n_boot < 1) throw usage_error("bootstrap: n_boot must be >= 1");
    const auto k = ts.trajectories.size();
    std::vector<std::vector<int>> resamples(static_cast<std::size_t>(opts.n_boot));
    for (int r = 0; r < opts.n_boot; ++r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        auto& idx = resamples[static_cast<std::size_t>(r)];
        idx.reserve(k);
        for (std::size_t j = 0; j < k; ++j)
            idx.push_back(static_cast<int>(rng.uniform_index(k)));
    }
    return bootstrap_timescales_with_indices(ts, basis, lag_steps, opts, resamples);
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw usage_error("percentile: empty sample");
    if (p < 0 || p > 100) throw usage_error("percentile: p out of range");
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

} // namespace koop
