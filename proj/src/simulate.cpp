#include "koop/simulate.hpp"

#include "koop/errors.hpp"
#include "koop/rng.hpp"
#include "koop/spectral.hpp"
#include "koop/text.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace koop {

std::pair<double, double> potential_well1d(double x, const Well1dParams& p) {
    if (!(p.softening > 0)) throw usage_error("well1d: softening must be positive");
    double num = 0, den = 0, dnum = 0, dden = 0;
    for (std::size_t i = 0; i < p.centers.size(); ++i) {
        const double delta = x - p.centers[i];
        const double sign = delta > 0 ? 1.0 : (delta < 0 ? -1.0 : 0.0);
        const double r = std::abs(delta) + p.softening;
        const double g = 1.0 / (r * r);
        const double dg = -2.0 * sign / (r * r * r);
        num += g * p.depths[i];
        den += g;
        dnum += dg * p.depths[i];
        dden += dg;
    }
    const double u = num / den;
    const double du = (dnum * den - num * dden) / (den * den);
    return {u, du};
}

std::pair<double, Eigen::Vector2d> potential_triplewell2d(double x, double y) {
    const double e1 = 3.0 * std::exp(-x * x - (y - 1.0 / 3.0) * (y - 1.0 / 3.0));
    const double e2 = -3.0 * std::exp(-x * x - (y - 5.0 / 3.0) * (y - 5.0 / 3.0));
    const double e3 = -5.0 * std::exp(-(x - 1.0) * (x - 1.0) - y * y);
    const double e4 = -5.0 * std::exp(-(x + 1.0) * (x + 1.0) - y * y);
    const double q = 0.2 * std::pow(x, 4) + 0.2 * std::pow(y - 1.0 / 3.0, 4);
    const double u = e1 + e2 + e3 + e4 + q;
    Eigen::Vector2d grad;
    grad[0] = -2.0 * x * e1 - 2.0 * x * e2 - 2.0 * (x - 1.0) * e3 - 2.0 * (x + 1.0) * e4 +
              0.8 * std::pow(x, 3);
    grad[1] = -2.0 * (y - 1.0 / 3.0) * e1 - 2.0 * (y - 5.0 / 3.0) * e2 - 2.0 * y * e3 -
              2.0 * y * e4 + 0.8 * std::pow(y - 1.0 / 3.0, 3);
    return {u, grad};
}

PotentialSpec PotentialSpec::make_well1d(double beta, Well1dParams params) {
    if (!(beta > 0)) throw usage_error("potential: beta must be positive");
    PotentialSpec s;
    s.kind = Kind::well1d;
    s.beta = beta;
    s.well1d = params;
    return s;
}

PotentialSpec PotentialSpec::make_triplewell2d(double beta) {
    if (!(beta > 0)) throw usage_error("potential: beta must be positive");
    PotentialSpec s;
    s.kind = Kind::triplewell2d;
    s.beta = beta;
    return s;
}

double PotentialSpec::value(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim()) throw usage_error("potential: dimension mismatch");
    if (kind == Kind::well1d) return potential_well1d(x[0], well1d).first;
    return potential_triplewell2d(x[0], x[1]).first;
}

Vector PotentialSpec::gradient(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim()) throw usage_error("potential: dimension mismatch");
    if (kind == Kind::well1d) {
        Vector g(1);
        g[0] = potential_well1d(x[0], well1d).second;
        return g;
    }
    return potential_triplewell2d(x[0], x[1]).second;
}

GridChain build_grid_chain(const PotentialSpec& pot, const Vector& lo, const Vector& hi,
                           double bin_size) {
    if (lo.size() != pot.dim() || hi.size() != pot.dim())
        throw usage_error("grid chain: domain dimension mismatch");
    GridChain chain;
    chain.grid = GridPartition::uniform(lo, hi, bin_size);
    for (Index b : chain.grid.bins)
        if (b < 2) throw usage_error("grid chain: domain too small (< 2 bins per axis)");
    chain.beta = pot.beta;
    chain.dt_chain = bin_size * bin_size * pot.beta / 2.0;

    const Index n = chain.grid.size();
    const int d = chain.grid.dim();
    chain.bin_energy.resize(n);
    for (Index i = 0; i < n; ++i) chain.bin_energy[i] = pot.value(chain.grid.center(i));

    // Nearest-neighbor Metropolis proposals; each of the 2d moves has
    // probability 1/(2d), off-grid moves are rejected in place.
    chain.transition = Matrix::Zero(n, n);
    const double prop = 1.0 / (2.0 * d);
    std::vector<Index> strides(static_cast<std::size_t>(d), 1);
    for (int a = d - 2; a >= 0; --a)
        strides[static_cast<std::size_t>(a)] =
            strides[static_cast<std::size_t>(a + 1)] * chain.grid.bins[static_cast<std::size_t>(a + 1)];
    for (Index i = 0; i < n; ++i) {
        double stay = 1.0;
        Index rem = i;
        std::vector<Index> coord(static_cast<std::size_t>(d));
        for (int a = d - 1; a >= 0; --a) {
            coord[static_cast<std::size_t>(a)] = rem % chain.grid.bins[static_cast<std::size_t>(a)];
            rem /= chain.grid.bins[static_cast<std::size_t>(a)];
        }
        for (int a = 0; a < d; ++a) {
            for (int dir = -1; dir <= 1; dir += 2) {
                const Index k = coord[static_cast<std::size_t>(a)] + dir;
                if (k < 0 || k >= chain.grid.bins[static_cast<std::size_t>(a)]) continue;
                const Index j = i + dir * strides[static_cast<std::size_t>(a)];
                const double acc =
                    std::min(1.0, std::exp(-pot.beta * (chain.bin_energy[j] - chain.bin_energy[i])));
                chain.transition(i, j) = prop * acc;
                stay -= prop * acc;
            }
        }
        chain.transition(i, i) = stay;
    }

    const double u_min = chain.bin_energy.minCoeff();
    chain.stationary = (-pot.beta * (chain.bin_energy.array() - u_min)).exp();
    chain.stationary /= chain.stationary.sum();

    // construction-time sanity: rows stochastic, detailed balance
    for (Index i = 0; i < n; ++i) {
        if (std::abs(chain.transition.row(i).sum() - 1.0) > 1e-12)
            throw numerical_error("grid chain: row " + std::to_string(i) + " does not sum to 1");
    }
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            const double fwd = chain.stationary[i] * chain.transition(i, j);
            const double bwd = chain.stationary[j] * chain.transition(j, i);
            if (std::abs(fwd - bwd) > 1e-12 * std::max(1.0, std::max(fwd, bwd)))
                throw numerical_error("grid chain: detailed balance violated at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        }
    return chain;
}

TrajectorySet simulate_chain(const GridChain& chain, int n_traj, long steps,
                             const Vector& init_lo, const Vector& init_hi, std::uint64_t seed,
                             int sample_interval) {
    if (n_traj < 1) throw usage_error("simulate: need at least one trajectory");
    if (steps < 0) throw usage_error("simulate: steps must be >= 0");
    if (sample_interval < 1) throw usage_error("simulate: sample interval must be >= 1");
    const int d = chain.grid.dim();
    if (init_lo.size() != d || init_hi.size() != d)
        throw usage_error("simulate: init region dimension mismatch");

    // bins whose cell overlaps the init region with positive measure
    std::vector<Index> init_bins;
    for (Index i = 0; i < chain.n_states(); ++i) {
        const Vector c = chain.grid.center(i);
        bool inside = true;
        for (int a = 0; a < d; ++a) {
            const double cell_lo = c[a] - 0.5 * chain.grid.bin_size;
            const double cell_hi = c[a] + 0.5 * chain.grid.bin_size;
            if (std::max(cell_lo, init_lo[a]) >= std::min(cell_hi, init_hi[a])) {
                inside = false;
                break;
            }
        }
        if (inside) init_bins.push_back(i);
    }
    if (init_bins.empty()) throw data_error("simulate: init region contains no grid cells");

    std::vector<Index> strides(static_cast<std::size_t>(d), 1);
    for (int a = d - 2; a >= 0; --a)
        strides[static_cast<std::size_t>(a)] =
            strides[static_cast<std::size_t>(a + 1)] * chain.grid.bins[static_cast<std::size_t>(a + 1)];

    TrajectorySet ts;
    ts.dt = chain.dt_chain * sample_interval;
    const long n_frames = steps / sample_interval + 1;
    for (int k = 0; k < n_traj; ++k) {
        Rng rng(seed, static_cast<std::uint64_t>(k));
        Index state = init_bins[rng.uniform_index(init_bins.size())];
        Matrix traj(n_frames, d);
        traj.row(0) = chain.grid.center(state).transpose();
        long emitted = 1;
        for (long s = 1; s <= steps; ++s) {
            // one Metropolis move, consistent with chain.transition by construction
            const auto move = rng.uniform_index(static_cast<std::uint64_t>(2 * d));
            const int axis = static_cast<int>(move / 2);
            const int dir = (move % 2 == 0) ? -1 : 1;
            const Index k_axis =
                (state / strides[static_cast<std::size_t>(axis)]) % chain.grid.bins[static_cast<std::size_t>(axis)];
            const Index k_new = k_axis + dir;
            const double accept_draw = rng.uniform();
            if (k_new >= 0 && k_new < chain.grid.bins[static_cast<std::size_t>(axis)]) {
                const Index proposal = state + dir * strides[static_cast<std::size_t>(axis)];
                const double acc = std::exp(
                    -chain.beta * (chain.bin_energy[proposal] - chain.bin_energy[state]));
                if (accept_draw < acc) state = proposal;
            }
            if (s % sample_interval == 0) {
                traj.row(emitted) = chain.grid.center(state).transpose();
                ++emitted;
            }
        }
        ts.trajectories.push_back(std::move(traj));
        ts.labels.push_back("chain[" + std::to_string(k) + "]");
    }
    return ts;
}

namespace {

struct ChainEigen {
    Vector values;  // eigenvalues of P, descending
    Matrix vectors; // orthonormal eigenvectors of D^1/2 P D^-1/2, columns match values
};

ChainEigen chain_eigendecomposition(const GridChain& chain) {
    const Vector half = chain.stationary.cwiseSqrt();
    const Matrix sym = symmetrized(half.asDiagonal() * chain.transition *
                                   half.cwiseInverse().asDiagonal());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) throw numerical_error("chain: eigendecomposition failed");
    ChainEigen out;
    out.values = eig.eigenvalues().reverse();
    out.vectors = eig.eigenvectors().rowwise().reverse();
    return out;
}

} // namespace

ReferenceSpectrum reference_spectrum(const GridChain& chain, int k, int lag_steps) {
    if (k < 1 || k > chain.n_states()) throw usage_error("reference spectrum: k out of range");
    if (lag_steps < 1) throw usage_error("reference spectrum: lag must be >= 1");
    const ChainEigen eig = chain_eigendecomposition(chain);
    ReferenceSpectrum ref;
    ref.stationary = chain.stationary;
    ref.lag_time = lag_steps * chain.dt_chain;
    ref.eigenvalues.resize(k);
    ref.eigenfunctions.resize(chain.n_states(), k);
    const Vector inv_half = chain.stationary.cwiseSqrt().cwiseInverse();
    for (int i = 0; i < k; ++i) {
        // the stationary eigenvalue is exactly 1; keep it that way
        const double base = (i == 0 && std::abs(eig.values[0] - 1.0) <= 1e-12) ? 1.0 : eig.values[i];
        ref.eigenvalues[i] = std::pow(base, lag_steps);
        Vector psi = inv_half.asDiagonal() * eig.vectors.col(i);
        Index peak = 0;
        psi.cwiseAbs().maxCoeff(&peak);
        if (psi[peak] < 0) psi = -psi;
        ref.eigenfunctions.col(i) = psi;
    }
    const Eigen::VectorXcd complex_values = ref.eigenvalues.cast<std::complex<double>>();
    ref.timescales = implied_timescales(complex_values, ref.lag_time).values;
    return ref;
}

CovarianceBundle exact_covariances(const GridChain& chain, const BasisSet& basis, int lag_steps) {
    if (lag_steps < 1) throw usage_error("exact covariances: lag must be >= 1");
    const Matrix features = basis.evaluate(chain.grid.all_centers());
    const ChainEigen eig = chain_eigendecomposition(chain);
    // G = V^T D^1/2 F makes both moments manifestly symmetric: C0 = G^T G,
    // Ct = G^T Lambda^tau G.
    const Matrix g = eig.vectors.transpose() *
                     (chain.stationary.cwiseSqrt().asDiagonal() * features);
    Vector lam(chain.n_states());
    for (Index i = 0; i < lam.size(); ++i) lam[i] = std::pow(eig.values[i], lag_steps);
    CovarianceBundle b;
    b.estimator = CovEstimator::exact_equilibrium;
    b.pair_count = 0;
    b.lag_steps = lag_steps;
    b.mass = 1.0;
    b.c0 = symmetrized(g.transpose() * g);
    b.ct = symmetrized(g.transpose() * lam.asDiagonal() * g);
    return b;
}

} // namespace koop
