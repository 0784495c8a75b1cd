#pragma once

#include "koop/basis.hpp"
#include "koop/covariance.hpp"
#include "koop/trajectory.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace koop {

// Softened multiwell potential on the line:
// U(x) = sum_i g_i u_i / sum_i g_i with g_i = (|x - c_i| + softening)^-2.
struct Well1dParams {
    std::array<double, 5> centers{-0.3, 0.5, 1.0, 1.5, 2.3};
    std::array<double, 5> depths{5.0, 0.0, 4.0, 0.5, 5.0};
    double softening = 0.001;
};

// value and analytic derivative
std::pair<double, double> potential_well1d(double x, const Well1dParams& params);

// Three-well landscape: two Gaussian hills/holes per axis plus quartic
// confinement; even in x.
std::pair<double, Eigen::Vector2d> potential_triplewell2d(double x, double y);

struct PotentialSpec {
    enum class Kind { well1d, triplewell2d };
    Kind kind = Kind::well1d;
    double beta = 1.0; // inverse temperature
    Well1dParams well1d;

    static PotentialSpec make_well1d(double beta, Well1dParams params = {});
    static PotentialSpec make_triplewell2d(double beta);

    int dim() const { return kind == Kind::well1d ? 1 : 2; }
    double value(const Eigen::Ref<const Vector>& x) const;
    Vector gradient(const Eigen::Ref<const Vector>& x) const;
};

// Nearest-neighbor Metropolis chain on a uniform grid. Detailed balance with
// respect to pi ~ exp(-beta U) holds by construction; rejected proposals stay
// put. Physical time per step is bin^2 * beta / 2, matching the diffusion
// coefficient 1/beta of the target dynamics at leading order.
struct GridChain {
    GridPartition grid;
    Matrix transition; // n x n, row stochastic
    Vector stationary;
    Vector bin_energy; // U at bin centers
    double dt_chain = 0;
    double beta = 0;

    Index n_states() const { return transition.rows(); }
};

GridChain build_grid_chain(const PotentialSpec& pot, const Vector& lo, const Vector& hi,
                           double bin_size);

// n_traj independent realizations of `steps` chain steps each; frames are bin
// centers emitted every sample_interval steps (including step 0). Starting
// bins are uniform over the cells overlapping [init_lo, init_hi].
TrajectorySet simulate_chain(const GridChain& chain, int n_traj, long steps,
                             const Vector& init_lo, const Vector& init_hi, std::uint64_t seed,
                             int sample_interval = 1);

struct ReferenceSpectrum {
    Vector eigenvalues;    // top-k eigenvalues of P^lag, descending
    Matrix eigenfunctions; // n x k, pi-orthonormal
    Vector stationary;
    std::vector<double> timescales;
    double lag_time = 0;
};

// Exact dense eigendecomposition of the symmetrized chain; the oracle for
// every estimator comparison.
ReferenceSpectrum reference_spectrum(const GridChain& chain, int k, int lag_steps);

// Population covariances of a basis under the chain:
// C(0) = sum_i pi_i chi(s_i) chi(s_i)^T, C(tau) = sum_ij pi_i P^tau_ij chi(s_i) chi(s_j)^T.
CovarianceBundle exact_covariances(const GridChain& chain, const BasisSet& basis, int lag_steps);

} // namespace koop
