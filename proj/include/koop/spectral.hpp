#pragma once

#include "koop/model.hpp"

#include <complex>
#include <vector>

namespace koop {

// Eigenpairs of a Koopman model sorted by descending modulus; ties broken by
// descending real part, then original index. Eigenfunctions are expressed as
// coefficients over the model's inner basis plus a constant offset:
// psi_i(x) = coeffs(:,i)^T chi(x) + offsets(i).
struct SpectralDecomposition {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd coeffs;  // inner-basis coefficients, m x k
    Eigen::VectorXcd offsets; // k
    std::vector<double> timescales;
    std::vector<bool> non_contractive; // |lambda| >= 1 for a non-stationary index
    double lag_time = 0;
    bool reversible = false;

    Index size() const { return eigenvalues.size(); }
    Vector real_eigenvalues() const;
    Matrix real_coeffs() const;
    Vector real_offsets() const;
};

SpectralDecomposition spectral_decomposition(const KoopmanModel& model);

struct ImpliedTimescales {
    std::vector<double> values;
    std::vector<bool> non_contractive;
};

// t_i = -tau / ln |lambda_i|. The stationary eigenvalue maps to infinity; a
// non-stationary eigenvalue with |lambda| >= 1 also reports infinity but is
// flagged non-contractive. |lambda| = 0 maps to 0.
ImpliedTimescales implied_timescales(const Eigen::VectorXcd& eigenvalues, double lag_time);
std::vector<double> implied_timescales(const SpectralDecomposition& dec, double lag_time);

// Sum of the m largest eigenvalues; defined for reversible-source models only.
double rayleigh_trace(const SpectralDecomposition& dec, int m);

// Ritz values of C(tau) b = lambda C(0) b, via whitening C(0) with cutoff
// eps0; descending. Both matrices must be symmetric.
Vector generalized_eigenvalues(const Matrix& c0, const Matrix& ct, double eps0 = kDefaultEps0);

} // namespace koop
