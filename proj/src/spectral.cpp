#include "koop/spectral.hpp"

#include "koop/errors.hpp"
#include "koop/text.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace koop {

Vector SpectralDecomposition::real_eigenvalues() const {
    if (!reversible) throw usage_error("spectral: complex eigenvalues, use .eigenvalues");
    return eigenvalues.real();
}

Matrix SpectralDecomposition::real_coeffs() const {
    if (!reversible) throw usage_error("spectral: complex coefficients, use .coeffs");
    return coeffs.real();
}

Vector SpectralDecomposition::real_offsets() const {
    if (!reversible) throw usage_error("spectral: complex offsets, use .offsets");
    return offsets.real();
}

ImpliedTimescales implied_timescales(const Eigen::VectorXcd& eigenvalues, double lag_time) {
    if (!(lag_time > 0)) throw usage_error("implied timescales: lag time must be positive");
    ImpliedTimescales out;
    out.values.reserve(static_cast<std::size_t>(eigenvalues.size()));
    out.non_contractive.assign(static_cast<std::size_t>(eigenvalues.size()), false);
    for (Index i = 0; i < eigenvalues.size(); ++i) {
        const double mod = std::abs(eigenvalues[i]);
        if (mod >= 1.0) {
            out.values.push_back(std::numeric_limits<double>::infinity());
            if (i > 0) out.non_contractive[static_cast<std::size_t>(i)] = true;
        } else if (mod == 0.0) {
            out.values.push_back(0.0);
        } else {
            out.values.push_back(-lag_time / std::log(mod));
        }
    }
    return out;
}

std::vector<double> implied_timescales(const SpectralDecomposition& dec, double lag_time) {
    return implied_timescales(dec.eigenvalues, lag_time).values;
}

namespace {

std::vector<Index> spectral_order(const Eigen::VectorXcd& values) {
    std::vector<Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        const double ma = std::abs(values[a]);
        const double mb = std::abs(values[b]);
        // moduli equal up to roundoff count as ties
        if (std::abs(ma - mb) > 1e-12 * std::max(1.0, std::max(ma, mb))) return ma > mb;
        if (values[a].real() != values[b].real()) return values[a].real() > values[b].real();
        return a < b;
    });
    return order;
}

// The basis contains the constant, so 1 is an exact eigenvalue in exact
// arithmetic; snap the leading computed value onto it.
void snap_stationary(Eigen::VectorXcd& sorted_values) {
    if (sorted_values.size() > 0 && std::abs(sorted_values[0] - 1.0) <= 1e-12)
        sorted_values[0] = 1.0;
}

} // namespace

SpectralDecomposition spectral_decomposition(const KoopmanModel& model) {
    if (!model.k.allFinite()) throw numerical_error("spectral: model matrix is not finite");
    const DecorrelationTransform& tf = model.transform();
    const Index d = tf.kept_rank();
    const Index m = model.dim();

    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;
    if (model.reversible) {
        const double asym = max_abs(model.k - model.k.transpose());
        if (asym > 1e-9 * (1.0 + max_abs(model.k)))
            throw numerical_error("spectral: reversible model matrix is not symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(model.k));
        if (eig.info() != Eigen::Success) throw numerical_error("spectral: eigensolver failed");
        values = eig.eigenvalues().cast<std::complex<double>>();
        vectors = eig.eigenvectors().cast<std::complex<double>>();
    } else {
        Eigen::EigenSolver<Matrix> eig(model.k);
        if (eig.info() != Eigen::Success) throw numerical_error("spectral: eigensolver failed");
        values = eig.eigenvalues();
        vectors = eig.eigenvectors();
    }

    const std::vector<Index> order = spectral_order(values);
    SpectralDecomposition dec;
    dec.reversible = model.reversible;
    dec.lag_time = model.lag_time();
    dec.eigenvalues.resize(m);
    dec.coeffs.resize(tf.input_dim(), m);
    dec.offsets.resize(m);

    const bool fold_constant =
        model.basis.is_composite() && model.basis.inner().kind() == BasisSet::Kind::indicator;

    for (Index i = 0; i < m; ++i) {
        const Index src = order[static_cast<std::size_t>(i)];
        dec.eigenvalues[i] = values[src];
        // map through the decorrelation into the inner basis
        Eigen::VectorXcd inner =
            tf.projection.transpose().cast<std::complex<double>>() * vectors.col(src).head(d);
        std::complex<double> offset =
            vectors(d, src) - tf.mean.cast<std::complex<double>>().dot(inner);
        if (fold_constant) {
            // indicator bases sum to one, so the offset folds into the coefficients
            inner.array() += offset;
            offset = 0.0;
        }
        // sign/phase convention: largest-magnitude coefficient is positive real
        Index peak = 0;
        double peak_mag = std::abs(offset);
        for (Index r = 0; r < inner.size(); ++r) {
            if (std::abs(inner[r]) > peak_mag) {
                peak_mag = std::abs(inner[r]);
                peak = r + 1;
            }
        }
        const std::complex<double> z = peak == 0 ? offset : inner[peak - 1];
        if (std::abs(z) > 0) {
            const std::complex<double> phase = std::conj(z) / std::abs(z);
            inner *= phase;
            offset *= phase;
        }
        dec.coeffs.col(i) = inner;
        dec.offsets[i] = offset;
    }

    snap_stationary(dec.eigenvalues);

    if (model.reversible) {
        const double imag_mag =
            std::max({dec.eigenvalues.imag().cwiseAbs().maxCoeff(),
                      dec.coeffs.imag().cwiseAbs().maxCoeff(),
                      dec.offsets.imag().cwiseAbs().maxCoeff()});
        if (imag_mag > 1e-10)
            throw numerical_error("spectral: reversible decomposition has imaginary residue " +
                                  format_double(imag_mag));
        dec.eigenvalues.imag().setZero();
        dec.coeffs.imag().setZero();
        dec.offsets.imag().setZero();
    }

    const ImpliedTimescales its = implied_timescales(dec.eigenvalues, dec.lag_time);
    dec.timescales = its.values;
    dec.non_contractive = its.non_contractive;
    return dec;
}

double rayleigh_trace(const SpectralDecomposition& dec, int m) {
    if (!dec.reversible)
        throw usage_error("rayleigh_trace: defined for reversible-source models only");
    if (m < 1 || m > dec.size()) throw usage_error("rayleigh_trace: m out of range");
    double sum = 0;
    for (Index i = 0; i < m; ++i) sum += dec.eigenvalues[i].real();
    return sum;
}

Vector generalized_eigenvalues(const Matrix& c0, const Matrix& ct, double eps0) {
    if (c0.rows() != c0.cols() || ct.rows() != ct.cols() || c0.rows() != ct.rows())
        throw usage_error("generalized_eigenvalues: shape mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(c0));
    if (eig.info() != Eigen::Success)
        throw numerical_error("generalized_eigenvalues: whitening failed");
    const Vector& s = eig.eigenvalues();
    Index kept = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s[i] > eps0) ++kept;
    if (kept == 0) throw numerical_error("generalized_eigenvalues: C(0) is numerically zero");
    Matrix white(kept, c0.rows());
    for (Index r = 0; r < kept; ++r) {
        const Index src = s.size() - 1 - r;
        white.row(r) = eig.eigenvectors().col(src).transpose() / std::sqrt(s[src]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> projected(
        symmetrized(white * symmetrized(ct) * white.transpose()));
    if (projected.info() != Eigen::Success)
        throw numerical_error("generalized_eigenvalues: projected solve failed");
    return projected.eigenvalues().reverse();
}

} // namespace koop
