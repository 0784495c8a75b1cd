#include "koop/spectral.hpp"

#include "koop/errors.hpp"
#include "koop/model.hpp"

#include <doctest.h>
#include <cmath>

using namespace koop;

namespace {

// hand-built model with an identity transform over `m` inner features
KoopmanModel identity_model(const Matrix& k, bool reversible) {
    const Index m = k.rows() - 1;
    DecorrelationTransform tf;
    tf.mean = Vector::Zero(m);
    tf.projection = Matrix::Identity(m, m);
    tf.kept_eigenvalues = Vector::Ones(m);
    KoopmanModel model;
    model.basis = BasisSet::composite(BasisSet::linear(static_cast<int>(m)), tf);
    model.k = k;
    model.lag_steps = 1;
    model.dt = 1.0;
    model.reversible = reversible;
    model.estimator = reversible ? Estimator::reversible : Estimator::nonreversible;
    return model;
}

TrajectorySet discrete_trajectory(const std::vector<int>& states) {
    TrajectorySet ts;
    Matrix t(static_cast<Index>(states.size()), 1);
    for (std::size_t i = 0; i < states.size(); ++i)
        t(static_cast<Index>(i), 0) = static_cast<double>(states[i]);
    ts.trajectories.push_back(std::move(t));
    return ts;
}

} // namespace

TEST_CASE("identity operator has all eigenvalues 1") {
    const KoopmanModel model = identity_model(Matrix::Identity(4, 4), true);
    const SpectralDecomposition dec = spectral_decomposition(model);
    for (Index i = 0; i < dec.size(); ++i) CHECK(std::abs(dec.eigenvalues[i] - 1.0) < 1e-14);
    for (double t : dec.timescales) CHECK(std::isinf(t));
    CHECK(rayleigh_trace(dec, 2) == doctest::Approx(2.0));
}

TEST_CASE("flip chain spectrum and eigenfunction") {
    std::vector<int> states;
    for (int i = 0; i < 40; ++i) states.push_back(i % 2);
    const KoopmanModel model = estimate_nonreversible(
        discrete_trajectory(states), BasisSet::indicator(GridPartition::discrete_states(2)), 1);
    const SpectralDecomposition dec = spectral_decomposition(model);
    REQUIRE(dec.size() == 2);
    CHECK(std::abs(dec.eigenvalues[0] - 1.0) < 1e-12);
    CHECK(std::abs(dec.eigenvalues[1] + 1.0) < 1e-12);
    // second eigenfunction is 1_A - 1_B up to scale; sign convention puts the
    // largest coefficient positive
    const double ca = dec.coeffs(0, 1).real();
    const double cb = dec.coeffs(1, 1).real();
    CHECK(ca > 0);
    CHECK(std::abs(ca + cb) < 1e-10);
    CHECK(std::abs(dec.offsets[1]) < 1e-12);
}

TEST_CASE("two-state chain with eigenvalues 1 and -1/2") {
    const KoopmanModel model = estimate_nonreversible(
        discrete_trajectory({0, 1, 1, 0, 1}), BasisSet::indicator(GridPartition::discrete_states(2)), 1);
    const SpectralDecomposition dec = spectral_decomposition(model);
    CHECK(std::abs(dec.eigenvalues[0] - 1.0) < 1e-12);
    CHECK(std::abs(dec.eigenvalues[1] + 0.5) < 1e-12);
}

TEST_CASE("implied timescale formula") {
    Eigen::VectorXcd values(4);
    values << 1.0, std::exp(-1.0), 0.5, 0.0;

    const ImpliedTimescales at_unit = implied_timescales(values, 1.0);
    CHECK(std::isinf(at_unit.values[0]));
    CHECK(at_unit.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(at_unit.values[3] == 0.0);

    const ImpliedTimescales at_centi = implied_timescales(values, 0.01);
    CHECK(at_centi.values[2] == doctest::Approx(0.01 / std::log(2.0)).epsilon(1e-9));
    CHECK(at_centi.values[2] == doctest::Approx(0.0144270).epsilon(1e-5));

    CHECK_THROWS_AS(implied_timescales(values, 0.0), usage_error);
}

TEST_CASE("non-contractive eigenvalues are flagged, stationary one is not") {
    Eigen::VectorXcd values(3);
    values << 1.0, 1.02, 0.9;
    const ImpliedTimescales its = implied_timescales(values, 1.0);
    CHECK(std::isinf(its.values[0]));
    CHECK_FALSE(its.non_contractive[0]);
    CHECK(std::isinf(its.values[1]));
    CHECK(its.non_contractive[1]);
    CHECK_FALSE(its.non_contractive[2]);
}

TEST_CASE("complex eigenvalues use the modulus") {
    Eigen::VectorXcd values(2);
    values << 1.0, std::complex<double>(0.3, 0.4); // modulus 0.5
    const ImpliedTimescales its = implied_timescales(values, 1.0);
    CHECK(its.values[1] == doctest::Approx(-1.0 / std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("rayleigh trace") {
    const KoopmanModel model = estimate_reversible(
        discrete_trajectory({0, 1, 1, 0, 1}), BasisSet::indicator(GridPartition::discrete_states(2)), 1);
    const SpectralDecomposition dec = spectral_decomposition(model);
    CHECK(rayleigh_trace(dec, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rayleigh_trace(dec, 2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(rayleigh_trace(dec, 3), usage_error);

    const KoopmanModel nonrev = estimate_nonreversible(
        discrete_trajectory({0, 1, 1, 0, 1}), BasisSet::indicator(GridPartition::discrete_states(2)), 1);
    const SpectralDecomposition cdec = spectral_decomposition(nonrev);
    CHECK_THROWS_AS(rayleigh_trace(cdec, 1), usage_error);
}

TEST_CASE("sorting is by modulus with deterministic tie-breaks") {
    Matrix k = Matrix::Zero(3, 3);
    k(0, 0) = -1.0;
    k(1, 1) = 1.0;
    k(2, 2) = 1.0; // plays the constant
    const KoopmanModel model = identity_model(k, true);
    const SpectralDecomposition dec = spectral_decomposition(model);
    CHECK(dec.eigenvalues[0].real() == 1.0);
    CHECK(dec.eigenvalues[1].real() == 1.0);
    CHECK(dec.eigenvalues[2].real() == -1.0);
}

TEST_CASE("nonreversible decompositions may carry complex pairs") {
    // 3-state rotation has eigenvalues 1, exp(+-2 pi i / 3)
    Matrix k = Matrix::Zero(4, 4);
    k(0, 1) = 1;
    k(1, 2) = 1;
    k(2, 0) = 1;
    k(3, 3) = 1;
    const KoopmanModel model = identity_model(k, false);
    const SpectralDecomposition dec = spectral_decomposition(model);
    int complex_count = 0;
    for (Index i = 0; i < dec.size(); ++i)
        if (std::abs(dec.eigenvalues[i].imag()) > 1e-12) ++complex_count;
    CHECK(complex_count == 2);
    CHECK_THROWS_AS(dec.real_eigenvalues(), usage_error);
}

TEST_CASE("generalized eigenvalues with whitening cutoff") {
    Matrix c0 = Matrix::Identity(2, 2);
    Matrix ct = Matrix::Zero(2, 2);
    ct(0, 0) = 0.9;
    ct(1, 1) = 0.5;
    const Vector vals = generalized_eigenvalues(c0, ct);
    CHECK(vals[0] == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(vals[1] == doctest::Approx(0.5).epsilon(1e-14));

    // a null direction in C(0) is dropped rather than inverted
    Matrix c0_rank1 = Matrix::Zero(2, 2);
    c0_rank1(0, 0) = 1.0;
    Matrix ct_mixed = Matrix::Zero(2, 2);
    ct_mixed(0, 0) = 0.5;
    ct_mixed(1, 1) = 7.0;
    const Vector ritz = generalized_eigenvalues(c0_rank1, ct_mixed);
    REQUIRE(ritz.size() == 1);
    CHECK(ritz[0] == doctest::Approx(0.5).epsilon(1e-14));
}
