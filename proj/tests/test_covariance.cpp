#include "koop/covariance.hpp"

#include "koop/errors.hpp"
#include "koop/rng.hpp"

#include <doctest.h>
#include <vector>

using namespace koop;

namespace {

LagPairView make_view(Matrix x, Matrix y, int lag = 1) {
    LagPairView v;
    v.pair_count = x.rows();
    v.lag_steps = lag;
    v.x_raw = x;
    v.y_raw = y;
    v.x = std::move(x);
    v.y = std::move(y);
    return v;
}

const Matrix kX{{1, 0}, {0, 1}, {1, 0}};
const Matrix kY{{0, 1}, {1, 0}, {0, 1}};

} // namespace

TEST_CASE("direct covariances by hand") {
    const CovarianceBundle b = direct_covariances(make_view(kX, kY));
    CHECK(max_abs(b.c0 - Matrix{{2.0 / 3, 0}, {0, 1.0 / 3}}) < 1e-15);
    CHECK(max_abs(b.ct - Matrix{{0, 2.0 / 3}, {1.0 / 3, 0}}) < 1e-15);
    CHECK(b.pair_count == 3);
}

TEST_CASE("direct with x == y gives ct == c0") {
    const CovarianceBundle b = direct_covariances(make_view(kX, kX));
    CHECK(b.ct == b.c0);
}

TEST_CASE("single pair") {
    const CovarianceBundle b = direct_covariances(make_view(Matrix{{1.0}}, Matrix{{2.0}}));
    CHECK(b.c0(0, 0) == 1.0);
    CHECK(b.ct(0, 0) == 2.0);
}

TEST_CASE("symmetrized covariances by hand") {
    const CovarianceBundle b = symmetrized_covariances(make_view(kX, kY));
    CHECK(max_abs(b.ct - Matrix{{0, 0.5}, {0.5, 0}}) < 1e-15);
    CHECK(b.ct == b.ct.transpose());

    // time reversal leaves the bundle unchanged
    const CovarianceBundle rev = symmetrized_covariances(make_view(kY, kX));
    CHECK(b.c0 == rev.c0);
    CHECK(b.ct == rev.ct);

    const CovarianceBundle self = symmetrized_covariances(make_view(kX, kX));
    const CovarianceBundle direct = direct_covariances(make_view(kX, kX));
    CHECK(max_abs(self.c0 - direct.c0) < 1e-15);
    CHECK(max_abs(self.ct - direct.ct) < 1e-15);
}

TEST_CASE("uniform weights reduce to the symmetrized estimator") {
    Rng rng(7);
    Matrix x(40, 3), y(40, 3);
    for (Index r = 0; r < 40; ++r)
        for (Index c = 0; c < 3; ++c) {
            x(r, c) = rng.uniform(-1, 1);
            y(r, c) = rng.uniform(-1, 1);
        }
    const LagPairView v = make_view(x, y);
    const CovarianceBundle sym = symmetrized_covariances(v);
    const CovarianceBundle wtd =
        weighted_reversible_covariances(v, Vector::Constant(40, 1.0 / 40));
    CHECK(max_abs(sym.c0 - wtd.c0) < 1e-12);
    CHECK(max_abs(sym.ct - wtd.ct) < 1e-12);
}

TEST_CASE("weighted reversible two-state worked example") {
    // pairs A->B, B->B, B->A, A->B with weights (1/6, 1/3, 1/3, 1/6)
    Matrix x(4, 2), y(4, 2);
    x << 1, 0, 0, 1, 0, 1, 1, 0;
    y << 0, 1, 0, 1, 1, 0, 0, 1;
    Vector w(4);
    w << 1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6;
    const CovarianceBundle b = weighted_reversible_covariances(make_view(x, y), w);
    CHECK(max_abs(b.c0 - Matrix{{1.0 / 3, 0}, {0, 2.0 / 3}}) < 1e-15);
    CHECK(max_abs(b.ct - Matrix{{0, 1.0 / 3}, {1.0 / 3, 1.0 / 3}}) < 1e-15);
    CHECK(b.ct == b.ct.transpose());
}

TEST_CASE("all weight on one pair gives rank <= 2") {
    Matrix x(3, 3), y(3, 3);
    x << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    y << 9, 8, 7, 6, 5, 4, 3, 2, 1;
    Vector w = Vector::Zero(3);
    w[1] = 1.0;
    const CovarianceBundle b = weighted_reversible_covariances(make_view(x, y), w);
    const Eigen::FullPivLU<Matrix> lu(b.c0);
    CHECK(lu.rank() <= 2);
}

TEST_CASE("weighted estimator validates input") {
    const LagPairView v = make_view(kX, kY);
    Vector bad(3);
    bad << 0.5, 0.5, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(weighted_reversible_covariances(v, bad), numerical_error);
    CHECK_THROWS_AS(weighted_reversible_covariances(v, Vector::Constant(3, 1.0)), usage_error);
    CHECK_THROWS_AS(weighted_reversible_covariances(v, Vector::Constant(2, 0.5)), usage_error);
}

TEST_CASE("direct c0 is positive semidefinite") {
    Rng rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix x(30, 4);
        for (Index r = 0; r < 30; ++r)
            for (Index c = 0; c < 4; ++c) x(r, c) = rng.uniform(-5, 5);
        const CovarianceBundle b = direct_covariances(make_view(x, x));
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(b.c0);
        CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("accumulate equals the single-pass estimate") {
    Rng rng(29);
    Matrix x(50, 3), y(50, 3);
    for (Index r = 0; r < 50; ++r)
        for (Index c = 0; c < 3; ++c) {
            x(r, c) = rng.uniform(-1, 1);
            y(r, c) = rng.uniform(-1, 1);
        }
    const CovarianceBundle whole = direct_covariances(make_view(x, y));
    const CovarianceBundle first = direct_covariances(make_view(x.topRows(20), y.topRows(20)));
    const CovarianceBundle second = direct_covariances(make_view(x.bottomRows(30), y.bottomRows(30)));
    const std::vector<CovarianceBundle> parts{first, second};
    const CovarianceBundle merged = accumulate(parts);
    CHECK(max_abs(merged.c0 - whole.c0) < 1e-12);
    CHECK(max_abs(merged.ct - whole.ct) < 1e-12);
    CHECK(merged.pair_count == 50);

    // order independence
    const std::vector<CovarianceBundle> swapped{second, first};
    const CovarianceBundle merged2 = accumulate(swapped);
    CHECK(max_abs(merged2.c0 - merged.c0) < 1e-12);

    // single bundle is the identity
    const std::vector<CovarianceBundle> one{whole};
    CHECK(max_abs(accumulate(one).c0 - whole.c0) == 0.0);
}

TEST_CASE("accumulate weights bundles by pair count") {
    CovarianceBundle a, b, c;
    for (auto* p : {&a, &b, &c}) {
        p->estimator = CovEstimator::direct;
        p->lag_steps = 1;
    }
    a.c0 = Matrix::Constant(1, 1, 1.0);
    b.c0 = Matrix::Constant(1, 1, 2.0);
    c.c0 = Matrix::Constant(1, 1, 3.0);
    a.ct = a.c0;
    b.ct = b.c0;
    c.ct = c.c0;
    a.pair_count = 1;
    b.pair_count = 2;
    c.pair_count = 3;
    a.mass = 1;
    b.mass = 2;
    c.mass = 3;
    const std::vector<CovarianceBundle> parts{a, b, c};
    const CovarianceBundle merged = accumulate(parts);
    CHECK(merged.c0(0, 0) == doctest::Approx((1 + 4 + 9) / 6.0).epsilon(1e-15));
}

TEST_CASE("accumulate rejects mismatched bundles") {
    CovarianceBundle a, b;
    a.estimator = CovEstimator::direct;
    b.estimator = CovEstimator::symmetrized;
    a.c0 = a.ct = Matrix::Zero(2, 2);
    b.c0 = b.ct = Matrix::Zero(2, 2);
    a.mass = b.mass = 1;
    const std::vector<CovarianceBundle> parts{a, b};
    CHECK_THROWS_AS(accumulate(parts), usage_error);
}
