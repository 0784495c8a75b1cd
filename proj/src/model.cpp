#include "koop/model.hpp"

#include "koop/errors.hpp"
#include "koop/text.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace koop {

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::nonreversible: return "nonreversible";
        case Estimator::symmetrized: return "symmetrized";
        case Estimator::reversible: return "reversible";
    }
    return "?";
}

Estimator parse_estimator(const std::string& name) {
    if (name == "nonreversible") return Estimator::nonreversible;
    if (name == "symmetrized") return Estimator::symmetrized;
    if (name == "reversible") return Estimator::reversible;
    throw usage_error("unknown estimator '" + name +
                      "' (expected nonreversible, symmetrized or reversible)");
}

namespace {

constexpr Index kChunk = 8192;

// X^T diag(w) Y accumulated in fixed row-block order.
Matrix weighted_product(const Matrix& x, const Matrix& y, const Vector& w) {
    Matrix acc = Matrix::Zero(x.cols(), y.cols());
    for (Index at = 0; at < x.rows(); at += kChunk) {
        const Index n = std::min(kChunk, x.rows() - at);
        acc.noalias() += x.middleRows(at, n).transpose() *
                         (w.segment(at, n).asDiagonal() * y.middleRows(at, n));
    }
    return acc;
}

// Decorrelation fitted on the x frames, refined so the whitened block of the
// transformed x data has covariance exactly I.
DecorrelationTransform direct_decorrelation(const LagPairView& p, double eps0) {
    const double n = static_cast<double>(p.pair_count);
    const Vector mean = p.x.colwise().mean();
    const Matrix cov = symmetrized(p.x.transpose() * p.x / n) - mean * mean.transpose();
    DecorrelationTransform tf = decorrelation_from_moments(mean, cov, eps0);
    if (tf.kept_rank() > 0) {
        const Matrix white = (p.x.rowwise() - tf.mean.transpose()) * tf.projection.transpose();
        const Vector wmean = white.colwise().mean();
        const Matrix wcov =
            symmetrized(white.transpose() * white / n) - wmean * wmean.transpose();
        tf = refine_decorrelation(tf, wcov);
    }
    return tf;
}

struct ReweightSolution {
    Vector u; // model basis, normalized so the frame weights sum to 1
    Vector w;
    double gap = 0;
    double residual = 0;
};

// Solves M u = u for the eigenvalue nearest 1 (M = C(0)^-1 K^T C(0) in the
// model basis), then normalizes against the transformed x frames.
ReweightSolution solve_reweighting(const Matrix& m_op, const Matrix& x_model) {
    Eigen::EigenSolver<Matrix> eig(m_op);
    if (eig.info() != Eigen::Success) throw numerical_error("reweighting: eigensolver failed");
    const auto& values = eig.eigenvalues();
    Index best = 0;
    double best_gap = std::abs(values[0] - std::complex<double>(1.0));
    for (Index i = 1; i < values.size(); ++i) {
        const double gap = std::abs(values[i] - std::complex<double>(1.0));
        if (gap < best_gap) {
            best = i;
            best_gap = gap;
        }
    }
    if (best_gap > 1e-6)
        throw numerical_error("reweighting: no eigenvalue near 1 (nearest is " +
                              format_double(best_gap) + " away); basis lacks the constant");
    Eigen::VectorXcd vec = eig.eigenvectors().col(best);
    Index peak = 0;
    vec.cwiseAbs().maxCoeff(&peak);
    const std::complex<double> z = vec[peak];
    if (std::abs(z) == 0) throw numerical_error("reweighting: null eigenvector");
    vec *= std::conj(z) / std::abs(z);
    const double imag_mag = vec.imag().cwiseAbs().maxCoeff();
    if (imag_mag > 1e-8 * vec.real().cwiseAbs().maxCoeff())
        throw numerical_error("reweighting: eigenvector near 1 is complex (max imaginary part " +
                              format_double(imag_mag) + "); eigenvalue gap " +
                              format_double(best_gap));
    ReweightSolution sol;
    sol.u = vec.real();
    sol.gap = best_gap;
    sol.w.noalias() = x_model * sol.u;
    for (int pass = 0; pass < 3; ++pass) {
        const double s = sol.w.sum();
        if (!std::isfinite(s) || std::abs(s) < 1e-300)
            throw numerical_error("reweighting: weight normalization failed (sum " +
                                  format_double(s) + ")");
        if (std::abs(s - 1.0) <= 1e-14) break;
        sol.w /= s;
        sol.u /= s;
    }
    sol.residual = (m_op * sol.u - sol.u).norm();
    return sol;
}

} // namespace

KoopmanModel estimate_nonreversible(const TrajectorySet& ts, const BasisSet& basis,
                                    int lag_steps, double eps0) {
    auto pairs = std::make_shared<LagPairView>(lag_pairs(ts, basis, lag_steps));
    const LagPairView& p = *pairs;
    const double n = static_cast<double>(p.pair_count);

    CovarianceBundle direct;
    direct.estimator = CovEstimator::direct;
    direct.pair_count = p.pair_count;
    direct.lag_steps = lag_steps;
    direct.mass = n;
    direct.c0 = symmetrized(p.x.transpose() * p.x / n);
    direct.ct.noalias() = p.x.transpose() * p.y / n;

    DecorrelationTransform tf = direct_decorrelation(p, eps0);
    const Matrix x_model = tf.apply(p.x);
    const Matrix y_model = tf.apply(p.y);

    KoopmanModel model;
    model.k.noalias() = x_model.transpose() * y_model / n;
    model.basis = BasisSet::composite(basis, std::move(tf));
    model.lag_steps = lag_steps;
    model.dt = ts.dt;
    model.reversible = false;
    model.estimator = Estimator::nonreversible;
    model.inner_cov = std::move(direct);
    model.pairs = std::move(pairs);
    return model;
}

KoopmanModel estimate_symmetrized(const TrajectorySet& ts, const BasisSet& basis, int lag_steps,
                                  double eps0) {
    auto pairs = std::make_shared<LagPairView>(lag_pairs(ts, basis, lag_steps));
    const LagPairView& p = *pairs;
    const double n = static_cast<double>(p.pair_count);

    CovarianceBundle sym;
    sym.estimator = CovEstimator::symmetrized;
    sym.pair_count = p.pair_count;
    sym.lag_steps = lag_steps;
    sym.mass = n;
    sym.c0 = 0.5 * (symmetrized(p.x.transpose() * p.x) + symmetrized(p.y.transpose() * p.y)) / n;
    sym.ct = symmetrized(p.x.transpose() * p.y) / n;

    const Vector mean = 0.5 * (p.x.colwise().mean() + p.y.colwise().mean()).transpose();
    DecorrelationTransform tf =
        decorrelation_from_moments(mean, sym.c0 - mean * mean.transpose(), eps0);
    if (tf.kept_rank() > 0) {
        Matrix xw = (p.x.rowwise() - tf.mean.transpose()) * tf.projection.transpose();
        Matrix yw = (p.y.rowwise() - tf.mean.transpose()) * tf.projection.transpose();
        const Vector wmean = 0.5 * (xw.colwise().mean() + yw.colwise().mean()).transpose();
        const Matrix wcov =
            0.5 * (symmetrized(xw.transpose() * xw) + symmetrized(yw.transpose() * yw)) / n -
            wmean * wmean.transpose();
        tf = refine_decorrelation(tf, wcov);
    }
    const Matrix x_model = tf.apply(p.x);
    const Matrix y_model = tf.apply(p.y);
    const Matrix half = x_model.transpose() * y_model / (2.0 * n);

    KoopmanModel model;
    model.k = half + half.transpose();
    model.basis = BasisSet::composite(basis, std::move(tf));
    model.lag_steps = lag_steps;
    model.dt = ts.dt;
    model.reversible = true;
    model.estimator = Estimator::symmetrized;
    model.inner_cov = std::move(sym);
    model.pairs = std::move(pairs);
    return model;
}

KoopmanModel estimate_reversible(const TrajectorySet& ts, const BasisSet& basis, int lag_steps,
                                 double eps0) {
    auto pairs = std::make_shared<LagPairView>(lag_pairs(ts, basis, lag_steps));
    const LagPairView& p = *pairs;
    const double n = static_cast<double>(p.pair_count);

    CovarianceBundle direct;
    direct.estimator = CovEstimator::direct;
    direct.pair_count = p.pair_count;
    direct.lag_steps = lag_steps;
    direct.mass = n;
    direct.c0 = symmetrized(p.x.transpose() * p.x / n);
    direct.ct.noalias() = p.x.transpose() * p.y / n;

    // stage 1: nonreversible model in the direct-decorrelated basis
    const DecorrelationTransform tf1 = direct_decorrelation(p, eps0);
    ReweightSolution rw;
    {
        const Matrix x1 = tf1.apply(p.x);
        Matrix k1;
        {
            const Matrix y1 = tf1.apply(p.y);
            k1.noalias() = x1.transpose() * y1 / n;
        }
        rw = solve_reweighting(k1.transpose(), x1);
    }
    const Vector& w = rw.w;

    // stage 2: equilibrium moments of the inner features under the weights
    const Vector a_x = p.x.transpose() * w;
    const Vector a_y = p.y.transpose() * w;
    const Matrix m_xx = symmetrized(weighted_product(p.x, p.x, w));
    const Matrix m_yy = symmetrized(weighted_product(p.y, p.y, w));
    const Matrix m_xy = weighted_product(p.x, p.y, w);

    CovarianceBundle rev;
    rev.estimator = CovEstimator::weighted_reversible;
    rev.pair_count = p.pair_count;
    rev.lag_steps = lag_steps;
    rev.mass = 1.0;
    rev.negative_weights = (w.array() < 0.0).count();
    rev.c0 = 0.5 * (m_xx + m_yy);
    rev.ct = symmetrized(m_xy);
    rev.weights_id = "koopman_reweighting";

    const Vector pi_eq = 0.5 * (a_x + a_y);
    const Matrix cov_eq = rev.c0 - pi_eq * pi_eq.transpose();
    DecorrelationTransform tf2 = decorrelation_from_moments(pi_eq, cov_eq, eps0);
    const double scale = tf2.kept_rank() > 0 ? tf2.kept_eigenvalues[0] : 1.0;
    if (tf2.min_input_eigenvalue < -std::max(eps0, 1e-8 * scale))
        throw numerical_error(
            "reversible estimation: weighted covariance is not positive semidefinite "
            "(smallest eigenvalue " +
            format_double(tf2.min_input_eigenvalue) + ", " +
            std::to_string(rev.negative_weights) + " negative frame weights)");
    if (tf2.kept_rank() > 0) {
        Matrix xw = (p.x.rowwise() - tf2.mean.transpose()) * tf2.projection.transpose();
        Matrix yw = (p.y.rowwise() - tf2.mean.transpose()) * tf2.projection.transpose();
        const Vector wmean = 0.5 * (xw.transpose() * w + yw.transpose() * w);
        const Matrix wcov = 0.5 * (symmetrized(weighted_product(xw, xw, w)) +
                                   symmetrized(weighted_product(yw, yw, w))) -
                            wmean * wmean.transpose();
        tf2 = refine_decorrelation(tf2, wcov);
    }

    const Matrix x_model = tf2.apply(p.x);
    const Matrix y_model = tf2.apply(p.y);
    const Matrix half = 0.5 * weighted_product(x_model, y_model, w);

    // re-express the weight function in the equilibrium basis; least squares
    // recovers it exactly when it lies in the span
    const Matrix c0_model = symmetrized(x_model.transpose() * x_model / n);
    Vector u2 = c0_model.ldlt().solve(x_model.transpose() * w / n);

    KoopmanModel model;
    model.k = half + half.transpose();
    model.basis = BasisSet::composite(basis, std::move(tf2));
    model.lag_steps = lag_steps;
    model.dt = ts.dt;
    model.reversible = true;
    model.estimator = Estimator::reversible;
    model.u = std::move(u2);
    model.frame_weights = w;
    model.inner_cov = std::move(rev);
    model.pairs = std::move(pairs);
    return model;
}

KoopmanModel estimate(const TrajectorySet& ts, const BasisSet& basis, int lag_steps,
                      Estimator estimator, double eps0) {
    switch (estimator) {
        case Estimator::nonreversible: return estimate_nonreversible(ts, basis, lag_steps, eps0);
        case Estimator::symmetrized: return estimate_symmetrized(ts, basis, lag_steps, eps0);
        case Estimator::reversible: return estimate_reversible(ts, basis, lag_steps, eps0);
    }
    throw usage_error("unknown estimator");
}

WeightVector koopman_reweight(const KoopmanModel& model) {
    if (!model.pairs) throw usage_error("reweighting: model carries no data");
    const LagPairView& p = *model.pairs;
    const Matrix x_model = model.transform().apply(p.x);
    Matrix m_op;
    if (model.estimator == Estimator::nonreversible) {
        m_op = model.k.transpose(); // direct C(0) is the identity in this basis
    } else {
        const Matrix c0 =
            symmetrized(x_model.transpose() * x_model / static_cast<double>(p.pair_count));
        m_op = c0.ldlt().solve(model.k.transpose() * c0);
    }
    const ReweightSolution sol = solve_reweighting(m_op, x_model);
    WeightVector wv;
    wv.u = sol.u;
    wv.w = sol.w;
    wv.eigenvalue_gap = sol.gap;
    wv.residual = sol.residual;
    wv.negative_count = (wv.w.array() < 0.0).count();
    wv.min_weight = wv.w.minCoeff();
    wv.max_weight = wv.w.maxCoeff();
    return wv;
}

MsmResult msm_transition_matrix(const KoopmanModel& model) {
    const BasisSet& inner = model.basis.is_composite() ? model.basis.inner() : model.basis;
    if (inner.kind() != BasisSet::Kind::indicator)
        throw usage_error("msm_transition_matrix: model was not built on an indicator basis");
    const CovarianceBundle& cov = model.inner_cov;
    MsmResult res;
    for (Index i = 0; i < cov.dim(); ++i)
        if (cov.c0(i, i) > 0) res.visited.push_back(i);
    res.excluded = static_cast<int>(cov.dim() - static_cast<Index>(res.visited.size()));
    const auto nv = static_cast<Index>(res.visited.size());
    if (nv == 0) throw data_error("msm_transition_matrix: no visited states");
    res.p.resize(nv, nv);
    for (Index r = 0; r < nv; ++r)
        for (Index c = 0; c < nv; ++c)
            res.p(r, c) = cov.ct(res.visited[static_cast<std::size_t>(r)],
                                 res.visited[static_cast<std::size_t>(c)]) /
                          cov.c0(res.visited[static_cast<std::size_t>(r)],
                                 res.visited[static_cast<std::size_t>(r)]);
    return res;
}

Vector propagate(const KoopmanModel& model, const Vector& coeffs, long steps) {
    if (steps < 0) throw usage_error("propagate: steps must be >= 0");
    if (coeffs.size() != model.dim()) throw usage_error("propagate: coefficient size mismatch");
    Vector out = coeffs;
    Matrix base = model.k;
    long n = steps;
    while (n > 0) {
        if (n & 1) out = base * out;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return out;
}

Vector to_model_coeffs(const KoopmanModel& model, const Vector& inner_coeffs,
                       double constant_term) {
    const DecorrelationTransform& tf = model.transform();
    if (inner_coeffs.size() != tf.input_dim())
        throw usage_error("to_model_coeffs: coefficient size mismatch");
    Vector out(tf.output_dim());
    out.head(tf.kept_rank()) = tf.coeffs_from_inner(inner_coeffs);
    out[tf.kept_rank()] = constant_term + tf.mean.dot(inner_coeffs);
    return out;
}

std::pair<Vector, double> from_model_coeffs(const KoopmanModel& model, const Vector& coeffs) {
    const DecorrelationTransform& tf = model.transform();
    if (coeffs.size() != tf.output_dim())
        throw usage_error("from_model_coeffs: coefficient size mismatch");
    Vector inner = tf.coeffs_to_inner(coeffs.head(tf.kept_rank()));
    const double constant = coeffs[tf.kept_rank()] - tf.mean.dot(inner);
    return {std::move(inner), constant};
}

double fixed_point_residual(const KoopmanModel& model) {
    if (!model.u) throw usage_error("fixed_point_residual: model carries no reweighting vector");
    if (!model.pairs) throw usage_error("fixed_point_residual: model carries no data");
    const LagPairView& p = *model.pairs;
    const Matrix x_model = model.transform().apply(p.x);
    const Matrix c0 =
        symmetrized(x_model.transpose() * x_model / static_cast<double>(p.pair_count));
    const Vector& u = *model.u;
    const Vector lhs = c0.ldlt().solve(model.k.transpose() * (c0 * u));
    return (lhs - u).norm();
}

double equilibrium_expectation(const Vector& w, const Vector& f_values) {
    if (w.size() != f_values.size()) throw usage_error("expectation: length mismatch");
    return w.dot(f_values);
}

double equilibrium_expectation(const Vector& w, const Vector& f_values, const Vector& g_lagged) {
    if (w.size() != f_values.size() || w.size() != g_lagged.size())
        throw usage_error("expectation: length mismatch");
    return w.dot(f_values.cwiseProduct(g_lagged));
}

} // namespace koop
