#include "koop/basis.hpp"

#include "koop/errors.hpp"
#include "koop/rng.hpp"
#include "koop/text.hpp"

#include <cmath>
#include <variant>

namespace koop {

// ---------------------------------------------------------------- partition

GridPartition GridPartition::uniform(Vector lo, Vector hi, double bin_size) {
    if (lo.size() != hi.size() || lo.size() == 0)
        throw usage_error("partition: lo/hi dimension mismatch");
    if (!(bin_size > 0)) throw usage_error("partition: bin size must be positive");
    GridPartition p;
    p.lo = std::move(lo);
    p.hi = std::move(hi);
    p.bin_size = bin_size;
    for (int a = 0; a < p.dim(); ++a) {
        const double extent = p.hi[a] - p.lo[a];
        if (!(extent > 0)) throw usage_error("partition: domain extent must be positive");
        const double n_real = extent / bin_size;
        const auto n = static_cast<Index>(std::llround(n_real));
        if (n < 1 || std::abs(n_real - static_cast<double>(n)) > 1e-9 * std::max(1.0, n_real))
            throw usage_error("partition: bin size " + format_double(bin_size) +
                              " does not divide domain extent " + format_double(extent));
        p.bins.push_back(n);
    }
    return p;
}

GridPartition GridPartition::discrete_states(Index n_states) {
    if (n_states < 1) throw usage_error("partition: need at least one state");
    GridPartition p;
    p.lo = Vector::Constant(1, -0.5);
    p.hi = Vector::Constant(1, static_cast<double>(n_states) - 0.5);
    p.bin_size = 1.0;
    p.bins = {n_states};
    return p;
}

Index GridPartition::size() const {
    Index n = 1;
    for (Index b : bins) n *= b;
    return n;
}

Index GridPartition::cell_index(const Eigen::Ref<const Vector>& x) const {
    Index idx = 0;
    for (int a = 0; a < dim(); ++a) {
        if (x[a] < lo[a] || x[a] > hi[a]) return -1;
        auto k = static_cast<Index>(std::floor((x[a] - lo[a]) / bin_size));
        if (k == bins[static_cast<std::size_t>(a)]) --k; // closed upper edge
        if (k < 0 || k >= bins[static_cast<std::size_t>(a)]) return -1;
        idx = idx * bins[static_cast<std::size_t>(a)] + k;
    }
    return idx;
}

Vector GridPartition::center(Index cell) const {
    Vector c(dim());
    for (int a = dim() - 1; a >= 0; --a) {
        const Index n = bins[static_cast<std::size_t>(a)];
        const Index k = cell % n;
        cell /= n;
        c[a] = lo[a] + (static_cast<double>(k) + 0.5) * bin_size;
    }
    return c;
}

Matrix GridPartition::all_centers() const {
    Matrix c(size(), dim());
    for (Index i = 0; i < size(); ++i) c.row(i) = center(i).transpose();
    return c;
}

// ------------------------------------------------------------ decorrelation

Matrix DecorrelationTransform::apply(const Eigen::Ref<const Matrix>& features) const {
    if (features.cols() != input_dim())
        throw data_error("decorrelation: feature dimension mismatch");
    Matrix out(features.rows(), output_dim());
    if (kept_rank() > 0)
        out.leftCols(kept_rank()).noalias() =
            (features.rowwise() - mean.transpose()) * projection.transpose();
    if (append_constant) out.col(output_dim() - 1).setOnes();
    return out;
}

Vector DecorrelationTransform::coeffs_to_inner(const Eigen::Ref<const Vector>& white) const {
    return projection.transpose() * white;
}

Vector DecorrelationTransform::coeffs_from_inner(const Eigen::Ref<const Vector>& inner) const {
    return coeff_projection * inner;
}

DecorrelationTransform decorrelation_from_moments(Vector mean, const Matrix& cov, double eps0,
                                                  bool append_constant) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
        throw usage_error("decorrelation: moment shape mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(cov));
    if (eig.info() != Eigen::Success)
        throw numerical_error("decorrelation: eigendecomposition failed");
    const Vector& values = eig.eigenvalues(); // ascending
    const Index m = values.size();
    Index kept = 0;
    for (Index i = 0; i < m; ++i)
        if (values[i] > eps0) ++kept;
    if (kept == 0 && !append_constant) throw numerical_error("basis degenerate");

    DecorrelationTransform t;
    t.mean = std::move(mean);
    t.eps0 = eps0;
    t.append_constant = append_constant;
    t.min_input_eigenvalue = m > 0 ? values[0] : 0.0;
    t.kept_eigenvalues.resize(kept);
    t.projection.resize(kept, m);
    // order kept directions by descending eigenvalue
    for (Index r = 0; r < kept; ++r) {
        const Index src = m - 1 - r;
        t.kept_eigenvalues[r] = values[src];
        t.projection.row(r) = eig.eigenvectors().col(src).transpose() / std::sqrt(values[src]);
    }
    t.coeff_projection = t.kept_eigenvalues.asDiagonal() * t.projection;
    return t;
}

DecorrelationTransform refine_decorrelation(const DecorrelationTransform& t,
                                            const Matrix& whitened_cov) {
    const Index d = t.kept_rank();
    if (whitened_cov.rows() != d || whitened_cov.cols() != d)
        throw usage_error("decorrelation: refinement shape mismatch");
    if (d == 0) return t;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(whitened_cov));
    if (eig.info() != Eigen::Success)
        throw numerical_error("decorrelation: refinement eigendecomposition failed");
    const Vector& values = eig.eigenvalues();
    Index kept = 0;
    for (Index i = 0; i < d; ++i)
        if (values[i] > t.eps0) ++kept;
    if (kept == 0 && !t.append_constant) throw numerical_error("basis degenerate");

    Matrix correction(kept, d);
    for (Index r = 0; r < kept; ++r) {
        const Index src = d - 1 - r;
        correction.row(r) = eig.eigenvectors().col(src).transpose() / std::sqrt(values[src]);
    }
    DecorrelationTransform out = t;
    out.projection = correction * t.projection;
    out.kept_eigenvalues = t.kept_eigenvalues.head(kept);
    const Matrix gram = out.projection * out.projection.transpose();
    out.coeff_projection = gram.ldlt().solve(out.projection);
    return out;
}

DecorrelationTransform fit_decorrelation(const Eigen::Ref<const Matrix>& features,
                                         const Vector* weights, double eps0,
                                         bool append_constant) {
    const Index n = features.rows();
    if (n < 2) throw data_error("decorrelation: need at least 2 samples");
    Vector mean;
    Matrix cov;
    if (weights) {
        if (weights->size() != n) throw usage_error("decorrelation: weight length mismatch");
        if (!weights->allFinite()) throw numerical_error("decorrelation: non-finite weight");
        mean = features.transpose() * (*weights);
        cov = features.transpose() * weights->asDiagonal() * features;
    } else {
        mean = features.colwise().mean();
        cov = features.transpose() * features / static_cast<double>(n);
    }
    cov -= mean * mean.transpose();
    DecorrelationTransform t = decorrelation_from_moments(std::move(mean), cov, eps0, append_constant);

    // second pass over the data pins the whitened covariance to the identity
    if (t.kept_rank() > 0) {
        const Matrix white =
            (features.rowwise() - t.mean.transpose()) * t.projection.transpose();
        Vector wmean;
        Matrix wcov;
        if (weights) {
            wmean = white.transpose() * (*weights);
            wcov = white.transpose() * weights->asDiagonal() * white;
        } else {
            wmean = white.colwise().mean();
            wcov = white.transpose() * white / static_cast<double>(n);
        }
        wcov -= wmean * wmean.transpose();
        t = refine_decorrelation(t, wcov);
    }
    return t;
}

// -------------------------------------------------------------------- basis

struct LinearBasis {
    Vector mean;
};
struct IndicatorBasis {
    GridPartition partition;
};
struct GaussianBasis {
    Matrix weights; // m x d
    Vector offsets; // m
};
struct CompositeBasis {
    BasisSet inner;
    DecorrelationTransform transform;
};

struct BasisSet::Impl {
    std::variant<LinearBasis, IndicatorBasis, GaussianBasis, CompositeBasis> body;
};

BasisSet BasisSet::linear(int input_dim) {
    if (input_dim < 1) throw usage_error("linear basis: dimension must be >= 1");
    return linear_centered(Vector::Zero(input_dim));
}

BasisSet BasisSet::linear_centered(Vector mean) {
    if (mean.size() < 1) throw usage_error("linear basis: dimension must be >= 1");
    return BasisSet(std::make_shared<Impl>(Impl{LinearBasis{std::move(mean)}}));
}

BasisSet BasisSet::indicator(GridPartition partition) {
    return BasisSet(std::make_shared<Impl>(Impl{IndicatorBasis{std::move(partition)}}));
}

BasisSet BasisSet::gaussian(Matrix weights, Vector offsets) {
    if (weights.rows() != offsets.size() || weights.rows() < 1)
        throw usage_error("gaussian basis: weight/offset shape mismatch");
    return BasisSet(std::make_shared<Impl>(Impl{GaussianBasis{std::move(weights), std::move(offsets)}}));
}

BasisSet BasisSet::composite(BasisSet inner, DecorrelationTransform transform) {
    if (transform.input_dim() != inner.output_dim())
        throw usage_error("composite basis: transform dimension mismatch");
    return BasisSet(std::make_shared<Impl>(Impl{CompositeBasis{std::move(inner), std::move(transform)}}));
}

BasisSet::Kind BasisSet::kind() const {
    if (!impl_) throw usage_error("basis: empty basis set");
    switch (impl_->body.index()) {
        case 0: return Kind::linear;
        case 1: return Kind::indicator;
        case 2: return Kind::gaussian;
        default: return Kind::composite;
    }
}

int BasisSet::input_dim() const {
    if (!impl_) throw usage_error("basis: empty basis set");
    if (auto* l = std::get_if<LinearBasis>(&impl_->body)) return static_cast<int>(l->mean.size());
    if (auto* i = std::get_if<IndicatorBasis>(&impl_->body)) return i->partition.dim();
    if (auto* g = std::get_if<GaussianBasis>(&impl_->body)) return static_cast<int>(g->weights.cols());
    return std::get<CompositeBasis>(impl_->body).inner.input_dim();
}

int BasisSet::output_dim() const {
    if (!impl_) throw usage_error("basis: empty basis set");
    if (auto* l = std::get_if<LinearBasis>(&impl_->body)) return static_cast<int>(l->mean.size());
    if (auto* i = std::get_if<IndicatorBasis>(&impl_->body)) return static_cast<int>(i->partition.size());
    if (auto* g = std::get_if<GaussianBasis>(&impl_->body)) return static_cast<int>(g->weights.rows());
    return std::get<CompositeBasis>(impl_->body).transform.output_dim();
}

Matrix BasisSet::evaluate(const Eigen::Ref<const Matrix>& frames) const {
    if (!impl_) throw usage_error("basis: empty basis set");
    if (frames.cols() != input_dim())
        throw data_error("basis: frame dimension " + std::to_string(frames.cols()) +
                         " does not match basis input dimension " + std::to_string(input_dim()));
    if (auto* l = std::get_if<LinearBasis>(&impl_->body))
        return frames.rowwise() - l->mean.transpose();
    if (auto* ind = std::get_if<IndicatorBasis>(&impl_->body)) {
        Matrix out = Matrix::Zero(frames.rows(), ind->partition.size());
        for (Index r = 0; r < frames.rows(); ++r) {
            const Index cell = ind->partition.cell_index(frames.row(r).transpose());
            if (cell < 0)
                throw data_error("indicator basis: frame " + std::to_string(r) +
                                 " lies outside the partition domain");
            out(r, cell) = 1.0;
        }
        return out;
    }
    if (auto* g = std::get_if<GaussianBasis>(&impl_->body)) {
        Matrix arg = frames * g->weights.transpose();
        arg.rowwise() += g->offsets.transpose();
        return (-arg.array().square()).exp().matrix();
    }
    const auto& c = std::get<CompositeBasis>(impl_->body);
    return c.transform.apply(c.inner.evaluate(frames));
}

const BasisSet& BasisSet::inner() const {
    if (impl_)
        if (auto* c = std::get_if<CompositeBasis>(&impl_->body)) return c->inner;
    throw usage_error("basis: not a composite basis");
}

const DecorrelationTransform& BasisSet::transform() const {
    if (impl_)
        if (auto* c = std::get_if<CompositeBasis>(&impl_->body)) return c->transform;
    throw usage_error("basis: not a composite basis");
}

const GridPartition& BasisSet::partition() const {
    if (auto* i = std::get_if<IndicatorBasis>(&impl_->body)) return i->partition;
    throw usage_error("basis: not an indicator basis");
}

const Matrix& BasisSet::gaussian_weights() const {
    if (auto* g = std::get_if<GaussianBasis>(&impl_->body)) return g->weights;
    throw usage_error("basis: not a gaussian basis");
}

const Vector& BasisSet::gaussian_offsets() const {
    if (auto* g = std::get_if<GaussianBasis>(&impl_->body)) return g->offsets;
    throw usage_error("basis: not a gaussian basis");
}

const Vector& BasisSet::linear_mean() const {
    if (auto* l = std::get_if<LinearBasis>(&impl_->body)) return l->mean;
    throw usage_error("basis: not a linear basis");
}

BasisSet make_gaussian_basis(int count, int input_dim, std::uint64_t seed,
                             std::pair<double, double> weight_range,
                             std::pair<double, double> offset_range) {
    if (count < 1) throw usage_error("gaussian basis: count must be >= 1");
    if (input_dim < 1) throw usage_error("gaussian basis: input dimension must be >= 1");
    Rng rng(seed);
    Matrix weights(count, input_dim);
    Vector offsets(count);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < input_dim; ++j)
            weights(i, j) = rng.uniform(weight_range.first, weight_range.second);
        offsets[i] = rng.uniform(offset_range.first, offset_range.second);
    }
    return BasisSet::gaussian(std::move(weights), std::move(offsets));
}

} // namespace koop
