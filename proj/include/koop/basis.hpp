#pragma once

#include "koop/linalg.hpp"

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace koop {

// Uniform rectangular partition of a box. Cells are half-open except at the
// upper domain edge, which is closed so the whole box is covered.
struct GridPartition {
    Vector lo;
    Vector hi;
    std::vector<Index> bins;
    double bin_size = 0;

    static GridPartition uniform(Vector lo, Vector hi, double bin_size);
    // Discrete states 0..n-1 encoded as 1D coordinates.
    static GridPartition discrete_states(Index n_states);

    int dim() const { return static_cast<int>(lo.size()); }
    Index size() const;
    // -1 if the point lies outside the box.
    Index cell_index(const Eigen::Ref<const Vector>& x) const;
    Vector center(Index cell) const;
    Matrix all_centers() const; // size() x dim
};

// Affine map fitted on feature data: x -> [ P (x - mean) ; 1 ], where the
// projection P whitens the kept principal directions (covariance of the
// transformed data is the identity on the data it was fitted on).
struct DecorrelationTransform {
    Vector mean;
    Matrix projection;        // kept_rank x m
    Matrix coeff_projection;  // kept_rank x m, transposed pseudoinverse of projection
    Vector kept_eigenvalues;  // input covariance spectrum kept, descending
    double eps0 = 1e-10;
    bool append_constant = true;
    double min_input_eigenvalue = 0; // smallest eigenvalue seen at fit time

    int input_dim() const { return static_cast<int>(mean.size()); }
    int kept_rank() const { return static_cast<int>(projection.rows()); }
    int output_dim() const { return kept_rank() + (append_constant ? 1 : 0); }

    Matrix apply(const Eigen::Ref<const Matrix>& features) const;

    // Coefficient maps for functions f = c^T chi between the fitted (inner)
    // basis and the whitened block of the output basis.
    Vector coeffs_to_inner(const Eigen::Ref<const Vector>& white) const;
    Vector coeffs_from_inner(const Eigen::Ref<const Vector>& inner) const;
};

// Second-pass correction: given the empirical covariance of the whitened
// block produced by `t` on its fitting data, composes another whitening so
// the final block covariance is the identity to machine accuracy even when
// directions barely above eps0 were kept.
DecorrelationTransform refine_decorrelation(const DecorrelationTransform& t,
                                            const Matrix& whitened_cov);

constexpr double kDefaultEps0 = 1e-10;

// Fits mean/covariance (optionally weighted; weights must sum to 1) and keeps
// eigendirections with eigenvalue > eps0. Directions with eigenvalue <= eps0,
// including negative numerical ones, are dropped.
DecorrelationTransform fit_decorrelation(const Eigen::Ref<const Matrix>& features,
                                         const Vector* weights = nullptr,
                                         double eps0 = kDefaultEps0,
                                         bool append_constant = true);

DecorrelationTransform decorrelation_from_moments(Vector mean, const Matrix& cov,
                                                  double eps0 = kDefaultEps0,
                                                  bool append_constant = true);

inline Matrix apply_decorrelation(const DecorrelationTransform& t,
                                  const Eigen::Ref<const Matrix>& features) {
    return t.apply(features);
}

// Immutable feature map from d input coordinates to m feature values.
class BasisSet {
public:
    enum class Kind { linear, indicator, gaussian, composite };

    // Empty basis; any use other than assignment throws.
    BasisSet() = default;
    bool empty() const { return impl_ == nullptr; }

    // chi(x) = x - mean; plain linear() uses mean = 0.
    static BasisSet linear(int input_dim);
    static BasisSet linear_centered(Vector mean);
    static BasisSet indicator(GridPartition partition);
    // chi_i(x) = exp(-(w_i . x + b_i)^2); weights is m x d.
    static BasisSet gaussian(Matrix weights, Vector offsets);
    static BasisSet composite(BasisSet inner, DecorrelationTransform transform);

    Kind kind() const;
    int input_dim() const;
    int output_dim() const;

    Matrix evaluate(const Eigen::Ref<const Matrix>& frames) const;

    bool is_composite() const { return kind() == Kind::composite; }
    const BasisSet& inner() const;
    const DecorrelationTransform& transform() const;
    const GridPartition& partition() const;
    const Matrix& gaussian_weights() const;
    const Vector& gaussian_offsets() const;
    const Vector& linear_mean() const;

private:
    struct Impl;
    explicit BasisSet(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

// Deterministic for a given seed; parameters drawn uniformly from the given
// ranges, weights first then offset, one function at a time.
BasisSet make_gaussian_basis(int count, int input_dim, std::uint64_t seed,
                             std::pair<double, double> weight_range = {-1.0, 1.0},
                             std::pair<double, double> offset_range = {0.0, 1.0});

} // namespace koop
