#pragma once

#include "koop/basis.hpp"
#include "koop/covariance.hpp"
#include "koop/trajectory.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace koop {

enum class Estimator { nonreversible, symmetrized, reversible };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

// Basis set plus matrix approximation of the transfer (Koopman) operator on
// its span. The basis is always a decorrelated composite whose last feature
// is the constant function, so the matrix has eigenvalue 1.
struct KoopmanModel {
    BasisSet basis;         // composite: inner basis + decorrelation transform
    Matrix k;               // model-basis operator matrix
    int lag_steps = 0;
    double dt = 1.0;
    bool reversible = false;
    Estimator estimator = Estimator::nonreversible;
    std::optional<Vector> u;             // reweighting coefficients, model basis
    std::optional<Vector> frame_weights; // per x-frame equilibrium weights, sum 1
    CovarianceBundle inner_cov;          // covariances in the inner basis
    std::shared_ptr<const LagPairView> pairs; // inner-basis features of the data

    double lag_time() const { return lag_steps * dt; }
    int dim() const { return static_cast<int>(k.rows()); }
    const DecorrelationTransform& transform() const { return basis.transform(); }
};

// Equilibrium reweighting vector and derived per-frame weights.
struct WeightVector {
    Vector u;                  // coefficients in the model basis
    Vector w;                  // per x-frame weights, normalized to sum 1
    double eigenvalue_gap = 0; // |lambda_selected - 1|
    double residual = 0;       // ||C(0)^-1 K^T C(0) u - u|| after normalization
    Index negative_count = 0;
    double min_weight = 0;
    double max_weight = 0;
};

KoopmanModel estimate_nonreversible(const TrajectorySet& ts, const BasisSet& basis,
                                    int lag_steps, double eps0 = kDefaultEps0);

KoopmanModel estimate_symmetrized(const TrajectorySet& ts, const BasisSet& basis,
                                  int lag_steps, double eps0 = kDefaultEps0);

KoopmanModel estimate_reversible(const TrajectorySet& ts, const BasisSet& basis,
                                 int lag_steps, double eps0 = kDefaultEps0);

KoopmanModel estimate(const TrajectorySet& ts, const BasisSet& basis, int lag_steps,
                      Estimator estimator, double eps0 = kDefaultEps0);

WeightVector koopman_reweight(const KoopmanModel& model);

struct MsmResult {
    Matrix p;                   // row-stochastic over visited states
    std::vector<Index> visited; // partition cells backing each row/column
    int excluded = 0;
};

// Transition matrix P = C(0)^-1 C(tau) in the indicator representation of a
// model built on an indicator basis; unvisited states are excluded.
MsmResult msm_transition_matrix(const KoopmanModel& model);

// K^steps . coeffs: best-approximation coefficients of the observable
// propagated by `steps` lags. Coefficients live in the model basis.
Vector propagate(const KoopmanModel& model, const Vector& coeffs, long steps);

// Exact when inner_coeffs lies in the span kept by the decorrelation.
Vector to_model_coeffs(const KoopmanModel& model, const Vector& inner_coeffs,
                       double constant_term = 0.0);
std::pair<Vector, double> from_model_coeffs(const KoopmanModel& model, const Vector& coeffs);

// ||C(0)^-1 K^T C(0) u - u|| with the direct-estimate C(0) of the model basis;
// requires the model to carry u.
double fixed_point_residual(const KoopmanModel& model);

double equilibrium_expectation(const Vector& w, const Vector& f_values);
double equilibrium_expectation(const Vector& w, const Vector& f_values, const Vector& g_lagged);

} // namespace koop
