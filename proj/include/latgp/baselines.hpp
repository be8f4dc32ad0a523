#pragma once

#include <Eigen/Dense>

#include "latgp/error.hpp"
#include "latgp/features.hpp"

namespace latgp {

/// Ordinary least squares with intercept. Weights are stored in raw
/// feature units; `stats` records the standardization used while solving.
struct LinearModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    FeatureStats stats;
    // True when the normal equations were rank deficient and a ridge term was added.
    bool ridge = false;
};

inline LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() < 1) throw DataError("linear regression needs at least one sample");
    if (y.size() != x.rows()) throw DataError("target count does not match feature rows");
    constexpr double kRidge = 1e-8;

    LinearModel m;
    m.stats = FeatureStats::compute(x);
    // Centred columns decouple the intercept from the weights.
    const Eigen::MatrixXd xs = m.stats.apply(x);
    const double y_mean = y.mean();
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd gram = xs.transpose() * xs;
    const Eigen::VectorXd rhs = xs.transpose() * yc;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const auto d = ldlt.vectorD().cwiseAbs();
    const bool deficient = ldlt.info() != Eigen::Success || !ldlt.isPositive() || d.size() == 0 ||
                           d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff());
    if (deficient) {
        gram.diagonal().array() += kRidge;
        ldlt.compute(gram);
        m.ridge = true;
    }
    const Eigen::VectorXd ws = x.cols() > 0 ? Eigen::VectorXd(ldlt.solve(rhs)) : Eigen::VectorXd();

    m.weights = ws.array() / m.stats.stddev.array();
    m.intercept = y_mean - m.weights.dot(m.stats.mean);
    if (!m.weights.allFinite() || !std::isfinite(m.intercept)) {
        throw NumericalError("linear regression produced non-finite coefficients");
    }
    return m;
}

inline Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& x) {
    if (x.cols() != model.weights.size()) throw DataError("feature dimension mismatch");
    return (x * model.weights).array() + model.intercept;
}

}  // namespace latgp
