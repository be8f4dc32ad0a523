#pragma once

// Exact Gaussian-process regression with a pluggable prior mean.
//
// With the analytic mean the GP only has to learn the residual between the
// measured latency and the closed-form estimate; away from the training data
// the prediction falls back to the closed-form estimate itself.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "latgp/analytic_model.hpp"
#include "latgp/error.hpp"
#include "latgp/features.hpp"
#include "latgp/kernels.hpp"

namespace latgp {

enum class MeanKind { Zero, Analytic };

/// Where the analytic mean gets each row's layer position from.
enum class PositionSource { PerSample, Fixed };

struct MeanFunctionSpec {
    MeanKind kind = MeanKind::Zero;
    PositionSource position_source = PositionSource::PerSample;
    LayerPosition fixed_position = LayerPosition::Middle;

    friend bool operator==(const MeanFunctionSpec&, const MeanFunctionSpec&) = default;

    static MeanFunctionSpec zero() { return {}; }
    static MeanFunctionSpec analytic() { return {.kind = MeanKind::Analytic}; }
    static MeanFunctionSpec analytic_at(LayerPosition p) {
        return {.kind = MeanKind::Analytic, .position_source = PositionSource::Fixed, .fixed_position = p};
    }
};

/// Evaluates the prior mean on raw feature rows. `positions` is consulted only
/// by an analytic mean that reads positions per sample.
inline Eigen::VectorXd evaluate_mean(const MeanFunctionSpec& mean, const Eigen::MatrixXd& x_raw,
                                     std::span<const LayerPosition> positions) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(x_raw.rows());
    if (mean.kind == MeanKind::Zero) return m;
    const bool per_sample = mean.position_source == PositionSource::PerSample;
    if (per_sample && positions.size() != static_cast<std::size_t>(x_raw.rows())) {
        throw DataError("analytic mean needs one layer position per row");
    }
    for (Eigen::Index i = 0; i < x_raw.rows(); ++i) {
        const auto row = x_raw.row(i);
        const LayerPosition pos = per_sample ? positions[static_cast<std::size_t>(i)] : mean.fixed_position;
        m(i) = layer_breakdown(layer_from_features(row), hardware_from_features(row), pos).t_layer;
    }
    return m;
}

/// Transform applied to raw features before standardization. Layer shapes
/// span several orders of magnitude, so the kernel compares them on a log
/// scale by default.
enum class FeatureScaling { Log, Identity };

inline std::string_view to_string(FeatureScaling s) { return s == FeatureScaling::Log ? "log" : "identity"; }

inline FeatureScaling parse_feature_scaling(std::string_view s) {
    if (s == "log") return FeatureScaling::Log;
    if (s == "identity") return FeatureScaling::Identity;
    throw DataError("unknown feature scaling '" + std::string(s) + "'");
}

inline Eigen::MatrixXd scale_features(FeatureScaling scaling, const Eigen::MatrixXd& x_raw) {
    if (scaling == FeatureScaling::Identity) return x_raw;
    if (x_raw.size() > 0 && !(x_raw.array() > 0.0).all()) {
        throw DataError("log feature scaling needs strictly positive features");
    }
    return x_raw.array().log().matrix();
}

struct FitOptions {
    FeatureScaling scaling = FeatureScaling::Log;
    // Standardize (scaled) features before the kernel sees them.
    bool standardize = true;
    // Use these statistics instead of computing them from the training rows.
    std::optional<FeatureStats> stats;
};

struct Prediction {
    double mean = 0.0;      // ms
    double variance = 0.0;  // ms^2
    bool clamped = false;   // variance was negative from cancellation and set to 0
};

class GpModel;
GpModel fit(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y, const KernelSpec& kernel,
            const MeanFunctionSpec& mean, double noise_variance, std::span<const LayerPosition> positions = {},
            const FitOptions& options = {});

/// A fitted posterior. Immutable; safe to share across threads.
class GpModel {
public:
    const KernelSpec& kernel() const { return kernel_; }
    const MeanFunctionSpec& mean() const { return mean_; }
    double noise_variance() const { return noise_; }
    FeatureScaling scaling() const { return scaling_; }
    bool standardized() const { return standardize_; }
    const FeatureStats& stats() const { return stats_; }
    const Eigen::MatrixXd& train_raw_features() const { return x_raw_; }
    const Eigen::VectorXd& train_targets() const { return y_; }
    const std::vector<LayerPosition>& train_positions() const { return positions_; }
    const Eigen::VectorXd& residuals() const { return residuals_; }
    const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    // Kernel inputs: scaled then standardized training features.
    const Eigen::MatrixXd& train_features() const { return x_std_; }
    // Diagonal jitter added on top of the noise variance to factorize.
    double jitter() const { return jitter_; }
    Eigen::Index size() const { return x_raw_.rows(); }
    Eigen::Index dims() const { return x_raw_.cols(); }

private:
    friend GpModel fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const KernelSpec&,
                       const MeanFunctionSpec&, double, std::span<const LayerPosition>, const FitOptions&);
    GpModel() = default;

    KernelSpec kernel_;
    MeanFunctionSpec mean_;
    double noise_ = 0.0;
    FeatureScaling scaling_ = FeatureScaling::Log;
    bool standardize_ = true;
    FeatureStats stats_;
    Eigen::MatrixXd x_raw_;
    Eigen::MatrixXd x_std_;
    Eigen::VectorXd y_;
    std::vector<LayerPosition> positions_;
    Eigen::VectorXd residuals_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

namespace detail {

struct Factorization {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};

// Cholesky of `k`, escalating diagonal jitter from 1e-10 to 1e-4 of the
// largest diagonal entry (doubling) when the plain factorization fails.
inline Factorization factorize(const Eigen::MatrixXd& k) {
    if (!k.allFinite()) throw NumericalError("kernel matrix has non-finite entries");
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};
    const double max_diag = k.rows() > 0 ? k.diagonal().cwiseAbs().maxCoeff() : 1.0;
    for (double jitter = 1e-10 * max_diag; jitter <= 1e-4 * max_diag; jitter *= 2.0) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
    }
    throw NumericalError("kernel matrix not positive definite");
}

}  // namespace detail

inline GpModel fit(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y, const KernelSpec& kernel,
                   const MeanFunctionSpec& mean, double noise_variance, std::span<const LayerPosition> positions,
                   const FitOptions& options) {
    validate(kernel);
    if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
        throw DataError("noise variance must be positive");
    }
    if (y.size() != x_raw.rows()) throw DataError("target count does not match feature rows");
    if (!x_raw.allFinite() || !y.allFinite()) throw DataError("training data contains non-finite values");
    if (!positions.empty() && positions.size() != static_cast<std::size_t>(x_raw.rows())) {
        throw DataError("position count does not match feature rows");
    }

    GpModel m;
    m.kernel_ = kernel;
    m.mean_ = mean;
    m.noise_ = noise_variance;
    m.scaling_ = options.scaling;
    m.standardize_ = options.standardize;
    const Eigen::MatrixXd x_scaled = scale_features(options.scaling, x_raw);
    if (options.stats) {
        if (options.stats->mean.size() != x_raw.cols() || options.stats->stddev.size() != x_raw.cols()) {
            throw DataError("standardization statistics do not match feature dimension");
        }
        m.stats_ = *options.stats;
    } else {
        m.stats_ = options.standardize ? FeatureStats::compute(x_scaled) : FeatureStats::identity(x_raw.cols());
    }
    m.x_raw_ = x_raw;
    m.x_std_ = m.stats_.apply(x_scaled);
    m.y_ = y;
    m.positions_.assign(positions.begin(), positions.end());
    m.residuals_ = y - evaluate_mean(mean, x_raw, positions);

    Eigen::MatrixXd k = kernel_matrix(kernel, m.x_std_);
    k.diagonal().array() += noise_variance;
    auto fac = detail::factorize(k);
    m.chol_ = std::move(fac.lower);
    m.jitter_ = fac.jitter;
    const Eigen::MatrixXd& chol = m.chol_;
    m.alpha_ = chol.triangularView<Eigen::Lower>().solve(m.residuals_);
    chol.triangularView<Eigen::Lower>().transpose().solveInPlace(m.alpha_);
    return m;
}

/// Posterior mean and variance of the latent latency at each test row.
inline std::vector<Prediction> predict(const GpModel& model, const Eigen::MatrixXd& x_test_raw,
                                       std::span<const LayerPosition> positions = {}) {
    if (x_test_raw.cols() != model.dims()) throw DataError("feature dimension mismatch");
    const Eigen::MatrixXd x_test = model.stats().apply(scale_features(model.scaling(), x_test_raw));
    const Eigen::VectorXd prior = evaluate_mean(model.mean(), x_test_raw, positions);

    std::vector<Prediction> out(static_cast<std::size_t>(x_test.rows()));
    if (model.size() == 0) {
        for (Eigen::Index i = 0; i < x_test.rows(); ++i) {
            out[static_cast<std::size_t>(i)] = {prior(i), kernel_eval(model.kernel(), x_test.row(i), x_test.row(i))};
        }
        return out;
    }
    const Eigen::MatrixXd cross = kernel_matrix(model.kernel(), x_test, model.train_features());  // Q x P
    const Eigen::VectorXd mean = prior + cross * model.alpha();
    const Eigen::MatrixXd v = model.cholesky_factor().triangularView<Eigen::Lower>().solve(cross.transpose());
    for (Eigen::Index i = 0; i < x_test.rows(); ++i) {
        Prediction& p = out[static_cast<std::size_t>(i)];
        p.mean = mean(i);
        p.variance = kernel_eval(model.kernel(), x_test.row(i), x_test.row(i)) - v.col(i).squaredNorm();
        if (p.variance < 0.0) {
            p.variance = 0.0;
            p.clamped = true;
        }
    }
    return out;
}

/// Gaussian evidence log p(y | X) of the fitted hyperparameters.
inline double log_marginal_likelihood(const GpModel& model) {
    const auto p = static_cast<double>(model.size());
    const double fit_term = -0.5 * model.residuals().dot(model.alpha());
    const double complexity = -model.cholesky_factor().diagonal().array().log().sum();
    return fit_term + complexity - 0.5 * p * std::log(2.0 * std::numbers::pi);
}

}  // namespace latgp
