#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "latgp/error.hpp"

namespace latgp {

enum class KernelKind { Linear, RBF, Matern32 };

/// Isotropic covariance function. `lengthscale` is ignored by Linear and
/// `bias_variance` is used only by Linear.
struct KernelSpec {
    KernelKind kind = KernelKind::Matern32;
    double signal_variance = 1.0;
    double lengthscale = 1.0;
    double bias_variance = 0.0;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline std::string_view to_string(KernelKind k) {
    switch (k) {
        case KernelKind::Linear: return "linear";
        case KernelKind::RBF: return "rbf";
        case KernelKind::Matern32: return "matern32";
    }
    return "matern32";
}

inline KernelKind parse_kernel_kind(std::string_view s) {
    if (s == "linear") return KernelKind::Linear;
    if (s == "rbf") return KernelKind::RBF;
    if (s == "matern32") return KernelKind::Matern32;
    throw DataError("unknown kernel '" + std::string(s) + "'");
}

inline void validate(const KernelSpec& k) {
    if (!(k.signal_variance > 0.0) || !std::isfinite(k.signal_variance)) {
        throw DataError("kernel signal variance must be positive");
    }
    if (k.kind != KernelKind::Linear && (!(k.lengthscale > 0.0) || !std::isfinite(k.lengthscale))) {
        throw DataError("kernel lengthscale must be positive");
    }
    if (!(k.bias_variance >= 0.0)) throw DataError("kernel bias variance must be nonnegative");
}

namespace detail {
// exp(-a) for a >= 0, flushed to zero before the result goes subnormal.
inline double decay(double a) { return a > 708.0 ? 0.0 : std::exp(-a); }
}  // namespace detail

template <typename A, typename B>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& x2) {
    if (x.size() != x2.size()) throw DataError("kernel input dimension mismatch");
    switch (spec.kind) {
        case KernelKind::Linear: {
            double dot = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) dot += x(i) * x2(i);
            return spec.signal_variance * dot + spec.bias_variance;
        }
        case KernelKind::RBF: {
            double r2 = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double d = x(i) - x2(i);
                r2 += d * d;
            }
            return spec.signal_variance * detail::decay(r2 / (2.0 * spec.lengthscale * spec.lengthscale));
        }
        case KernelKind::Matern32: {
            double r2 = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double d = x(i) - x2(i);
                r2 += d * d;
            }
            const double s = std::sqrt(3.0) * std::sqrt(r2) / spec.lengthscale;
            return spec.signal_variance * (1.0 + s) * detail::decay(s);
        }
    }
    return 0.0;
}

/// Cross-covariance between the rows of `a` and the rows of `b`.
inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) throw DataError("kernel input dimension mismatch");
    // one contiguous column per sample
    const Eigen::MatrixXd at = a.transpose();
    const Eigen::MatrixXd bt = b.transpose();
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) k(i, j) = kernel_eval(spec, at.col(i), bt.col(j));
    }
    return k;
}

/// Gram matrix of the rows of `a`; each unordered pair is evaluated once.
inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd at = a.transpose();
    Eigen::MatrixXd k(a.rows(), a.rows());
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        for (Eigen::Index i = j; i < a.rows(); ++i) {
            const double v = kernel_eval(spec, at.col(i), at.col(j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

}  // namespace latgp
