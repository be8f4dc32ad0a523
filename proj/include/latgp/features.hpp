#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "latgp/analytic_model.hpp"
#include "latgp/error.hpp"

namespace latgp {

/// One profiled convolution: its shape, the accelerator it ran on, its
/// position in the network and the measured latency.
struct Sample {
    LayerConfig layer;
    HardwareConfig hw;
    LayerPosition position = LayerPosition::Middle;
    double latency_ms = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// Raw feature layout, one column per layer or hardware parameter.
namespace feature {
inline constexpr Eigen::Index kH = 0, kW = 1, kHo = 2, kWo = 3, kK = 4, kF = 5, kC = 6;
inline constexpr Eigen::Index kPf = 7, kPc = 8, kMClk = 9, kLClk = 10, kMEff = 11, kS = 12, kDw = 13;
inline constexpr Eigen::Index kCount = 14;
}  // namespace feature

inline Eigen::VectorXd featurize(const LayerConfig& l, const HardwareConfig& hw) {
    Eigen::VectorXd x(feature::kCount);
    x << static_cast<double>(l.h), static_cast<double>(l.w), static_cast<double>(l.h_o),
        static_cast<double>(l.w_o), static_cast<double>(l.k), static_cast<double>(l.f),
        static_cast<double>(l.c), static_cast<double>(hw.pf), static_cast<double>(hw.pc), hw.m_clk_mhz,
        hw.l_clk_mhz, hw.m_eff, static_cast<double>(hw.s_bits), static_cast<double>(hw.dw_bits);
    return x;
}

inline Eigen::VectorXd featurize(const Sample& s) { return featurize(s.layer, s.hw); }

namespace detail {
inline std::int64_t as_count(double v) {
    if (!std::isfinite(v) || v < 0.5) throw DataError("feature value is not a positive integer");
    return static_cast<std::int64_t>(std::llround(v));
}
}  // namespace detail

template <typename Row>
LayerConfig layer_from_features(const Eigen::MatrixBase<Row>& x) {
    if (x.size() != feature::kCount) throw DataError("feature vector must have 14 entries");
    using detail::as_count;
    LayerConfig l{as_count(x(feature::kH)), as_count(x(feature::kW)), as_count(x(feature::kHo)),
                  as_count(x(feature::kWo)), as_count(x(feature::kK)), as_count(x(feature::kF)),
                  as_count(x(feature::kC))};
    validate(l);
    return l;
}

template <typename Row>
HardwareConfig hardware_from_features(const Eigen::MatrixBase<Row>& x) {
    if (x.size() != feature::kCount) throw DataError("feature vector must have 14 entries");
    using detail::as_count;
    HardwareConfig hw{as_count(x(feature::kPf)), as_count(x(feature::kPc)), x(feature::kMClk),
                      x(feature::kLClk), x(feature::kMEff), as_count(x(feature::kS)),
                      as_count(x(feature::kDw))};
    validate(hw);
    return hw;
}

/// Per-column mean and standard deviation (population convention).
/// Constant columns get stddev 1 so they standardize to zero.
struct FeatureStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;

    static FeatureStats identity(Eigen::Index dims) {
        return {Eigen::VectorXd::Zero(dims), Eigen::VectorXd::Ones(dims)};
    }

    static FeatureStats compute(const Eigen::MatrixXd& x) {
        FeatureStats s = identity(x.cols());
        if (x.rows() == 0) return s;
        const auto n = static_cast<double>(x.rows());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const auto col = x.col(j);
            if ((col.array() == col(0)).all()) {
                s.mean(j) = col(0);
                continue;
            }
            const double m = col.sum() / n;
            const double var = (col.array() - m).square().sum() / n;
            s.mean(j) = m;
            s.stddev(j) = var > 0.0 ? std::sqrt(var) : 1.0;
        }
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        if (x.cols() != mean.size()) throw DataError("feature dimension mismatch");
        Eigen::MatrixXd out(x.rows(), x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = (x.col(j).array() - mean(j)) / stddev(j);
        return out;
    }
};

/// Column-major view of a sample list as the matrices the regressors consume.
struct Dataset {
    Eigen::MatrixXd features;  // P x 14, raw units
    Eigen::VectorXd targets;   // ms
    std::vector<LayerPosition> positions;

    Eigen::Index size() const { return features.rows(); }
};

inline Dataset make_dataset(std::span<const Sample> samples) {
    Dataset d;
    const auto p = static_cast<Eigen::Index>(samples.size());
    d.features.resize(p, feature::kCount);
    d.targets.resize(p);
    d.positions.reserve(samples.size());
    for (Eigen::Index i = 0; i < p; ++i) {
        const Sample& s = samples[static_cast<std::size_t>(i)];
        d.features.row(i) = featurize(s).transpose();
        d.targets(i) = s.latency_ms;
        d.positions.push_back(s.position);
    }
    return d;
}

}  // namespace latgp
