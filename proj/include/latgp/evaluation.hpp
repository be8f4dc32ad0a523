#pragma once

// Leave-one-out evaluation, hyperparameter grid search and the method
// comparison table.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "latgp/analytic_model.hpp"
#include "latgp/baselines.hpp"
#include "latgp/error.hpp"
#include "latgp/features.hpp"
#include "latgp/gp_regression.hpp"
#include "latgp/kernels.hpp"

namespace latgp {

enum class MethodId { AnalyticOnly, GpZeroMean, GpAnalyticMean, LinearRegression };

inline constexpr MethodId kAllMethods[] = {MethodId::AnalyticOnly, MethodId::GpZeroMean, MethodId::GpAnalyticMean,
                                           MethodId::LinearRegression};

inline std::string_view to_string(MethodId m) {
    switch (m) {
        case MethodId::AnalyticOnly: return "analytic";
        case MethodId::GpZeroMean: return "gp-zero";
        case MethodId::GpAnalyticMean: return "gp-analytic";
        case MethodId::LinearRegression: return "linreg";
    }
    return "analytic";
}

inline MethodId parse_method(std::string_view s) {
    for (MethodId m : kAllMethods) {
        if (to_string(m) == s) return m;
    }
    throw DataError("unknown method '" + std::string(s) + "'");
}

/// Human-readable name used in the comparison table.
inline std::string_view display_name(MethodId m) {
    switch (m) {
        case MethodId::AnalyticOnly: return "Standard analytic method";
        case MethodId::GpZeroMean: return "Gaussian process (zero mean)";
        case MethodId::GpAnalyticMean: return "Gaussian process (analytic mean)";
        case MethodId::LinearRegression: return "Linear regression";
    }
    return "";
}

inline MeanFunctionSpec mean_for(MethodId m) {
    return m == MethodId::GpAnalyticMean ? MeanFunctionSpec::analytic() : MeanFunctionSpec::zero();
}

inline bool is_gp(MethodId m) { return m == MethodId::GpZeroMean || m == MethodId::GpAnalyticMean; }

struct GpHyperparameters {
    KernelSpec kernel;
    double noise_variance = 1.0;

    friend bool operator==(const GpHyperparameters&, const GpHyperparameters&) = default;
};

/// Search grid. Signal and noise variances are given as factors of the
/// variance of the training residuals y - m(X).
struct HyperGrid {
    std::vector<double> lengthscales;
    std::vector<double> signal_variance_factors;
    std::vector<double> noise_factors;
    std::vector<KernelKind> kernels;

    static HyperGrid defaults() {
        return {{0.1, 0.3, 1.0, 3.0, 10.0},
                {0.1, 1.0, 10.0},
                {1e-4, 1e-3, 1e-2, 1e-1},
                {KernelKind::Linear, KernelKind::RBF, KernelKind::Matern32}};
    }
};

inline void validate(const HyperGrid& g) {
    auto positive = [](const std::vector<double>& v) {
        return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
    };
    if (!positive(g.lengthscales) || !positive(g.signal_variance_factors) || !positive(g.noise_factors) ||
        g.kernels.empty()) {
        throw DataError("hyperparameter grid lists must be non-empty and positive");
    }
}

enum class SelectionCriterion { LoocvMae, LogMarginalLikelihood };

struct EvalOptions {
    // Worker threads for fold evaluation; 0 uses the hardware concurrency.
    std::size_t threads = 0;
};

struct MethodResult {
    MethodId method = MethodId::AnalyticOnly;
    double mae_ms = 0.0;
    std::vector<double> abs_errors;  // dataset order
    std::optional<GpHyperparameters> hyperparameters;
    std::string error;  // non-empty when the method failed

    bool ok() const { return error.empty(); }
};

struct EvalReport {
    std::size_t sample_count = 0;
    std::vector<MethodResult> methods;  // ranked, best first
};

namespace detail {

inline std::size_t worker_count(std::size_t requested, std::size_t jobs) {
    std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs body(i) for i in [0, n). The first failure in index order is rethrown.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
    std::vector<std::exception_ptr> failures(n);
    auto run = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };
    const std::size_t workers = worker_count(threads, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run(i);
            });
        }
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

inline double mean_in_order(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

struct Fold {
    Eigen::MatrixXd train_x;
    Eigen::VectorXd train_y;
    std::vector<LayerPosition> train_pos;
    Eigen::MatrixXd test_x;
    std::vector<LayerPosition> test_pos;
};

inline Fold leave_out(const Dataset& d, Eigen::Index held) {
    const Eigen::Index p = d.size();
    Fold f;
    f.train_x.resize(p - 1, d.features.cols());
    f.train_y.resize(p - 1);
    f.train_pos.reserve(static_cast<std::size_t>(p - 1));
    for (Eigen::Index i = 0, r = 0; i < p; ++i) {
        if (i == held) continue;
        f.train_x.row(r) = d.features.row(i);
        f.train_y(r) = d.targets(i);
        f.train_pos.push_back(d.positions[static_cast<std::size_t>(i)]);
        ++r;
    }
    f.test_x = d.features.row(held);
    f.test_pos = {d.positions[static_cast<std::size_t>(held)]};
    return f;
}

inline void check_dataset(const Dataset& d) {
    if (d.targets.size() != d.size() || d.positions.size() != static_cast<std::size_t>(d.size())) {
        throw DataError("dataset features, targets and positions disagree in length");
    }
}

}  // namespace detail

/// Variance of y - m(X) over the dataset; 1 when it vanishes.
inline double residual_variance(const Dataset& d, const MeanFunctionSpec& mean) {
    if (d.size() == 0) return 1.0;
    const Eigen::VectorXd r = d.targets - evaluate_mean(mean, d.features, d.positions);
    const double m = r.mean();
    const double var = (r.array() - m).square().mean();
    return var > 0.0 && std::isfinite(var) ? var : 1.0;
}

/// Leave-one-out absolute errors of a GP with fixed hyperparameters.
inline MethodResult loocv_gp(const Dataset& d, const MeanFunctionSpec& mean, const GpHyperparameters& hp,
                             const EvalOptions& opts = {}) {
    detail::check_dataset(d);
    if (d.size() < 2) throw DataError("leave-one-out needs at least two samples");
    MethodResult r;
    r.method = mean.kind == MeanKind::Analytic ? MethodId::GpAnalyticMean : MethodId::GpZeroMean;
    r.hyperparameters = hp;
    r.abs_errors.assign(static_cast<std::size_t>(d.size()), 0.0);
    detail::parallel_for(static_cast<std::size_t>(d.size()), opts.threads, [&](std::size_t i) {
        const auto held = static_cast<Eigen::Index>(i);
        try {
            const detail::Fold f = detail::leave_out(d, held);
            const GpModel model = fit(f.train_x, f.train_y, hp.kernel, mean, hp.noise_variance, f.train_pos);
            const Prediction p = predict(model, f.test_x, f.test_pos).front();
            r.abs_errors[i] = std::abs(p.mean - d.targets(held));
        } catch (const NumericalError& e) {
            throw NumericalError("fold " + std::to_string(i) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("fold " + std::to_string(i) + ": " + e.what());
        }
    });
    r.mae_ms = detail::mean_in_order(r.abs_errors);
    return r;
}

/// Leave-one-out absolute errors for a method. GP methods require
/// `hyperparameters`; the other methods ignore it.
inline MethodResult loocv_mae(MethodId method, const Dataset& d,
                              const std::optional<GpHyperparameters>& hyperparameters = std::nullopt,
                              const EvalOptions& opts = {}) {
    detail::check_dataset(d);
    if (is_gp(method)) {
        if (!hyperparameters) throw DataError("GP evaluation needs hyperparameters");
        return loocv_gp(d, mean_for(method), *hyperparameters, opts);
    }
    MethodResult r;
    r.method = method;
    r.abs_errors.assign(static_cast<std::size_t>(d.size()), 0.0);
    if (method == MethodId::AnalyticOnly) {
        if (d.size() < 1) throw DataError("evaluation needs at least one sample");
        const Eigen::VectorXd m = evaluate_mean(MeanFunctionSpec::analytic(), d.features, d.positions);
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            r.abs_errors[static_cast<std::size_t>(i)] = std::abs(m(i) - d.targets(i));
        }
    } else {
        if (d.size() < 2) throw DataError("leave-one-out needs at least two samples");
        detail::parallel_for(static_cast<std::size_t>(d.size()), opts.threads, [&](std::size_t i) {
            const auto held = static_cast<Eigen::Index>(i);
            const detail::Fold f = detail::leave_out(d, held);
            const LinearModel lm = fit_linear(f.train_x, f.train_y);
            r.abs_errors[i] = std::abs(predict_linear(lm, f.test_x)(0) - d.targets(held));
        });
    }
    r.mae_ms = detail::mean_in_order(r.abs_errors);
    return r;
}

struct Selection {
    GpHyperparameters best;
    double score = 0.0;  // LOOCV MAE (ms) or log marginal likelihood
    // Leave-one-out result of the winner when selecting by LOOCV MAE.
    std::optional<MethodResult> loocv;
    std::vector<std::string> failures;
};

/// Expands the grid into absolute hyperparameters, in deterministic order.
/// Linear ignores the lengthscale, so it appears once per (signal, noise)
/// pair with the smallest grid lengthscale.
inline std::vector<GpHyperparameters> expand_grid(const HyperGrid& grid, double residual_var) {
    validate(grid);
    const double min_ls = *std::min_element(grid.lengthscales.begin(), grid.lengthscales.end());
    std::vector<GpHyperparameters> out;
    for (KernelKind kind : grid.kernels) {
        for (double ls : grid.lengthscales) {
            if (kind == KernelKind::Linear && ls != min_ls) continue;
            for (double sf : grid.signal_variance_factors) {
                for (double nf : grid.noise_factors) {
                    out.push_back({KernelSpec{kind, sf * residual_var, ls, 0.0}, nf * residual_var});
                }
            }
        }
    }
    return out;
}

/// Grid search over the whole dataset. Ties go to the smaller lengthscale,
/// then the smaller noise, then the smaller signal variance, then grid order.
inline Selection select_hyperparameters(const Dataset& d, const HyperGrid& grid, const MeanFunctionSpec& mean,
                                        SelectionCriterion criterion, const EvalOptions& opts = {}) {
    detail::check_dataset(d);
    const std::vector<GpHyperparameters> candidates = expand_grid(grid, residual_variance(d, mean));

    Selection sel;
    bool have = false;
    std::size_t best_index = 0;
    auto key = [&](const GpHyperparameters& h, double score, std::size_t idx) {
        const double s = criterion == SelectionCriterion::LoocvMae ? score : -score;
        return std::make_tuple(s, h.kernel.lengthscale, h.noise_variance, h.kernel.signal_variance, idx);
    };
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const GpHyperparameters& hp = candidates[c];
        try {
            double score = 0.0;
            std::optional<MethodResult> loo;
            if (criterion == SelectionCriterion::LoocvMae) {
                loo = loocv_gp(d, mean, hp, opts);
                score = loo->mae_ms;
            } else {
                score = log_marginal_likelihood(fit(d.features, d.targets, hp.kernel, mean, hp.noise_variance, d.positions));
            }
            if (!std::isfinite(score)) throw NumericalError("non-finite selection score");
            if (!have || key(hp, score, c) < key(sel.best, sel.score, best_index)) {
                sel.best = hp;
                sel.score = score;
                sel.loocv = std::move(loo);
                best_index = c;
                have = true;
            }
        } catch (const std::exception& e) {
            sel.failures.push_back(std::string(to_string(hp.kernel.kind)) + " ls=" + std::to_string(hp.kernel.lengthscale) +
                                   " sf=" + std::to_string(hp.kernel.signal_variance) +
                                   " noise=" + std::to_string(hp.noise_variance) + ": " + e.what());
        }
    }
    if (!have) {
        std::string msg = "every grid point failed to fit";
        for (const auto& f : sel.failures) msg += "\n  " + f;
        throw NumericalError(msg);
    }
    return sel;
}

/// Ranks results by MAE; failed methods go last, ties keep method order.
inline void rank_results(std::vector<MethodResult>& results) {
    std::stable_sort(results.begin(), results.end(), [](const MethodResult& a, const MethodResult& b) {
        if (a.ok() != b.ok()) return a.ok();
        if (!a.ok()) return false;
        return a.mae_ms < b.mae_ms;
    });
}

/// Leave-one-out comparison of every method. GP hyperparameters are chosen
/// per method by grid search on the whole dataset.
inline EvalReport compare_methods(const Dataset& d, const HyperGrid& grid,
                                  SelectionCriterion criterion = SelectionCriterion::LoocvMae,
                                  const EvalOptions& opts = {}) {
    detail::check_dataset(d);
    if (d.size() < 2) throw DataError("comparison needs at least two samples");
    validate(grid);
    EvalReport report;
    report.sample_count = static_cast<std::size_t>(d.size());
    for (MethodId m : kAllMethods) {
        MethodResult r;
        r.method = m;
        try {
            if (is_gp(m)) {
                Selection sel = select_hyperparameters(d, grid, mean_for(m), criterion, opts);
                r = sel.loocv ? std::move(*sel.loocv) : loocv_gp(d, mean_for(m), sel.best, opts);
            } else {
                r = loocv_mae(m, d, std::nullopt, opts);
            }
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        r.method = m;
        report.methods.push_back(std::move(r));
    }
    rank_results(report.methods);
    return report;
}

}  // namespace latgp
