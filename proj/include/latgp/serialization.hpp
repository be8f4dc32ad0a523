#pragma once

// JSON file formats: network and hardware descriptions, persisted models
// ("latgp-model/1" and "latgp-linear/1"), evaluation reports and the
// plain-text / CSV renderings of those reports.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "latgp/analytic_model.hpp"
#include "latgp/baselines.hpp"
#include "latgp/error.hpp"
#include "latgp/evaluation.hpp"
#include "latgp/features.hpp"
#include "latgp/gp_regression.hpp"
#include "latgp/kernels.hpp"

namespace latgp {

using json = nlohmann::json;

inline constexpr const char* kModelFormat = "latgp-model/1";
inline constexpr const char* kLinearFormat = "latgp-linear/1";
inline constexpr const char* kReportFormat = "latgp-report/1";

namespace detail {

inline const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing key '") + key + "'");
    return j.at(key);
}

inline double number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) throw DataError(std::string("key '") + key + "' must be a number");
    return v.get<double>();
}

inline std::int64_t integer(const json& j, const char* key) {
    const double v = number(j, key);
    if (v != static_cast<double>(static_cast<std::int64_t>(v))) {
        throw DataError(std::string("key '") + key + "' must be an integer");
    }
    return static_cast<std::int64_t>(v);
}

inline std::string text(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) throw DataError(std::string("key '") + key + "' must be a string");
    return v.get<std::string>();
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Eigen::VectorXd vector_from(const json& j, const char* key) {
    const json& a = require(j, key);
    if (!a.is_array()) throw DataError(std::string("key '") + key + "' must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw DataError(std::string("key '") + key + "' must hold numbers");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

inline Eigen::MatrixXd matrix_from(const json& j, const char* key, Eigen::Index cols) {
    const json& a = require(j, key);
    if (!a.is_array()) throw DataError(std::string("key '") + key + "' must be an array of rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(a.size()), cols);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_array() || static_cast<Eigen::Index>(a[i].size()) != cols) {
            throw DataError(std::string("key '") + key + "' row " + std::to_string(i) + " has the wrong length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json& v = a[i][static_cast<std::size_t>(c)];
            if (!v.is_number()) throw DataError(std::string("key '") + key + "' must hold numbers");
            m(static_cast<Eigen::Index>(i), c) = v.get<double>();
        }
    }
    return m;
}

inline void check_format(const json& j, const char* expected) {
    const std::string got = text(j, "format");
    if (got != expected) {
        throw DataError("unsupported model format '" + got + "' (expected '" + expected + "')");
    }
}

}  // namespace detail

// --- network and hardware descriptions ---

inline json to_json(const LayerConfig& l) {
    return {{"h", l.h}, {"w", l.w}, {"h_o", l.h_o}, {"w_o", l.w_o}, {"k", l.k}, {"f", l.f}, {"c", l.c}};
}

inline LayerConfig layer_from_json(const json& j) {
    using detail::integer;
    LayerConfig l{integer(j, "h"), integer(j, "w"), integer(j, "h_o"), integer(j, "w_o"),
                  integer(j, "k"), integer(j, "f"), integer(j, "c")};
    validate(l);
    return l;
}

inline json to_json(const HardwareConfig& hw) {
    return {{"pf", hw.pf},
            {"pc", hw.pc},
            {"m_clk_mhz", hw.m_clk_mhz},
            {"l_clk_mhz", hw.l_clk_mhz},
            {"m_eff_pct", hw.m_eff * 100.0},
            {"s_bits", hw.s_bits},
            {"dw_bits", hw.dw_bits}};
}

inline HardwareConfig hardware_from_json(const json& j) {
    using detail::integer;
    using detail::number;
    HardwareConfig hw{integer(j, "pf"),       integer(j, "pc"),     number(j, "m_clk_mhz"),
                      number(j, "l_clk_mhz"), number(j, "m_eff_pct") / 100.0, integer(j, "s_bits"),
                      integer(j, "dw_bits")};
    validate(hw);
    return hw;
}

/// Network files are a JSON array of layer objects.
inline std::vector<LayerConfig> network_from_json(const json& j) {
    if (!j.is_array()) throw DataError("network description must be a JSON array of layers");
    std::vector<LayerConfig> layers;
    for (std::size_t i = 0; i < j.size(); ++i) {
        try {
            layers.push_back(layer_from_json(j[i]));
        } catch (const DataError& e) {
            throw DataError("layer " + std::to_string(i) + ": " + e.what());
        }
    }
    return layers;
}

inline std::vector<LayerConfig> load_network(const std::string& path) {
    return network_from_json(detail::read_json_file(path));
}

inline HardwareConfig load_hardware(const std::string& path) {
    return hardware_from_json(detail::read_json_file(path));
}

inline json to_json(const LatencyBreakdown& b) {
    return {{"t_weights_ms", b.t_weights}, {"t_data_ms", b.t_data},   {"t_load_ms", b.t_load},
            {"t_compute_ms", b.t_compute}, {"t_store_ms", b.t_store}, {"t_layer_ms", b.t_layer}};
}

inline json to_json(const NetworkEstimate& est) {
    json layers = json::array();
    for (std::size_t i = 0; i < est.per_layer.size(); ++i) {
        json l = to_json(est.per_layer[i]);
        l["index"] = i;
        l["position"] = std::string(to_string(position_in_network(i, est.per_layer.size())));
        layers.push_back(std::move(l));
    }
    return {{"layers", layers}, {"total_ms", est.total}};
}

// --- GP model ---

inline json to_json(const KernelSpec& k) {
    return {{"kind", std::string(to_string(k.kind))},
            {"signal_variance", k.signal_variance},
            {"lengthscale", k.lengthscale},
            {"bias_variance", k.bias_variance}};
}

inline KernelSpec kernel_from_json(const json& j) {
    KernelSpec k{parse_kernel_kind(detail::text(j, "kind")), detail::number(j, "signal_variance"),
                 detail::number(j, "lengthscale"), detail::number(j, "bias_variance")};
    validate(k);
    return k;
}

inline json to_json(const MeanFunctionSpec& m) {
    if (m.kind == MeanKind::Zero) return {{"kind", "zero"}};
    json j{{"kind", "analytic"}};
    if (m.position_source == PositionSource::PerSample) {
        j["position"] = "per-sample";
    } else {
        j["position"] = std::string(to_string(m.fixed_position));
    }
    return j;
}

inline MeanFunctionSpec mean_from_json(const json& j) {
    const std::string kind = detail::text(j, "kind");
    if (kind == "zero") return MeanFunctionSpec::zero();
    if (kind != "analytic") throw DataError("unknown mean function '" + kind + "'");
    const std::string pos = detail::text(j, "position");
    if (pos == "per-sample") return MeanFunctionSpec::analytic();
    return MeanFunctionSpec::analytic_at(parse_position(pos));
}

inline json to_json(const GpModel& m) {
    json positions = json::array();
    for (LayerPosition p : m.train_positions()) positions.push_back(std::string(to_string(p)));
    return {{"format", kModelFormat},
            {"kernel", to_json(m.kernel())},
            {"mean", to_json(m.mean())},
            {"noise_variance", m.noise_variance()},
            {"feature_scaling", std::string(to_string(m.scaling()))},
            {"standardize", m.standardized()},
            {"feature_mean", detail::vector_json(m.stats().mean)},
            {"feature_stddev", detail::vector_json(m.stats().stddev)},
            {"dims", m.dims()},
            {"train_features", detail::matrix_json(m.train_raw_features())},
            {"train_targets", detail::vector_json(m.train_targets())},
            {"train_positions", positions},
            {"train_residuals", detail::vector_json(m.residuals())}};
}

/// Rebuilds a model from its stored inputs; the factorization is recomputed.
inline GpModel model_from_json(const json& j) {
    detail::check_format(j, kModelFormat);
    const auto dims = static_cast<Eigen::Index>(detail::integer(j, "dims"));
    FitOptions opts;
    opts.scaling = parse_feature_scaling(detail::text(j, "feature_scaling"));
    const json& standardize = detail::require(j, "standardize");
    if (!standardize.is_boolean()) throw DataError("key 'standardize' must be a boolean");
    opts.standardize = standardize.get<bool>();
    opts.stats = FeatureStats{detail::vector_from(j, "feature_mean"), detail::vector_from(j, "feature_stddev")};
    const Eigen::MatrixXd x = detail::matrix_from(j, "train_features", dims);
    const Eigen::VectorXd y = detail::vector_from(j, "train_targets");
    std::vector<LayerPosition> positions;
    for (const json& p : detail::require(j, "train_positions")) {
        if (!p.is_string()) throw DataError("train_positions must hold strings");
        positions.push_back(parse_position(p.get<std::string>()));
    }
    return fit(x, y, kernel_from_json(detail::require(j, "kernel")), mean_from_json(detail::require(j, "mean")),
               detail::number(j, "noise_variance"), positions, opts);
}

// --- linear model ---

inline json to_json(const LinearModel& m) {
    return {{"format", kLinearFormat},
            {"weights", detail::vector_json(m.weights)},
            {"intercept", m.intercept},
            {"feature_mean", detail::vector_json(m.stats.mean)},
            {"feature_stddev", detail::vector_json(m.stats.stddev)},
            {"ridge", m.ridge}};
}

inline LinearModel linear_from_json(const json& j) {
    detail::check_format(j, kLinearFormat);
    LinearModel m;
    m.weights = detail::vector_from(j, "weights");
    m.intercept = detail::number(j, "intercept");
    m.stats = {detail::vector_from(j, "feature_mean"), detail::vector_from(j, "feature_stddev")};
    const json& ridge = detail::require(j, "ridge");
    m.ridge = ridge.is_boolean() && ridge.get<bool>();
    if (m.stats.mean.size() != m.weights.size() || m.stats.stddev.size() != m.weights.size()) {
        throw DataError("linear model statistics do not match its weights");
    }
    return m;
}

// --- evaluation reports ---

inline json to_json(const GpHyperparameters& hp) {
    return {{"kernel", to_json(hp.kernel)}, {"noise_variance", hp.noise_variance}};
}

inline json to_json(const EvalReport& r) {
    json methods = json::array();
    for (std::size_t i = 0; i < r.methods.size(); ++i) {
        const MethodResult& m = r.methods[i];
        json e{{"rank", i + 1}, {"method", std::string(to_string(m.method))}};
        if (m.ok()) {
            e["mae_ms"] = m.mae_ms;
            e["abs_errors_ms"] = m.abs_errors;
            e["hyperparameters"] = m.hyperparameters ? to_json(*m.hyperparameters) : json(nullptr);
        } else {
            e["error"] = m.error;
        }
        methods.push_back(std::move(e));
    }
    return {{"format", kReportFormat}, {"samples", r.sample_count}, {"methods", methods}};
}

inline std::string describe(const MethodResult& m) {
    if (!m.ok()) return "failed: " + m.error;
    if (!m.hyperparameters) return m.method == MethodId::LinearRegression ? "ordinary least squares" : "none";
    std::ostringstream os;
    os << "kernel " << to_string(m.hyperparameters->kernel.kind);
    if (m.hyperparameters->kernel.kind != KernelKind::Linear) os << ", lengthscale " << m.hyperparameters->kernel.lengthscale;
    os << ", signal var " << std::setprecision(4) << m.hyperparameters->kernel.signal_variance << ", noise var "
       << m.hyperparameters->noise_variance;
    return os.str();
}

/// Aligned table: rank, method, LOOCV MAE in ms, chosen configuration.
inline std::string report_table(const EvalReport& r) {
    std::ostringstream os;
    os << "LOOCV over " << r.sample_count << " samples\n";
    os << std::left << std::setw(6) << "Rank" << std::setw(36) << "Method" << std::right << std::setw(16)
       << "LOOCV MAE [ms]" << "  " << "Configuration\n";
    for (std::size_t i = 0; i < r.methods.size(); ++i) {
        const MethodResult& m = r.methods[i];
        os << std::left << std::setw(6) << (i + 1) << std::setw(36) << display_name(m.method) << std::right
           << std::setw(16);
        if (m.ok()) {
            os << std::fixed << std::setprecision(6) << m.mae_ms << std::defaultfloat;
        } else {
            os << "-";
        }
        os << "  " << describe(m) << '\n';
    }
    return os.str();
}

/// Per-sample absolute errors, one column per method in report order.
inline std::string report_errors_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "sample";
    for (const MethodResult& m : r.methods) os << ',' << to_string(m.method);
    os << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < r.sample_count; ++i) {
        os << i;
        for (const MethodResult& m : r.methods) {
            os << ',';
            if (m.ok() && i < m.abs_errors.size()) os << m.abs_errors[i];
        }
        os << '\n';
    }
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
    if (!out) throw DataError("error writing '" + path + "'");
}

}  // namespace latgp
