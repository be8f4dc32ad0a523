// Command-line front end: analytic estimates, synthetic data, GP fitting,
// prediction and leave-one-out evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical failure.

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latgp/latgp.hpp"

namespace {

using namespace latgp;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct GridFlags {
    std::vector<double> lengthscales;
    std::vector<double> signal_factors;
    std::vector<double> noise_factors;
    std::string kernel;  // restricts the grid to one kernel when set

    void attach(CLI::App* cmd) {
        cmd->add_option("--kernel", kernel, "Restrict the search to one kernel")
            ->check(CLI::IsMember({"linear", "rbf", "matern32"}));
        cmd->add_option("--lengthscales", lengthscales, "Lengthscale grid (standardized feature units)")
            ->delimiter(',');
        cmd->add_option("--signal-factors", signal_factors, "Signal variance grid, as factors of residual variance")
            ->delimiter(',');
        cmd->add_option("--noise-factors", noise_factors, "Noise variance grid, as factors of residual variance")
            ->delimiter(',');
    }

    HyperGrid grid() const {
        HyperGrid g = HyperGrid::defaults();
        if (!lengthscales.empty()) g.lengthscales = lengthscales;
        if (!signal_factors.empty()) g.signal_variance_factors = signal_factors;
        if (!noise_factors.empty()) g.noise_factors = noise_factors;
        if (!kernel.empty()) g.kernels = {parse_kernel_kind(kernel)};
        return g;
    }
};

SelectionCriterion parse_criterion(const std::string& s) {
    return s == "lml" ? SelectionCriterion::LogMarginalLikelihood : SelectionCriterion::LoocvMae;
}

Dataset read_dataset(const std::string& path) {
    std::vector<std::string> warnings;
    const auto samples = load_csv(path, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return make_dataset(samples);
}

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        write_text_file(out_path, content);
    }
}

std::string estimate_text(const NetworkEstimate& est) {
    std::ostringstream os;
    os << std::left << std::setw(7) << "Layer" << std::setw(9) << "Position" << std::right;
    for (const char* h : {"weights", "data", "load", "compute", "store", "layer"}) os << std::setw(14) << h;
    os << "\n" << std::scientific << std::setprecision(6);
    for (std::size_t i = 0; i < est.per_layer.size(); ++i) {
        const auto& b = est.per_layer[i];
        os << std::left << std::setw(7) << i << std::setw(9) << to_string(position_in_network(i, est.per_layer.size()))
           << std::right;
        for (double v : {b.t_weights, b.t_data, b.t_load, b.t_compute, b.t_store, b.t_layer}) os << std::setw(14) << v;
        os << '\n';
    }
    os << std::defaultfloat << std::setprecision(10) << "Total latency: " << est.total << " ms\n";
    return os.str();
}

std::string estimate_csv(const NetworkEstimate& est) {
    std::ostringstream os;
    os << "layer,position,t_weights_ms,t_data_ms,t_load_ms,t_compute_ms,t_store_ms,t_layer_ms\n" << std::setprecision(17);
    for (std::size_t i = 0; i < est.per_layer.size(); ++i) {
        const auto& b = est.per_layer[i];
        os << i << ',' << to_string(position_in_network(i, est.per_layer.size())) << ',' << b.t_weights << ','
           << b.t_data << ',' << b.t_load << ',' << b.t_compute << ',' << b.t_store << ',' << b.t_layer << '\n';
    }
    return os.str();
}

std::string predictions_output(const std::vector<double>& mean, const std::vector<double>& variance,
                               const Dataset& d, const std::string& format) {
    std::ostringstream os;
    if (format == "json") {
        json rows = json::array();
        for (std::size_t i = 0; i < mean.size(); ++i) {
            json r{{"index", i}, {"mean_ms", mean[i]}, {"target_ms", d.targets(static_cast<Eigen::Index>(i))}};
            r["variance_ms2"] = variance.empty() ? json(nullptr) : json(variance[i]);
            rows.push_back(std::move(r));
        }
        os << json{{"predictions", rows}}.dump(2) << '\n';
    } else if (format == "csv") {
        os << "index,mean_ms,variance_ms2,target_ms\n" << std::setprecision(17);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            os << i << ',' << mean[i] << ',';
            if (!variance.empty()) os << variance[i];
            os << ',' << d.targets(static_cast<Eigen::Index>(i)) << '\n';
        }
    } else {
        os << std::left << std::setw(7) << "Index" << std::right << std::setw(16) << "Mean [ms]" << std::setw(18)
           << "Variance [ms^2]" << std::setw(16) << "Target [ms]" << '\n';
        os << std::setprecision(6);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            os << std::left << std::setw(7) << i << std::right << std::setw(16) << mean[i] << std::setw(18);
            if (variance.empty()) {
                os << "-";
            } else {
                os << variance[i];
            }
            os << std::setw(16) << d.targets(static_cast<Eigen::Index>(i)) << '\n';
        }
    }
    return os.str();
}

std::string report_output(const EvalReport& r, const std::string& format) {
    if (format == "json") return to_json(r).dump(2) + "\n";
    if (format == "csv") return report_errors_csv(r);
    return report_table(r);
}

int run(int argc, char** argv) {
    CLI::App app{"Latency estimation for FPGA convolution accelerators"};
    app.require_subcommand(1);
    std::string format = "text";
    const auto formats = CLI::IsMember({"json", "csv", "text"});

    // estimate
    std::string network_path, hw_path;
    auto* estimate = app.add_subcommand("estimate", "Closed-form latency of a network");
    estimate->add_option("--network", network_path, "Network JSON (array of layers)")->required();
    estimate->add_option("--hw", hw_path, "Hardware JSON")->required();
    estimate->add_option("--format", format, "Output format")->check(formats);

    // synth
    std::uint64_t seed = 42;
    std::size_t count = 156;
    std::string out_path, distortion = "default";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic profiling dataset");
    synth->add_option("--seed", seed, "Random seed");
    synth->add_option("--count", count, "Number of samples")->check(CLI::PositiveNumber);
    synth->add_option("--out", out_path, "Output CSV path")->required();
    synth->add_option("--hw", hw_path, "Hardware JSON (defaults to the reference accelerator)");
    synth->add_option("--distortion", distortion, "Unmodelled-effect distortion")
        ->check(CLI::IsMember({"default", "none"}));

    // fit
    std::string data_path, model_path, mean = "analytic", select = "loocv", method;
    std::size_t threads = 0;
    GridFlags fit_grid;
    auto* fitc = app.add_subcommand("fit", "Select hyperparameters and write a model file");
    fitc->add_option("--data", data_path, "Training CSV")->required();
    fitc->add_option("--model", model_path, "Output model JSON")->required();
    fitc->add_option("--mean", mean, "GP mean function")->check(CLI::IsMember({"zero", "analytic"}));
    fitc->add_option("--select", select, "Selection criterion")->check(CLI::IsMember({"loocv", "lml"}));
    fitc->add_option("--method", method, "Fit the linear baseline instead of a GP")->check(CLI::IsMember({"linreg"}));
    fitc->add_option("--threads", threads, "Worker threads (0 = all cores)");
    fit_grid.attach(fitc);

    // predict
    auto* predictc = app.add_subcommand("predict", "Predict latencies with a saved model");
    predictc->add_option("--data", data_path, "CSV of samples to predict")->required();
    predictc->add_option("--model", model_path, "Model JSON")->required();
    predictc->add_option("--format", format, "Output format")->check(formats);
    predictc->add_option("--out", out_path, "Write output here instead of stdout");

    // loocv
    std::string method_name;
    GridFlags loocv_grid;
    auto* loocv = app.add_subcommand("loocv", "Leave-one-out MAE of one method");
    loocv->add_option("--data", data_path, "Dataset CSV")->required();
    loocv->add_option("--method", method_name, "Method")
        ->required()
        ->check(CLI::IsMember({"analytic", "gp-zero", "gp-analytic", "linreg"}));
    loocv->add_option("--select", select, "Selection criterion")->check(CLI::IsMember({"loocv", "lml"}));
    loocv->add_option("--format", format, "Output format")->check(formats);
    loocv->add_option("--out", out_path, "Also write the JSON report here");
    loocv->add_option("--threads", threads, "Worker threads (0 = all cores)");
    loocv_grid.attach(loocv);

    // compare
    std::string errors_csv;
    GridFlags compare_grid;
    auto* compare = app.add_subcommand("compare", "Leave-one-out comparison of all methods");
    compare->add_option("--data", data_path, "Dataset CSV")->required();
    compare->add_option("--select", select, "Selection criterion")->check(CLI::IsMember({"loocv", "lml"}));
    compare->add_option("--format", format, "Output format")->check(formats);
    compare->add_option("--out", out_path, "Also write the JSON report here");
    compare->add_option("--errors-csv", errors_csv, "Write per-sample absolute errors here");
    compare->add_option("--threads", threads, "Worker threads (0 = all cores)");
    compare->add_option("--seed", seed, "Accepted for symmetry; evaluation draws no random numbers");
    compare_grid.attach(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    const EvalOptions opts{threads};

    if (*estimate) {
        const auto est = network_latency(load_network(network_path), load_hardware(hw_path));
        if (format == "json") {
            std::cout << to_json(est).dump(2) << '\n';
        } else if (format == "csv") {
            std::cout << estimate_csv(est);
        } else {
            std::cout << estimate_text(est);
        }
        return 0;
    }

    if (*synth) {
        const HardwareConfig hw = hw_path.empty() ? HardwareConfig::reference() : load_hardware(hw_path);
        const DistortionSpec dist = distortion == "none" ? DistortionSpec::none() : DistortionSpec{};
        save_csv(out_path, generate_synthetic(seed, count, hw, dist));
        return 0;
    }

    if (*fitc) {
        const Dataset d = read_dataset(data_path);
        if (method == "linreg") {
            write_text_file(model_path, to_json(fit_linear(d.features, d.targets)).dump(2) + "\n");
            return 0;
        }
        const MeanFunctionSpec m = mean == "zero" ? MeanFunctionSpec::zero() : MeanFunctionSpec::analytic();
        const Selection sel = select_hyperparameters(d, fit_grid.grid(), m, parse_criterion(select), opts);
        const GpModel model =
            fit(d.features, d.targets, sel.best.kernel, m, sel.best.noise_variance, d.positions);
        write_text_file(model_path, to_json(model).dump(2) + "\n");
        std::cerr << "selected " << to_string(sel.best.kernel.kind) << " lengthscale=" << sel.best.kernel.lengthscale
                  << " signal_variance=" << sel.best.kernel.signal_variance
                  << " noise_variance=" << sel.best.noise_variance << " score=" << sel.score << '\n';
        return 0;
    }

    if (*predictc) {
        const json j = detail::read_json_file(model_path);
        const Dataset d = read_dataset(data_path);
        std::vector<double> means, variances;
        if (j.is_object() && j.value("format", "") == kLinearFormat) {
            const Eigen::VectorXd p = predict_linear(linear_from_json(j), d.features);
            means.assign(p.data(), p.data() + p.size());
        } else {
            const GpModel model = model_from_json(j);
            for (const Prediction& p : predict(model, d.features, d.positions)) {
                means.push_back(p.mean);
                variances.push_back(p.variance);
            }
        }
        emit(predictions_output(means, variances, d, format), out_path);
        return 0;
    }

    if (*loocv || *compare) {
        const Dataset d = read_dataset(data_path);
        const SelectionCriterion criterion = parse_criterion(select);
        EvalReport report;
        if (*compare) {
            report = compare_methods(d, compare_grid.grid(), criterion, opts);
        } else {
            const MethodId m = parse_method(method_name);
            report.sample_count = static_cast<std::size_t>(d.size());
            if (is_gp(m)) {
                Selection sel = select_hyperparameters(d, loocv_grid.grid(), mean_for(m), criterion, opts);
                report.methods.push_back(sel.loocv ? std::move(*sel.loocv) : loocv_mae(m, d, sel.best, opts));
            } else {
                report.methods.push_back(loocv_mae(m, d, std::nullopt, opts));
            }
        }
        std::cout << report_output(report, format);
        if (!out_path.empty()) write_text_file(out_path, to_json(report).dump(2) + "\n");
        if (!errors_csv.empty()) write_text_file(errors_csv, report_errors_csv(report));
        for (const MethodResult& r : report.methods) {
            if (!r.ok()) std::cerr << "error: " << to_string(r.method) << ": " << r.error << '\n';
        }
        return 0;
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const latgp::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const latgp::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
}
