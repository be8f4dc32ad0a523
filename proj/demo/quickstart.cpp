// Generates a small synthetic profiling set, selects GP hyperparameters by
// leave-one-out error, and compares the GP (whose prior mean is the
// closed-form latency model) against that model on a few held-out layers.

#include <iomanip>
#include <iostream>

#include "latgp/latgp.hpp"

int main() {
    using namespace latgp;
    const HardwareConfig hw = HardwareConfig::reference();
    const auto samples = generate_synthetic(7, 80, hw);
    const std::span<const Sample> all(samples);
    const Dataset train = make_dataset(all.first(70));
    const Dataset test = make_dataset(all.last(10));

    const MeanFunctionSpec mean = MeanFunctionSpec::analytic();
    const Selection sel = select_hyperparameters(train, HyperGrid::defaults(), mean, SelectionCriterion::LoocvMae);
    std::cout << "kernel " << to_string(sel.best.kernel.kind) << ", lengthscale " << sel.best.kernel.lengthscale
              << ", LOOCV MAE " << sel.score << " ms\n";
    const GpModel model =
        fit(train.features, train.targets, sel.best.kernel, mean, sel.best.noise_variance, train.positions);
    const auto pred = predict(model, test.features, test.positions);

    std::cout << std::setprecision(4) << std::fixed;
    std::cout << "  measured   analytic   gp-mean   gp-stddev\n";
    for (Eigen::Index i = 0; i < test.size(); ++i) {
        const auto& s = samples[static_cast<std::size_t>(70 + i)];
        const double analytic = layer_breakdown(s.layer, s.hw, s.position).t_layer;
        const auto& p = pred[static_cast<std::size_t>(i)];
        std::cout << std::setw(10) << s.latency_ms << std::setw(11) << analytic << std::setw(10) << p.mean
                  << std::setw(12) << std::sqrt(p.variance) << '\n';
    }
}
