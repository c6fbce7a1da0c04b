#pragma once

// Central finite-difference oracle for GradientEngine, shared by the unit
// tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "plabel/network.hpp"
#include "plabel/prob_label.hpp"
#include "plabel/random.hpp"

namespace gradcheck {

using namespace plabel;

enum class Regime { hard, soft, probabilistic, regularized };

inline const char* name(Regime r) {
    switch (r) {
        case Regime::hard: return "hard";
        case Regime::soft: return "soft";
        case Regime::probabilistic: return "probabilistic";
        case Regime::regularized: return "regularized";
    }
    return "?";
}

struct Report {
    std::string network;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // coordinates whose perturbation crosses a relu/pool kink
};

// Five architecture families covering every layer type; sizes vary with the seed.
inline NetworkSpec random_network(Rng& rng, std::string& label) {
    const auto family = rng.below(5);
    const std::size_t k = 2 + rng.below(2);  // 2 or 3 classes
    auto head = [&](std::vector<LayerSpec>& l) {
        if (k == 2 && rng.below(2) == 0) {
            l.push_back(DenseLayer{1});
            l.push_back(ActivationLayer{Activation::sigmoid});
        } else {
            l.push_back(DenseLayer{k});
            l.push_back(ActivationLayer{Activation::softmax});
        }
    };
    std::vector<LayerSpec> l;
    Shape in{1, 1, 1};
    switch (family) {
        case 0:
            in = {2 + rng.below(4), 1, 1};
            l.push_back(DenseLayer{2 + rng.below(4)});
            l.push_back(ActivationLayer{Activation::relu});
            label = "dense-relu";
            break;
        case 1:
            in = {2 + rng.below(4), 1, 1};
            l.push_back(DenseLayer{2 + rng.below(4)});
            l.push_back(ActivationLayer{Activation::sigmoid});
            l.push_back(DenseLayer{3});
            l.push_back(ActivationLayer{Activation::relu});
            label = "dense-sigmoid-dense-relu";
            break;
        case 2:
            in = {1, 4, 4};
            l.push_back(Conv2dLayer{1 + rng.below(3)});
            l.push_back(ActivationLayer{Activation::relu});
            l.push_back(MaxPoolLayer{});
            l.push_back(FlattenLayer{});
            label = "conv-relu-pool";
            break;
        case 3:
            in = {2, 4, 6};
            l.push_back(Conv2dLayer{2});
            l.push_back(ActivationLayer{Activation::sigmoid});
            l.push_back(Conv2dLayer{1 + rng.below(2)});
            l.push_back(ActivationLayer{Activation::relu});
            l.push_back(MaxPoolLayer{});
            l.push_back(FlattenLayer{});
            label = "conv-sigmoid-conv-relu-pool";
            break;
        default:
            in = {1, 8, 8};
            l.push_back(Conv2dLayer{2});
            l.push_back(ActivationLayer{Activation::relu});
            l.push_back(MaxPoolLayer{});
            l.push_back(Conv2dLayer{3});
            l.push_back(ActivationLayer{Activation::relu});
            l.push_back(MaxPoolLayer{});
            l.push_back(FlattenLayer{});
            l.push_back(DenseLayer{4});
            l.push_back(ActivationLayer{Activation::relu});
            label = "reduced-cnn";
            break;
    }
    head(l);
    label += k == 2 ? "/k2" : "/k3";
    return NetworkSpec(in, std::move(l));
}

inline ClassDistribution random_distribution(Rng& rng, std::size_t k) {
    std::vector<double> p(k);
    double s = 0;
    for (double& v : p) s += (v = 0.05 + rng.uniform());
    for (double& v : p) v /= s;
    return ClassDistribution(std::move(p));
}

inline Report check(std::uint64_t seed, Regime regime, double eps = 1e-5) {
    Rng rng(Seed{seed});
    Report rep;
    const NetworkSpec spec = random_network(rng, rep.network);
    Parameters params = init_parameters(spec, Seed{seed * 31 + 7});
    // nonzero biases so every code path carries a gradient
    for (double& v : params.theta()) v += 0.1 * rng.normal();

    const std::size_t n = 3, d = spec.input_shape().size(), k = spec.num_classes();
    std::vector<std::vector<double>> inputs(n, std::vector<double>(d));
    TrainingSet set;
    for (auto& x : inputs) {
        for (double& v : x) v = rng.uniform(-1, 1);
        set.inputs.emplace_back(x);
        const std::size_t y = rng.below(k);
        switch (regime) {
            case Regime::hard:
            case Regime::regularized: set.targets.push_back(one_hot(y, k)); break;
            case Regime::soft: set.targets.push_back(smooth_labels(one_hot(y, k), 0.1)); break;
            case Regime::probabilistic: set.targets.push_back(random_distribution(rng, k)); break;
        }
    }
    Parameters anchor = params;
    Penalty penalty;
    if (regime == Regime::regularized) {
        for (double& v : anchor.theta()) v += 0.3 * rng.normal();
        penalty.anchor = &anchor;
        penalty.lambda = rng.uniform(0.1, 2.0);
    }

    GradientEngine engine(spec, ExecPolicy::serial);
    const auto analytic = engine.compute(params, set, {}, penalty).gradient;

    Evaluator ev(spec);
    auto patterns = [&](const Parameters& p) {
        std::vector<std::uint64_t> out;
        for (const auto& x : inputs) {
            ev.forward(p, x);
            out.push_back(ev.activation_pattern());
        }
        return out;
    };
    const auto base = patterns(params);
    for (std::size_t j = 0; j < params.size(); ++j) {
        Parameters plus = params, minus = params;
        plus[j] += eps;
        minus[j] -= eps;
        if (patterns(plus) != base || patterns(minus) != base) {
            ++rep.skipped;
            continue;
        }
        const double lp = engine.compute(plus, set, {}, penalty).loss;
        const double lm = engine.compute(minus, set, {}, penalty).loss;
        const double numeric = (lp - lm) / (2 * eps);
        const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-6});
        rep.max_rel_error = std::max(rep.max_rel_error, std::abs(analytic[j] - numeric) / denom);
        ++rep.checked;
    }
    return rep;
}

}  // namespace gradcheck
