#include "plabel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "plabel/error.hpp"
#include "plabel/prob_label.hpp"

namespace plabel {

std::string_view to_string(LabelStrategy s) {
    switch (s) {
        case LabelStrategy::hard: return "hard";
        case LabelStrategy::soft: return "soft";
        case LabelStrategy::probabilistic: return "probabilistic";
        case LabelStrategy::regularized: return "regularized";
    }
    return "?";
}

LabelStrategy parse_label_strategy(std::string_view name) {
    if (name == "hard") return LabelStrategy::hard;
    if (name == "soft") return LabelStrategy::soft;
    if (name == "probabilistic" || name == "prob") return LabelStrategy::probabilistic;
    if (name == "regularized" || name == "reg") return LabelStrategy::regularized;
    throw ConfigError("unknown label strategy '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (epochs == 0) throw ConfigError("epochs must be at least 1");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (!(epsilon_smoothing >= 0.0 && epsilon_smoothing < 1.0)) throw ConfigError("epsilon_smoothing must lie in [0,1)");
    if (!(convergence_tol >= 0.0)) throw ConfigError("convergence_tol must be non-negative");
}

std::vector<ClassDistribution> resolve_targets(const Dataset& data, const TrainConfig& config) {
    std::vector<ClassDistribution> targets;
    targets.reserve(data.size());
    switch (config.label_strategy) {
        case LabelStrategy::hard:
        case LabelStrategy::regularized:
            for (std::size_t y : data.hard_labels()) targets.push_back(one_hot(y, data.num_classes()));
            break;
        case LabelStrategy::soft:
            for (std::size_t y : data.hard_labels())
                targets.push_back(smooth_labels(one_hot(y, data.num_classes()), config.epsilon_smoothing));
            break;
        case LabelStrategy::probabilistic:
            if (!data.has_soft_labels())
                throw ConfigError("probabilistic strategy needs soft labels in the dataset");
            targets = data.soft_labels();
            break;
    }
    return targets;
}

TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config,
                  const TrainOptions& options) {
    config.validate();
    if (data.empty()) throw ArgumentError("cannot train on an empty dataset");
    if (data.num_classes() != spec.num_classes())
        throw ArgumentError("dataset has " + std::to_string(data.num_classes()) + " classes, network outputs " +
                            std::to_string(spec.num_classes()));
    const bool regularized = config.label_strategy == LabelStrategy::regularized;
    if (regularized && !options.anchor) throw ConfigError("regularized strategy needs an anchor (theta_p)");

    TrainingSet set;
    set.targets = resolve_targets(data, config);
    set.inputs.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) set.inputs.push_back(data.input(i));

    Parameters params = options.initial   ? *options.initial
                        : regularized     ? *options.anchor
                                          : init_parameters(spec, derive_seed(config.seed, {1}));
    if (params.size() != spec.num_parameters()) throw ArgumentError("initial parameters do not match network");

    // The anchor term lambda |theta - theta_p|^2 is applied as an exact proximal
    // step after each gradient step, so large lambda stays stable at any rate.
    Penalty penalty;
    penalty.weight_decay = config.weight_decay;
    const double lambda = regularized ? config.lambda : 0.0;
    const double shrink = 2.0 * config.learning_rate * lambda;
    std::span<const double> anchor;
    if (regularized) {
        if (!options.anchor->same_layout(params)) throw ArgumentError("anchor does not match network");
        anchor = options.anchor->theta();
    }

    const std::size_t n = data.size();
    const std::size_t batch = config.batch_size == 0 ? n : std::min(config.batch_size, n);
    Rng order_rng(derive_seed(config.seed, {2}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    GradientEngine engine(spec, options.policy);
    std::vector<double> trace;
    trace.reserve(config.epochs);
    auto theta = params.theta();
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < n) order_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            std::span<const std::size_t> idx(order.data() + start, len);
            const LossGradient lg = engine.compute(params, set, idx, penalty);
            double loss = lg.loss;
            if (lambda > 0.0) {
                double dist = 0.0;
                for (std::size_t j = 0; j < theta.size(); ++j) dist += (theta[j] - anchor[j]) * (theta[j] - anchor[j]);
                loss += lambda * dist;
                for (std::size_t j = 0; j < theta.size(); ++j)
                    theta[j] = (theta[j] - config.learning_rate * lg.gradient[j] + shrink * anchor[j]) / (1.0 + shrink);
            } else {
                for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= config.learning_rate * lg.gradient[j];
            }
            epoch_loss += loss * static_cast<double>(len);
        }
        trace.push_back(epoch_loss / static_cast<double>(n));
        if (!std::isfinite(trace.back())) throw Error("training diverged (non-finite loss)");
        if (config.convergence_tol > 0.0 && trace.size() >= 2 &&
            std::abs(trace[trace.size() - 1] - trace[trace.size() - 2]) < config.convergence_tol)
            break;
    }
    for (double v : theta)
        if (!std::isfinite(v)) throw Error("training diverged (non-finite parameters)");
    return {std::move(params), std::move(trace)};
}

TwoStageResult train_two_stage(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config,
                               ExecPolicy policy) {
    if (!data.has_soft_labels()) throw ConfigError("two-stage training needs soft labels for stage 1");
    TrainConfig first = config;
    first.label_strategy = LabelStrategy::probabilistic;
    TrainResult stage1 = train(spec, data, first, {.policy = policy});

    TrainConfig second = config;
    second.label_strategy = LabelStrategy::regularized;
    TrainResult stage2 = train(spec, data, second, {.anchor = stage1.params, .initial = stage1.params, .policy = policy});
    return {std::move(stage1), std::move(stage2)};
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t folds, Seed seed) {
    if (folds < 2) throw ArgumentError("need at least 2 folds");
    if (folds > data.size()) throw ArgumentError("more folds than instances");
    const std::size_t k = data.num_classes();
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < data.size(); ++i) members[data.hard_labels()[i]].push_back(i);

    Rng rng(seed);
    std::vector<std::size_t> fold(data.size(), 0);
    std::size_t next = 0;
    for (auto& m : members) {
        rng.shuffle(m);
        for (std::size_t i : m) fold[i] = next++ % folds;
    }

    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> val(k, 0), tr(k, 0);
        for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == f ? val : tr)[data.hard_labels()[i]]++;
        for (std::size_t c = 0; c < k; ++c)
            if (val[c] == 0 || tr[c] == 0)
                throw DegenerateSplitError("fold " + std::to_string(f) + " is missing class " + std::to_string(c));
    }
    return fold;
}

std::vector<double> predict_scores(const NetworkSpec& spec, const Parameters& params, const Dataset& data) {
    Evaluator ev(spec);
    std::vector<double> scores(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) scores[i] = ev.forward(params, data.input(i))[1];
    return scores;
}

std::vector<std::size_t> predict_classes(const NetworkSpec& spec, const Parameters& params, const Dataset& data) {
    Evaluator ev(spec);
    std::vector<std::size_t> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto p = ev.forward(params, data.input(i));
        if (spec.binary_head())
            out[i] = p[1] >= 0.5 ? 1 : 0;  // ties classify positive
        else
            out[i] = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    return out;
}

LambdaSearch cross_validate_lambda(const NetworkSpec& spec, const Dataset& data,
                                   std::span<const double> candidates, std::size_t folds,
                                   const TrainConfig& config, ExecPolicy policy) {
    if (candidates.empty()) throw ArgumentError("no lambda candidates");
    for (double c : candidates)
        if (!(c >= 0.0)) throw ArgumentError("lambda candidates must be non-negative");
    LambdaSearch out;
    out.candidates.assign(candidates.begin(), candidates.end());
    out.mean_accuracy.assign(candidates.size(), 0.0);
    if (candidates.size() == 1) {
        out.chosen = candidates[0];
        return out;
    }
    if (!data.has_soft_labels()) throw ConfigError("lambda cross-validation needs soft labels");

    const auto fold = stratified_folds(data, folds, derive_seed(config.seed, {3}));
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < data.size(); ++i) (fold[i] == f ? va : tr).push_back(i);
        const Dataset train_part = data.subset(tr);
        const Dataset val_part = data.subset(va);

        TrainConfig first = config;
        first.label_strategy = LabelStrategy::probabilistic;
        first.seed = derive_seed(config.seed, {4, f});
        const Parameters anchor = train(spec, train_part, first, {.policy = policy}).params;

        for (std::size_t c = 0; c < candidates.size(); ++c) {
            TrainConfig second = config;
            second.label_strategy = LabelStrategy::regularized;
            second.lambda = candidates[c];
            second.seed = first.seed;
            const Parameters fitted =
                train(spec, train_part, second, {.anchor = anchor, .initial = anchor, .policy = policy}).params;
            const auto predicted = predict_classes(spec, fitted, val_part);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == val_part.hard_labels()[i];
            out.mean_accuracy[c] += static_cast<double>(correct) / static_cast<double>(predicted.size());
        }
    }
    for (double& a : out.mean_accuracy) a /= static_cast<double>(folds);

    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        const double a = out.mean_accuracy[c], b = out.mean_accuracy[best];
        if (a > b || (a == b && candidates[c] > candidates[best])) best = c;
    }
    out.chosen = candidates[best];
    return out;
}

}  // namespace plabel
