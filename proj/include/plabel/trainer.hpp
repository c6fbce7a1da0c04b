#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "plabel/core.hpp"
#include "plabel/network.hpp"
#include "plabel/train_config.hpp"

namespace plabel {

/// Targets per instance for a label strategy:
///   hard          one-hot of the hard label
///   soft          smooth_labels(one-hot, epsilon_smoothing)
///   probabilistic the dataset's soft labels (ConfigError when absent)
///   regularized   one-hot, as for hard; the anchor penalty lives in the trainer
std::vector<ClassDistribution> resolve_targets(const Dataset& data, const TrainConfig& config);

struct TrainOptions {
    std::optional<Parameters> anchor = std::nullopt; // theta_p for the regularized strategy
    std::optional<Parameters> initial = std::nullopt; // start point; defaults to the anchor, else seeded init
    ExecPolicy policy = ExecPolicy::serial;
};

struct TrainResult {
    Parameters params;
    std::vector<double> loss_trace;  // objective per epoch, measured before each epoch's updates
};

/// Seeded mini-batch gradient descent with a fixed learning rate. Batches come
/// from a per-epoch shuffle unless the batch covers the whole dataset.
TrainResult train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config,
                  const TrainOptions& options = {});

struct TwoStageResult {
    TrainResult stage1;  // probabilistic targets -> theta_p
    TrainResult stage2;  // hard targets + lambda |theta - theta_p|^2, started at theta_p
};

TwoStageResult train_two_stage(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config,
                               ExecPolicy policy = ExecPolicy::serial);

/// Stratified fold assignment: fold[i] in [0, folds). Throws
/// DegenerateSplitError if any fold misses a class on either side.
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t folds, Seed seed);

struct LambdaSearch {
    double chosen = 0.0;
    std::vector<double> candidates;
    std::vector<double> mean_accuracy;  // aligned with candidates
};

/// Chooses lambda by mean validation accuracy of the two-stage procedure over
/// seeded stratified folds. Ties go to the larger lambda.
LambdaSearch cross_validate_lambda(const NetworkSpec& spec, const Dataset& data,
                                   std::span<const double> candidates, std::size_t folds,
                                   const TrainConfig& config, ExecPolicy policy = ExecPolicy::serial);

inline const std::vector<double>& default_lambda_grid() {
    static const std::vector<double> grid{0.0, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0};
    return grid;
}

// P(class 1) for binary heads; the score used by the metrics module
std::vector<double> predict_scores(const NetworkSpec& spec, const Parameters& params, const Dataset& data);
std::vector<std::size_t> predict_classes(const NetworkSpec& spec, const Parameters& params, const Dataset& data);

}  // namespace plabel
