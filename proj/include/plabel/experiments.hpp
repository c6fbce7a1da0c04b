#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plabel/core.hpp"
#include "plabel/metrics.hpp"
#include "plabel/network.hpp"
#include "plabel/prob_label.hpp"
#include "plabel/trainer.hpp"

namespace plabel {

struct MixtureComponent {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    ClassDistribution weights;

    // positive-definite covariances, consistent dimensions
    void validate() const;
    std::size_t dim() const { return static_cast<std::size_t>(components.front().mean.size()); }
};

/// Two bivariate Gaussians: mean (5,3), cov [[1,.5],[.5,1]] for class 0 and
/// mean (4,4), cov [[1,.7],[.7,1]] for class 1, equal weights.
MixtureSpec experiment1_mixture();

GaussianClassConditional as_class_conditional(const MixtureSpec& spec);

/// counts[k] draws from component k, labelled k, in class order.
Dataset sample_mixture(const MixtureSpec& spec, std::span<const std::size_t> counts, Seed seed);

ClassDistribution true_posterior(const MixtureSpec& spec, std::span<const double> x);

enum class SweepStrategy { hard, correct_prob, incorrect_prob, regularized };

std::string_view to_string(SweepStrategy s);
SweepStrategy parse_sweep_strategy(std::string_view name);
std::vector<SweepStrategy> all_sweep_strategies();

struct SweepConfig {
    std::vector<SweepStrategy> strategies = all_sweep_strategies();
    std::size_t reps = 100;
    std::vector<std::size_t> test_counts{1000, 1000};
    Seed seed{20190901};
    TrainConfig classifier = default_classifier_config();
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t folds = 5;
    std::size_t cv_min_n = 10;       // below this the regularized arm uses fallback_lambda
    double fallback_lambda = 1.0;
    // Per-coordinate z-scoring from training statistics. Off by default: with two
    // training points it maps every instance to (+-1, +-1) and discards the
    // direction information the soft labels carry.
    bool standardize = false;
    ExecPolicy policy = ExecPolicy::serial;

    // logistic regression on raw features, full batch, 2000 epochs, lr 0.1
    static TrainConfig default_classifier_config();
};

struct SweepSeries {
    SweepStrategy strategy;
    std::vector<double> mean;
    std::vector<double> stddev;              // sample standard deviation over repetitions
    std::vector<std::vector<double>> values;  // values[axis][rep]
};

struct SweepResult {
    std::string axis_name;
    std::vector<double> axis;
    std::vector<SweepSeries> series;
    std::size_t reps = 0;

    const SweepSeries& at(SweepStrategy s) const;
};

/// Accuracy on a fixed balanced test set versus the (balanced, even) training
/// size n, for every strategy, averaged over repetitions.
SweepResult run_accuracy_vs_n(const MixtureSpec& spec, std::span<const std::size_t> n_values,
                              const SweepConfig& config);

/// ECE on the fixed balanced test set with `majority` class-0 and m class-1
/// training instances for each m in minority_values. The axis holds m / majority.
SweepResult run_imbalance_vs_ece(const MixtureSpec& spec, std::size_t majority,
                                 std::span<const std::size_t> minority_values, const SweepConfig& config);

std::string sweep_csv(const SweepResult& result);  // axis,strategy,rep_mean,rep_std,reps

// Seed of one sweep cell; a pure function so serial and parallel runs agree.
Seed cell_seed(Seed master, std::size_t axis_index, std::size_t rep, std::size_t stream);

struct Roi {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    bool contains(std::size_t r, std::size_t c) const {
        return r >= row && r < row + height && c >= col && c < col + width;
    }
};

/// Synthetic stand-in for a three-region echogenicity task. Every image is a
/// base level plus a fixed texture outside the regions, a per-region
/// intensity offset drawn from N(offset_means[class][r], offset_std^2), and
/// N(0, noise_std^2) pixel noise, clipped to [0, 1].
struct SyntheticImageConfig {
    std::size_t height = 32;
    std::size_t width = 32;
    std::vector<Roi> rois{{4, 4, 8, 8}, {4, 20, 8, 8}, {20, 12, 8, 8}};
    std::vector<std::vector<double>> offset_means{{0.1, 0.1, 0.1}, {0.25, 0.0, 0.0}};
    double offset_std = 0.1;
    double noise_std = 0.05;
    double base_level = 0.35;
    double texture_amplitude = 0.05;
    double class0_prior = 0.62;

    void validate() const;
};

/// Returns (images, features) sharing hard labels. The feature vector of an
/// image holds its noiseless region offsets.
std::pair<Dataset, Dataset> generate_synthetic_images(const SyntheticImageConfig& config, std::size_t n, Seed seed);

FeatureVector extract_roi_means(const ImageGrid& image, std::span<const Roi> rois);

struct DistillConfig {
    SyntheticImageConfig images;
    std::size_t n_images = 505;
    double train_fraction = 0.7;
    TrainConfig cnn = default_cnn_config();
    std::vector<double> lambda_grid = default_lambda_grid();
    std::size_t folds = 3;
    Seed seed{20190901};
    ExecPolicy policy = ExecPolicy::serial;

    // reduced CNN: lr 0.05, 60 epochs, batch 8, smoothing 0.1
    static TrainConfig default_cnn_config();
};

struct StrategyOutcome {
    std::string name;  // hard, soft, prob, reg
    MetricsReport metrics;
    Parameters params;
    std::vector<double> loss_trace;
    std::vector<double> holdout_scores;
};

struct DistillationResult {
    NetworkSpec spec;
    LogisticFeatureModel feature_model;
    LambdaSearch lambda_search;
    std::vector<StrategyOutcome> strategies;
    std::vector<int> holdout_labels;

    const StrategyOutcome& at(std::string_view name) const;
};

/// Scores of a trained image model; takes raw images only.
std::vector<double> score_images(const NetworkSpec& spec, const Parameters& params,
                                 std::span<const ImageGrid> images);

/// Synthetic images -> stratified 70/30 split -> logistic feature model on the
/// training features -> probabilistic labels -> the reduced CNN trained with
/// hard, smoothed (epsilon), probabilistic and two-stage regularized targets
/// -> holdout metrics for each.
DistillationResult run_distillation_experiment(const DistillConfig& config);

std::string distillation_table_csv(const DistillationResult& result);   // metric,hard,soft,prob,reg
std::string distillation_table_text(const DistillationResult& result);

}  // namespace plabel
