#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "plabel/core.hpp"
#include "plabel/train_config.hpp"

namespace plabel {

/// Log of the multivariate normal density. Throws LinAlgError when the
/// covariance is not positive definite; no jitter is applied here.
double gaussian_log_density(std::span<const double> z, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& covariance);

/// Per-class Gaussian feature model with class priors: the expert-knowledge
/// model whose Bayes posterior becomes the probabilistic label.
///
/// Covariances are factorized once at construction. A covariance that fails
/// Cholesky gets 1e-6 * trace / d added to its diagonal and is retried once;
/// the jittered matrix is what the model stores.
class GaussianClassConditional {
public:
    GaussianClassConditional(std::vector<Eigen::VectorXd> means,
                             std::vector<Eigen::MatrixXd> covariances, ClassDistribution priors);

    std::size_t num_classes() const { return means_.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(means_.front().size()); }
    const std::vector<Eigen::VectorXd>& means() const { return means_; }
    const std::vector<Eigen::MatrixXd>& covariances() const { return covariances_; }
    const ClassDistribution& priors() const { return priors_; }

    // log N(z; mean_k, cov_k) using the cached factor
    double class_log_density(std::size_t k, std::span<const double> z) const;

    GaussianClassConditional with_priors(ClassDistribution priors) const;

private:
    std::vector<Eigen::VectorXd> means_;
    std::vector<Eigen::MatrixXd> covariances_;
    ClassDistribution priors_;
    std::vector<Eigen::MatrixXd> chol_lower_;
    std::vector<double> log_norm_;  // -0.5 * (d log 2pi + log det)
};

/// Sample means and MLE covariances (divide by class count) per class.
/// Priors default to empirical class frequencies.
GaussianClassConditional fit_gaussian_class_conditional(
    std::span<const FeatureVector> features, std::span<const std::size_t> hard_labels,
    std::size_t num_classes, std::optional<ClassDistribution> priors = std::nullopt);

struct PosteriorResult {
    ClassDistribution posterior;
    bool underflow_fallback = false;  // every joint density was zero; posterior is uniform
};

PosteriorResult bayes_posterior_checked(const GaussianClassConditional& model, std::span<const double> z);

/// p(y = k | z) = prior_k N(z; k) / sum_j prior_j N(z; j), evaluated with log-sum-exp.
ClassDistribution bayes_posterior(const GaussianClassConditional& model, std::span<const double> z);

inline ClassDistribution bayes_posterior(const GaussianClassConditional& model, const FeatureVector& z) {
    return bayes_posterior(model, z.values());
}

// log-sum-exp normalization of per-class log joints; entries may be -inf
PosteriorResult normalize_log_joint(std::span<const double> log_joint);

struct LogisticFeatureModel {
    std::vector<double> weights;
    double bias = 0.0;
};

/// Binary logistic model p(y=1|z) = sigmoid(w.z + b) fitted by gradient descent
/// on mean cross-entropy + (weight_decay / 2) sum_j (w_j sd_j)^2, where sd_j is
/// the training standard deviation of feature j. Measuring the decay in
/// standardized units keeps its strength independent of the feature scale.
/// Iterates in standardized coordinates with a step bounded by the objective's
/// curvature, for at most config.epochs steps or until the raw-space gradient
/// norm drops below config.convergence_tol.
///
/// A single-class training set returns w = 0 and b = logit((n1 + 1) / (n + 2)).
LogisticFeatureModel fit_logistic_feature_model(std::span<const FeatureVector> features,
                                                std::span<const std::size_t> hard_labels,
                                                const TrainConfig& config);

// defaults used for the expert feature model: decay 1e-3, tol 1e-6, 200k steps
TrainConfig default_feature_model_config();

/// Gradient (dw..., db) of the fitted objective, for convergence checks. The
/// decay scales come from `features`.
std::vector<double> logistic_objective_gradient(const LogisticFeatureModel& model,
                                                std::span<const FeatureVector> features,
                                                std::span<const std::size_t> hard_labels,
                                                double weight_decay);

double sigmoid(double x);

ClassDistribution logistic_posterior(const LogisticFeatureModel& model, std::span<const double> z);

inline ClassDistribution logistic_posterior(const LogisticFeatureModel& model, const FeatureVector& z) {
    return logistic_posterior(model, z.values());
}

/// True class keeps 1 - epsilon, the rest share epsilon equally.
ClassDistribution smooth_labels(const ClassDistribution& hard, double epsilon);

struct Corruption {
    enum class Mode { reflect, temper, permute };
    Mode mode = Mode::reflect;
    double gamma = 1.0;  // exponent for temper

    static Corruption reflect() { return {Mode::reflect, 1.0}; }
    static Corruption temper(double g) { return {Mode::temper, g}; }
    static Corruption permute() { return {Mode::permute, 1.0}; }
};

/// Valid-but-wrong labels. reflect reverses the entry order, temper raises
/// entries to gamma and renormalizes, permute applies a seeded random
/// permutation of the entries.
ClassDistribution corrupt_posterior(const ClassDistribution& correct, const Corruption& mode, Seed seed);

/// Same model with class means exchanged (rotated for K > 2). Its posteriors
/// are the default "incorrect" probabilistic labels.
GaussianClassConditional swap_class_means(const GaussianClassConditional& model);

nlohmann::json to_json(const GaussianClassConditional& model);
GaussianClassConditional gaussian_model_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const LogisticFeatureModel& model);
LogisticFeatureModel logistic_model_from_json(const nlohmann::json& doc);

}  // namespace plabel
