#include "plabel/prob_label.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "plabel/error.hpp"

namespace plabel {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> z) {
    return {z.data(), static_cast<Eigen::Index>(z.size())};
}

void check_symmetric(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw LinAlgError("covariance is not square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (!((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale))
        throw LinAlgError("covariance is not symmetric");
}

}  // namespace

double gaussian_log_density(std::span<const double> z, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& covariance) {
    const auto d = mean.size();
    if (static_cast<Eigen::Index>(z.size()) != d || covariance.rows() != d)
        throw ArgumentError("dimension mismatch in gaussian_log_density");
    check_symmetric(covariance);
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) throw LinAlgError("covariance is not positive definite");
    const Eigen::MatrixXd lower = llt.matrixL();
    const double log_det = 2.0 * lower.diagonal().array().log().sum();
    const Eigen::VectorXd white = llt.matrixL().solve(as_vector(z) - mean);
    return -0.5 * (static_cast<double>(d) * kLog2Pi + log_det + white.squaredNorm());
}

GaussianClassConditional::GaussianClassConditional(std::vector<Eigen::VectorXd> means,
                                                   std::vector<Eigen::MatrixXd> covariances,
                                                   ClassDistribution priors)
    : means_(std::move(means)), covariances_(std::move(covariances)), priors_(std::move(priors)) {
    const std::size_t k = means_.size();
    if (k < 2) throw ArgumentError("gaussian model needs at least 2 classes");
    if (covariances_.size() != k || priors_.size() != k)
        throw ArgumentError("means, covariances and priors disagree on the class count");
    const Eigen::Index d = means_.front().size();
    if (d == 0) throw ArgumentError("zero-dimensional feature model");
    for (std::size_t c = 0; c < k; ++c) {
        if (means_[c].size() != d || covariances_[c].rows() != d || covariances_[c].cols() != d)
            throw ArgumentError("class " + std::to_string(c) + " has inconsistent dimension");
        if (!means_[c].allFinite() || !covariances_[c].allFinite())
            throw ArgumentError("class " + std::to_string(c) + " has non-finite parameters");
        check_symmetric(covariances_[c]);

        Eigen::LLT<Eigen::MatrixXd> llt(covariances_[c]);
        if (llt.info() != Eigen::Success) {
            const double jitter = 1e-6 * covariances_[c].trace() / static_cast<double>(d);
            covariances_[c].diagonal().array() += jitter;
            llt.compute(covariances_[c]);
            if (llt.info() != Eigen::Success || !(jitter > 0.0))
                throw LinAlgError("covariance of class " + std::to_string(c) +
                                  " is not positive definite after jitter");
        }
        Eigen::MatrixXd lower = llt.matrixL();
        const double log_det = 2.0 * lower.diagonal().array().log().sum();
        chol_lower_.push_back(std::move(lower));
        log_norm_.push_back(-0.5 * (static_cast<double>(d) * kLog2Pi + log_det));
    }
}

double GaussianClassConditional::class_log_density(std::size_t k, std::span<const double> z) const {
    if (z.size() != dim()) throw ArgumentError("feature dimension mismatch");
    const Eigen::VectorXd white =
        chol_lower_[k].triangularView<Eigen::Lower>().solve(as_vector(z) - means_[k]);
    return log_norm_[k] - 0.5 * white.squaredNorm();
}

GaussianClassConditional GaussianClassConditional::with_priors(ClassDistribution priors) const {
    return GaussianClassConditional(means_, covariances_, std::move(priors));
}

GaussianClassConditional fit_gaussian_class_conditional(std::span<const FeatureVector> features,
                                                        std::span<const std::size_t> hard_labels,
                                                        std::size_t num_classes,
                                                        std::optional<ClassDistribution> priors) {
    if (features.size() != hard_labels.size()) throw ArgumentError("features and labels differ in length");
    if (features.empty()) throw InsufficientDataError("no training data");
    const auto d = static_cast<Eigen::Index>(features.front().size());

    std::vector<std::size_t> counts(num_classes, 0);
    std::vector<Eigen::VectorXd> means(num_classes, Eigen::VectorXd::Zero(d));
    for (std::size_t i = 0; i < features.size(); ++i) {
        const std::size_t y = hard_labels[i];
        if (y >= num_classes) throw ArgumentError("label out of range");
        if (static_cast<Eigen::Index>(features[i].size()) != d) throw ArgumentError("ragged features");
        means[y] += as_vector(features[i].values());
        ++counts[y];
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] < 2)
            throw InsufficientDataError("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                                        " instances; at least 2 are needed");
        means[c] /= static_cast<double>(counts[c]);
    }

    std::vector<Eigen::MatrixXd> covs(num_classes, Eigen::MatrixXd::Zero(d, d));
    for (std::size_t i = 0; i < features.size(); ++i) {
        const std::size_t y = hard_labels[i];
        const Eigen::VectorXd centered = as_vector(features[i].values()) - means[y];
        covs[y].noalias() += centered * centered.transpose();
    }
    for (std::size_t c = 0; c < num_classes; ++c) covs[c] /= static_cast<double>(counts[c]);

    if (!priors) {
        std::vector<double> freq(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c)
            freq[c] = static_cast<double>(counts[c]) / static_cast<double>(features.size());
        priors.emplace(std::move(freq));
    } else if (priors->size() != num_classes) {
        throw ArgumentError("prior has wrong class count");
    }
    return GaussianClassConditional(std::move(means), std::move(covs), std::move(*priors));
}

PosteriorResult normalize_log_joint(std::span<const double> log_joint) {
    const std::size_t k = log_joint.size();
    double top = -std::numeric_limits<double>::infinity();
    for (double v : log_joint) top = std::max(top, v);
    if (!std::isfinite(top)) {
        return {ClassDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k))), true};
    }
    std::vector<double> p(k);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        p[c] = std::exp(log_joint[c] - top);
        total += p[c];
    }
    for (double& v : p) v /= total;
    return {ClassDistribution(std::move(p)), false};
}

PosteriorResult bayes_posterior_checked(const GaussianClassConditional& model, std::span<const double> z) {
    const std::size_t k = model.num_classes();
    std::vector<double> log_joint(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double prior = model.priors()[c];
        log_joint[c] = prior > 0.0 ? std::log(prior) + model.class_log_density(c, z)
                                   : -std::numeric_limits<double>::infinity();
    }
    return normalize_log_joint(log_joint);
}

ClassDistribution bayes_posterior(const GaussianClassConditional& model, std::span<const double> z) {
    return bayes_posterior_checked(model, z).posterior;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

ClassDistribution logistic_posterior(const LogisticFeatureModel& model, std::span<const double> z) {
    if (z.size() != model.weights.size()) throw ArgumentError("feature dimension mismatch");
    double logit = model.bias;
    for (std::size_t j = 0; j < z.size(); ++j) logit += model.weights[j] * z[j];
    const double p = sigmoid(logit);
    return ClassDistribution({1.0 - p, p});
}

TrainConfig default_feature_model_config() {
    TrainConfig c;
    c.weight_decay = 1e-3;
    c.convergence_tol = 1e-6;
    c.epochs = 200000;
    c.learning_rate = 1.0;
    return c;
}

namespace {

// per-feature mean and population standard deviation (1 for constant features)
std::pair<std::vector<double>, std::vector<double>> feature_moments(std::span<const FeatureVector> features) {
    const std::size_t n = features.size(), d = features.front().size();
    std::vector<double> mu(d, 0.0), sd(d, 0.0);
    for (const auto& f : features)
        for (std::size_t j = 0; j < d; ++j) mu[j] += f[j];
    for (double& m : mu) m /= static_cast<double>(n);
    for (const auto& f : features)
        for (std::size_t j = 0; j < d; ++j) sd[j] += (f[j] - mu[j]) * (f[j] - mu[j]);
    for (double& s : sd) {
        s = std::sqrt(s / static_cast<double>(n));
        if (!(s > 1e-12)) s = 1.0;
    }
    return {std::move(mu), std::move(sd)};
}

}  // namespace

std::vector<double> logistic_objective_gradient(const LogisticFeatureModel& model,
                                                std::span<const FeatureVector> features,
                                                std::span<const std::size_t> hard_labels,
                                                double weight_decay) {
    if (features.empty() || features.size() != hard_labels.size())
        throw ArgumentError("need matching, non-empty features and labels");
    const std::size_t d = model.weights.size();
    std::vector<double> grad(d + 1, 0.0);
    const double inv_n = 1.0 / static_cast<double>(features.size());
    const auto [mu, sd] = feature_moments(features);
    for (std::size_t i = 0; i < features.size(); ++i) {
        double logit = model.bias;
        for (std::size_t j = 0; j < d; ++j) logit += model.weights[j] * features[i][j];
        const double r = (sigmoid(logit) - static_cast<double>(hard_labels[i])) * inv_n;
        for (std::size_t j = 0; j < d; ++j) grad[j] += r * features[i][j];
        grad[d] += r;
    }
    for (std::size_t j = 0; j < d; ++j) grad[j] += weight_decay * model.weights[j] * sd[j] * sd[j];
    return grad;
}

LogisticFeatureModel fit_logistic_feature_model(std::span<const FeatureVector> features,
                                                std::span<const std::size_t> hard_labels,
                                                const TrainConfig& config) {
    if (features.size() != hard_labels.size()) throw ArgumentError("features and labels differ in length");
    if (features.empty()) throw InsufficientDataError("no training data");
    const std::size_t n = features.size();
    const std::size_t d = features.front().size();

    std::size_t positives = 0;
    for (std::size_t y : hard_labels) {
        if (y > 1) throw UnsupportedError("logistic feature model only supports binary labels");
        positives += y;
    }
    if (positives == 0 || positives == n) {
        const double p = (static_cast<double>(positives) + 1.0) / (static_cast<double>(n) + 2.0);
        return {std::vector<double>(d, 0.0), std::log(p / (1.0 - p))};
    }

    const auto [mu, sd] = feature_moments(features);

    // w = v / sd, b = c - sum v mu / sd; curvature of the reparameterized
    // objective is at most (d + 1) / 4 + decay
    const double curvature = 0.25 * static_cast<double>(d + 1) + config.weight_decay;
    const double step = std::min(config.learning_rate, 1.0 / curvature);

    std::vector<double> v(d, 0.0);
    double c = 0.0;
    LogisticFeatureModel model{std::vector<double>(d, 0.0), 0.0};
    auto sync = [&] {
        double shift = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            model.weights[j] = v[j] / sd[j];
            shift += model.weights[j] * mu[j];
        }
        model.bias = c - shift;
    };
    sync();
    for (std::size_t it = 0; it < config.epochs; ++it) {
        const auto g = logistic_objective_gradient(model, features, hard_labels, config.weight_decay);
        double norm2 = 0.0;
        for (double x : g) norm2 += x * x;
        if (std::sqrt(norm2) < config.convergence_tol) break;
        for (std::size_t j = 0; j < d; ++j) v[j] -= step * (g[j] - g[d] * mu[j]) / sd[j];
        c -= step * g[d];
        sync();
    }
    return model;
}

ClassDistribution smooth_labels(const ClassDistribution& hard, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in [0,1)");
    const std::size_t k = hard.size();
    std::size_t hot = k;
    for (std::size_t c = 0; c < k; ++c) {
        if (hard[c] == 1.0 && hot == k)
            hot = c;
        else if (hard[c] != 0.0)
            throw ArgumentError("smooth_labels expects a one-hot distribution");
    }
    if (hot == k) throw ArgumentError("smooth_labels expects a one-hot distribution");
    std::vector<double> p(k, epsilon / static_cast<double>(k - 1));
    p[hot] = 1.0 - epsilon;
    return ClassDistribution(std::move(p));
}

ClassDistribution corrupt_posterior(const ClassDistribution& correct, const Corruption& mode, Seed seed) {
    std::vector<double> p(correct.probs().begin(), correct.probs().end());
    switch (mode.mode) {
        case Corruption::Mode::reflect:
            std::reverse(p.begin(), p.end());
            break;
        case Corruption::Mode::temper: {
            double total = 0.0;
            for (double& x : p) {
                x = mode.gamma == 0.0 ? 1.0 : std::pow(x, mode.gamma);
                total += x;
            }
            if (!(total > 0.0) || !std::isfinite(total)) {
                // all mass underflowed or overflowed: fall back to the argmax
                std::fill(p.begin(), p.end(), 0.0);
                p[correct.argmax()] = 1.0;
                total = 1.0;
            }
            for (double& x : p) x /= total;
            break;
        }
        case Corruption::Mode::permute: {
            Rng rng(seed);
            rng.shuffle(p);
            break;
        }
    }
    // rounding can leave the sum a few ulps off; push the residue into the largest entry
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    auto top = std::max_element(p.begin(), p.end());
    *top = std::clamp(*top + (1.0 - total), 0.0, 1.0);
    return ClassDistribution(std::move(p));
}

GaussianClassConditional swap_class_means(const GaussianClassConditional& model) {
    const std::size_t k = model.num_classes();
    std::vector<Eigen::VectorXd> means(k);
    for (std::size_t c = 0; c < k; ++c) means[c] = model.means()[(c + 1) % k];
    return GaussianClassConditional(std::move(means), model.covariances(), model.priors());
}

nlohmann::json to_json(const GaussianClassConditional& model) {
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < model.num_classes(); ++c) {
        const auto& m = model.means()[c];
        const auto& s = model.covariances()[c];
        nlohmann::json cov = nlohmann::json::array();
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index q = 0; q < s.cols(); ++q) row.push_back(s(r, q));
            cov.push_back(std::move(row));
        }
        classes.push_back({{"mean", std::vector<double>(m.data(), m.data() + m.size())}, {"cov", std::move(cov)}});
    }
    const auto pr = model.priors().probs();
    return {{"K", model.num_classes()},
            {"priors", std::vector<double>(pr.begin(), pr.end())},
            {"classes", std::move(classes)}};
}

GaussianClassConditional gaussian_model_from_json(const nlohmann::json& doc) {
    try {
        const auto k = doc.at("K").get<std::size_t>();
        const auto& classes = doc.at("classes");
        if (classes.size() != k) throw ArgumentError("'classes' length differs from K");
        std::vector<Eigen::VectorXd> means;
        std::vector<Eigen::MatrixXd> covs;
        for (const auto& cls : classes) {
            const auto m = cls.at("mean").get<std::vector<double>>();
            const auto rows = cls.at("cov").get<std::vector<std::vector<double>>>();
            const auto d = static_cast<Eigen::Index>(m.size());
            if (static_cast<Eigen::Index>(rows.size()) != d) throw ArgumentError("covariance size mismatch");
            Eigen::MatrixXd cov(d, d);
            for (Eigen::Index r = 0; r < d; ++r) {
                if (static_cast<Eigen::Index>(rows[r].size()) != d)
                    throw ArgumentError("covariance row size mismatch");
                for (Eigen::Index q = 0; q < d; ++q) cov(r, q) = rows[r][q];
            }
            means.emplace_back(Eigen::Map<const Eigen::VectorXd>(m.data(), d));
            covs.push_back(std::move(cov));
        }
        return GaussianClassConditional(std::move(means), std::move(covs),
                                        ClassDistribution(doc.at("priors").get<std::vector<double>>()));
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed gaussian model JSON: ") + e.what());
    }
}

nlohmann::json to_json(const LogisticFeatureModel& model) {
    return {{"weights", model.weights}, {"bias", model.bias}};
}

LogisticFeatureModel logistic_model_from_json(const nlohmann::json& doc) {
    try {
        LogisticFeatureModel m{doc.at("weights").get<std::vector<double>>(), doc.at("bias").get<double>()};
        for (double w : m.weights)
            if (!std::isfinite(w)) throw ArgumentError("non-finite logistic weight");
        if (!std::isfinite(m.bias)) throw ArgumentError("non-finite logistic bias");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed logistic model JSON: ") + e.what());
    }
}

}  // namespace plabel
