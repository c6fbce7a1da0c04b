#include "plabel/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "plabel/error.hpp"
#include "plabel/format.hpp"

namespace plabel {

void MixtureSpec::validate() const {
    if (components.size() < 2) throw ArgumentError("mixture needs at least 2 components");
    if (weights.size() != components.size()) throw ArgumentError("mixture weights disagree with component count");
    const auto d = components.front().mean.size();
    for (const auto& c : components) {
        if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d)
            throw ArgumentError("mixture components have inconsistent dimensions");
        Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
        if (llt.info() != Eigen::Success) throw LinAlgError("mixture covariance is not positive definite");
    }
}

MixtureSpec experiment1_mixture() {
    MixtureComponent g1{Eigen::Vector2d(5.0, 3.0), (Eigen::Matrix2d() << 1.0, 0.5, 0.5, 1.0).finished()};
    MixtureComponent g2{Eigen::Vector2d(4.0, 4.0), (Eigen::Matrix2d() << 1.0, 0.7, 0.7, 1.0).finished()};
    return MixtureSpec{{g1, g2}, ClassDistribution({0.5, 0.5})};
}

GaussianClassConditional as_class_conditional(const MixtureSpec& spec) {
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
    for (const auto& c : spec.components) {
        means.push_back(c.mean);
        covs.push_back(c.covariance);
    }
    return GaussianClassConditional(std::move(means), std::move(covs), spec.weights);
}

Dataset sample_mixture(const MixtureSpec& spec, std::span<const std::size_t> counts, Seed seed) {
    spec.validate();
    if (counts.size() != spec.components.size()) throw ArgumentError("one count per mixture component required");
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (total == 0) throw ArgumentError("all component counts are zero");

    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(spec.dim());
    std::vector<FeatureVector> feats;
    std::vector<std::size_t> labels;
    feats.reserve(total);
    labels.reserve(total);
    Eigen::VectorXd noise(d);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const Eigen::MatrixXd lower = spec.components[k].covariance.llt().matrixL();
        for (std::size_t i = 0; i < counts[k]; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) noise[j] = rng.normal();
            const Eigen::VectorXd x = spec.components[k].mean + lower * noise;
            feats.emplace_back(std::vector<double>(x.data(), x.data() + d));
            labels.push_back(k);
        }
    }
    return Dataset(std::move(feats), std::move(labels), counts.size());
}

ClassDistribution true_posterior(const MixtureSpec& spec, std::span<const double> x) {
    return bayes_posterior(as_class_conditional(spec), x);
}

std::string_view to_string(SweepStrategy s) {
    switch (s) {
        case SweepStrategy::hard: return "hard";
        case SweepStrategy::correct_prob: return "correct-prob";
        case SweepStrategy::incorrect_prob: return "incorrect-prob";
        case SweepStrategy::regularized: return "regularized";
    }
    return "?";
}

SweepStrategy parse_sweep_strategy(std::string_view name) {
    for (auto s : all_sweep_strategies())
        if (to_string(s) == name) return s;
    throw ConfigError("unknown sweep strategy '" + std::string(name) + "'");
}

std::vector<SweepStrategy> all_sweep_strategies() {
    return {SweepStrategy::hard, SweepStrategy::correct_prob, SweepStrategy::incorrect_prob,
            SweepStrategy::regularized};
}

TrainConfig SweepConfig::default_classifier_config() {
    TrainConfig c;
    c.learning_rate = 0.1;
    c.epochs = 2000;
    c.batch_size = 0;
    return c;
}

const SweepSeries& SweepResult::at(SweepStrategy s) const {
    for (const auto& series : this->series)
        if (series.strategy == s) return series;
    throw ArgumentError("strategy '" + std::string(to_string(s)) + "' not in sweep result");
}

Seed cell_seed(Seed master, std::size_t axis_index, std::size_t rep, std::size_t stream) {
    return derive_seed(master, {axis_index, rep, stream});
}

namespace {

constexpr std::size_t kDataStream = 100;
constexpr std::size_t kTestStream = 101;

enum class SweepMetric { accuracy, ece };

struct Standardizer {
    std::vector<double> mean, sd;

    Standardizer(const Dataset& data, bool enabled) {
        const auto& f = data.features();
        const std::size_t d = f.front().size();
        mean.assign(d, 0.0);
        sd.assign(d, 0.0);
        if (!enabled) {
            sd.assign(d, 1.0);
            return;
        }
        for (const auto& x : f)
            for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
        for (double& m : mean) m /= static_cast<double>(f.size());
        for (const auto& x : f)
            for (std::size_t j = 0; j < d; ++j) sd[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
        for (double& s : sd) {
            s = std::sqrt(s / static_cast<double>(f.size()));
            if (!(s > 1e-12)) s = 1.0;
        }
    }

    Dataset apply(const Dataset& data) const {
        std::vector<FeatureVector> out;
        out.reserve(data.size());
        for (const auto& x : data.features()) {
            std::vector<double> z(x.size());
            for (std::size_t j = 0; j < z.size(); ++j) z[j] = (x[j] - mean[j]) / sd[j];
            out.emplace_back(std::move(z));
        }
        return Dataset(std::move(out), data.hard_labels(), data.num_classes(),
                       data.has_soft_labels() ? std::optional(data.soft_labels()) : std::nullopt);
    }
};

struct SweepContext {
    const MixtureSpec* spec;
    const SweepConfig* config;
    GaussianClassConditional correct_model;
    GaussianClassConditional incorrect_model;
    Dataset test_raw;
    std::vector<int> test_labels;
    NetworkSpec network;
    SweepMetric metric;
};

double evaluate(const SweepContext& ctx, const Standardizer& st, const Parameters& params) {
    const Dataset test = st.apply(ctx.test_raw);
    const auto scores = predict_scores(ctx.network, params, test);
    if (ctx.metric == SweepMetric::accuracy) return accuracy(scores, ctx.test_labels);
    return expected_calibration_error(scores, ctx.test_labels);
}

// one (axis, repetition) cell: fresh training data shared by every strategy
std::vector<double> run_cell(const SweepContext& ctx, std::span<const std::size_t> counts, std::size_t axis_index,
                             std::size_t rep) {
    const SweepConfig& cfg = *ctx.config;
    const Dataset raw = sample_mixture(*ctx.spec, counts, cell_seed(cfg.seed, axis_index, rep, kDataStream));

    std::vector<ClassDistribution> correct, incorrect;
    for (const auto& x : raw.features()) {
        correct.push_back(bayes_posterior(ctx.correct_model, x));
        incorrect.push_back(bayes_posterior(ctx.incorrect_model, x));
    }
    const Standardizer st(raw, cfg.standardize);
    const Dataset train_set = st.apply(raw);

    std::vector<double> out;
    out.reserve(cfg.strategies.size());
    for (SweepStrategy s : cfg.strategies) {
        TrainConfig tc = cfg.classifier;
        tc.seed = cell_seed(cfg.seed, axis_index, rep, static_cast<std::size_t>(s));
        Parameters params = zero_parameters(ctx.network);
        switch (s) {
            case SweepStrategy::hard:
                tc.label_strategy = LabelStrategy::hard;
                params = train(ctx.network, train_set, tc).params;
                break;
            case SweepStrategy::correct_prob:
                tc.label_strategy = LabelStrategy::probabilistic;
                params = train(ctx.network, train_set.with_soft_labels(correct), tc).params;
                break;
            case SweepStrategy::incorrect_prob:
                tc.label_strategy = LabelStrategy::probabilistic;
                params = train(ctx.network, train_set.with_soft_labels(incorrect), tc).params;
                break;
            case SweepStrategy::regularized: {
                const Dataset labelled = train_set.with_soft_labels(incorrect);
                const auto counts_now = labelled.class_counts();
                const std::size_t smallest = *std::min_element(counts_now.begin(), counts_now.end());
                tc.lambda = cfg.fallback_lambda;
                if (labelled.size() >= cfg.cv_min_n && smallest >= cfg.folds)
                    tc.lambda = cross_validate_lambda(ctx.network, labelled, cfg.lambda_grid, cfg.folds, tc).chosen;
                params = train_two_stage(ctx.network, labelled, tc).stage2.params;
                break;
            }
        }
        out.push_back(evaluate(ctx, st, params));
    }
    return out;
}

SweepResult run_sweep(const MixtureSpec& spec, const SweepConfig& config, std::string axis_name,
                      std::vector<double> axis, const std::vector<std::vector<std::size_t>>& counts,
                      SweepMetric metric) {
    spec.validate();
    if (config.reps == 0) throw ArgumentError("need at least one repetition");
    if (config.strategies.empty()) throw ArgumentError("no strategies selected");
    if (config.test_counts.size() != spec.components.size()) throw ArgumentError("test_counts size mismatch");
    config.classifier.validate();

    const GaussianClassConditional correct = as_class_conditional(spec);
    SweepContext ctx{&spec,
                     &config,
                     correct,
                     swap_class_means(correct),
                     sample_mixture(spec, config.test_counts, derive_seed(config.seed, {kTestStream})),
                     {},
                     NetworkSpec::logistic(spec.dim()),
                     metric};
    for (std::size_t y : ctx.test_raw.hard_labels()) ctx.test_labels.push_back(static_cast<int>(y));

    const std::size_t n_axis = axis.size();
    const std::size_t n_tasks = n_axis * config.reps;
    std::vector<std::vector<double>> cells(n_tasks);

    if (config.policy == ExecPolicy::serial) {
        for (std::size_t t = 0; t < n_tasks; ++t) cells[t] = run_cell(ctx, counts[t / config.reps], t / config.reps, t % config.reps);
    } else {
        std::exception_ptr failure;
        const auto n = static_cast<std::ptrdiff_t>(n_tasks);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto t = static_cast<std::size_t>(i);
            try {
                cells[t] = run_cell(ctx, counts[t / config.reps], t / config.reps, t % config.reps);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    }

    SweepResult result;
    result.axis_name = std::move(axis_name);
    result.axis = std::move(axis);
    result.reps = config.reps;
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
        SweepSeries series{config.strategies[s], {}, {}, {}};
        for (std::size_t a = 0; a < n_axis; ++a) {
            std::vector<double> vals(config.reps);
            for (std::size_t r = 0; r < config.reps; ++r) vals[r] = cells[a * config.reps + r][s];
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            const double sd = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
            series.mean.push_back(mean);
            series.stddev.push_back(sd);
            series.values.push_back(std::move(vals));
        }
        result.series.push_back(std::move(series));
    }
    return result;
}

}  // namespace

SweepResult run_accuracy_vs_n(const MixtureSpec& spec, std::span<const std::size_t> n_values,
                              const SweepConfig& config) {
    if (spec.components.size() != 2) throw UnsupportedError("accuracy sweep is defined for two components");
    if (n_values.empty()) throw ArgumentError("no training sizes given");
    std::vector<double> axis;
    std::vector<std::vector<std::size_t>> counts;
    for (std::size_t n : n_values) {
        if (n == 0 || n % 2 != 0) throw ArgumentError("training sizes must be even and positive, got " + std::to_string(n));
        axis.push_back(static_cast<double>(n));
        counts.push_back({n / 2, n / 2});
    }
    return run_sweep(spec, config, "n", std::move(axis), counts, SweepMetric::accuracy);
}

SweepResult run_imbalance_vs_ece(const MixtureSpec& spec, std::size_t majority,
                                 std::span<const std::size_t> minority_values, const SweepConfig& config) {
    if (spec.components.size() != 2) throw UnsupportedError("imbalance sweep is defined for two components");
    if (majority == 0) throw ArgumentError("majority count must be positive");
    if (minority_values.empty()) throw ArgumentError("no minority counts given");
    std::vector<double> axis;
    std::vector<std::vector<std::size_t>> counts;
    for (std::size_t m : minority_values) {
        if (m < 1 || m > majority) throw ArgumentError("minority counts must lie in [1, majority]");
        axis.push_back(static_cast<double>(m) / static_cast<double>(majority));
        counts.push_back({majority, m});
    }
    return run_sweep(spec, config, "imbalance_ratio", std::move(axis), counts, SweepMetric::ece);
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "axis,strategy,rep_mean,rep_std,reps\n";
    for (std::size_t a = 0; a < result.axis.size(); ++a)
        for (const auto& s : result.series)
            out << format_number(result.axis[a]) << ',' << to_string(s.strategy) << ',' << format_number(s.mean[a])
                << ',' << format_number(s.stddev[a]) << ',' << result.reps << '\n';
    return out.str();
}

void SyntheticImageConfig::validate() const {
    if (height == 0 || width == 0) throw ConfigError("image size must be positive");
    if (rois.empty()) throw ConfigError("at least one region of interest is required");
    for (std::size_t i = 0; i < rois.size(); ++i) {
        const Roi& r = rois[i];
        if (r.height == 0 || r.width == 0 || r.row + r.height > height || r.col + r.width > width)
            throw ConfigError("region " + std::to_string(i) + " is empty or out of bounds");
        for (std::size_t j = 0; j < i; ++j) {
            const Roi& o = rois[j];
            const bool disjoint = r.row + r.height <= o.row || o.row + o.height <= r.row ||
                                  r.col + r.width <= o.col || o.col + o.width <= r.col;
            if (!disjoint) throw ConfigError("regions " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
        }
    }
    if (offset_means.size() != 2) throw ConfigError("offset_means needs one row per class (2)");
    for (const auto& row : offset_means)
        if (row.size() != rois.size()) throw ConfigError("offset_means rows need one entry per region");
    if (!(offset_std >= 0.0) || !(noise_std >= 0.0)) throw ConfigError("standard deviations must be non-negative");
    if (!(class0_prior > 0.0 && class0_prior < 1.0)) throw ConfigError("class0_prior must lie in (0,1)");
}

std::pair<Dataset, Dataset> generate_synthetic_images(const SyntheticImageConfig& config, std::size_t n, Seed seed) {
    config.validate();
    if (n == 0) throw ArgumentError("need at least one image");
    Rng rng(seed);
    const std::size_t h = config.height, w = config.width, k = config.rois.size();

    std::vector<int> region(h * w, -1);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                if (config.rois[r].contains(y, x)) region[y * w + x] = static_cast<int>(r);
    std::vector<double> texture(h * w, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            if (region[y * w + x] < 0)
                texture[y * w + x] = config.texture_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(x) / 8.0) *
                                     std::cos(2.0 * std::numbers::pi * static_cast<double>(y) / 11.0);

    std::vector<ImageGrid> images;
    std::vector<FeatureVector> feats;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = rng.uniform() < config.class0_prior ? 0 : 1;
        std::vector<double> offsets(k);
        for (std::size_t r = 0; r < k; ++r) offsets[r] = config.offset_means[y][r] + config.offset_std * rng.normal();
        std::vector<double> px(h * w);
        for (std::size_t p = 0; p < h * w; ++p) {
            double v = config.base_level + texture[p] + config.noise_std * rng.normal();
            if (region[p] >= 0) v += offsets[static_cast<std::size_t>(region[p])];
            px[p] = std::clamp(v, 0.0, 1.0);
        }
        images.emplace_back(h, w, std::move(px));
        feats.emplace_back(std::move(offsets));
        labels.push_back(y);
    }
    return {Dataset(std::move(images), labels, 2), Dataset(std::move(feats), labels, 2)};
}

FeatureVector extract_roi_means(const ImageGrid& image, std::span<const Roi> rois) {
    std::vector<double> means;
    means.reserve(rois.size());
    for (const Roi& r : rois) {
        if (r.height == 0 || r.width == 0 || r.row + r.height > image.height() || r.col + r.width > image.width())
            throw ArgumentError("region of interest out of bounds");
        double sum = 0.0;
        for (std::size_t y = r.row; y < r.row + r.height; ++y)
            for (std::size_t x = r.col; x < r.col + r.width; ++x) sum += image.at(y, x);
        means.push_back(sum / static_cast<double>(r.height * r.width));
    }
    return FeatureVector(std::move(means));
}

TrainConfig DistillConfig::default_cnn_config() {
    TrainConfig c;
    c.learning_rate = 0.05;
    c.epochs = 60;
    c.batch_size = 8;
    c.epsilon_smoothing = 0.1;
    return c;
}

const StrategyOutcome& DistillationResult::at(std::string_view name) const {
    for (const auto& s : strategies)
        if (s.name == name) return s;
    throw ArgumentError("no strategy named '" + std::string(name) + "'");
}

std::vector<double> score_images(const NetworkSpec& spec, const Parameters& params, std::span<const ImageGrid> images) {
    Evaluator ev(spec);
    std::vector<double> scores;
    scores.reserve(images.size());
    for (const auto& img : images) scores.push_back(ev.forward(params, img.pixels())[1]);
    return scores;
}

DistillationResult run_distillation_experiment(const DistillConfig& config) {
    config.images.validate();
    config.cnn.validate();
    auto [images, features] = generate_synthetic_images(config.images, config.n_images, derive_seed(config.seed, {1}));
    const Split split = split_indices(images, config.train_fraction, derive_seed(config.seed, {2}), true);

    const Dataset train_feats = features.subset(split.train);
    const LogisticFeatureModel feature_model =
        fit_logistic_feature_model(train_feats.features(), train_feats.hard_labels(), default_feature_model_config());
    std::vector<ClassDistribution> prob_labels;
    for (const auto& z : train_feats.features()) prob_labels.push_back(logistic_posterior(feature_model, z));

    // from here on only pixels are used
    const Dataset train_images = images.subset(split.train).with_soft_labels(std::move(prob_labels));
    const Dataset holdout = images.subset(split.holdout);
    std::vector<int> holdout_labels;
    for (std::size_t y : holdout.hard_labels()) holdout_labels.push_back(static_cast<int>(y));

    const NetworkSpec spec = NetworkSpec::reduced_cnn(config.images.height, config.images.width);
    TrainConfig base = config.cnn;
    base.seed = derive_seed(config.seed, {3});

    std::vector<StrategyOutcome> outcomes;
    auto finish = [&](std::string name, TrainResult tr) {
        auto scores = score_images(spec, tr.params, holdout.images());
        MetricsReport report = evaluate_scores(scores, holdout_labels);
        outcomes.push_back({std::move(name), std::move(report), std::move(tr.params), std::move(tr.loss_trace),
                            std::move(scores)});
    };

    TrainConfig hard = base;
    hard.label_strategy = LabelStrategy::hard;
    finish("hard", train(spec, train_images, hard, {.policy = config.policy}));

    TrainConfig soft = base;
    soft.label_strategy = LabelStrategy::soft;
    finish("soft", train(spec, train_images, soft, {.policy = config.policy}));

    TrainConfig prob = base;
    prob.label_strategy = LabelStrategy::probabilistic;
    TrainResult prob_run = train(spec, train_images, prob, {.policy = config.policy});
    const Parameters theta_p = prob_run.params;
    finish("prob", std::move(prob_run));

    // stage 1 of the two-stage procedure is exactly the probabilistic run above
    LambdaSearch search =
        cross_validate_lambda(spec, train_images, config.lambda_grid, config.folds, base, config.policy);
    TrainConfig reg = base;
    reg.label_strategy = LabelStrategy::regularized;
    reg.lambda = search.chosen;
    finish("reg", train(spec, train_images, reg, {.anchor = theta_p, .initial = theta_p, .policy = config.policy}));

    return DistillationResult{spec, feature_model, std::move(search), std::move(outcomes), std::move(holdout_labels)};
}

std::string distillation_table_csv(const DistillationResult& result) {
    std::ostringstream out;
    out << "metric";
    for (const auto& s : result.strategies) out << ',' << s.name;
    out << '\n';
    auto row = [&](const char* name, auto get) {
        out << name;
        for (const auto& s : result.strategies) out << ',' << get(s.metrics);
        out << '\n';
    };
    row("accuracy", [](const MetricsReport& m) { return format_number(m.accuracy); });
    row("auc", [](const MetricsReport& m) { return m.auc ? format_number(*m.auc) : std::string("nan"); });
    row("hl", [](const MetricsReport& m) { return format_number(m.hl_statistic); });
    row("ece", [](const MetricsReport& m) { return format_number(m.ece); });
    return out.str();
}

std::string distillation_table_text(const DistillationResult& result) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "metric";
    for (const auto& s : result.strategies) out << std::right << std::setw(10) << s.name;
    out << '\n' << std::fixed;
    auto row = [&](const char* name, auto get) {
        out << std::left << std::setw(10) << name;
        for (const auto& s : result.strategies) out << std::right << std::setw(10) << std::setprecision(4) << get(s.metrics);
        out << '\n';
    };
    row("accuracy", [](const MetricsReport& m) { return m.accuracy; });
    row("auc", [](const MetricsReport& m) { return m.auc.value_or(std::nan("")); });
    row("hl", [](const MetricsReport& m) { return m.hl_statistic; });
    row("ece", [](const MetricsReport& m) { return m.ece; });
    return out.str();
}

}  // namespace plabel
