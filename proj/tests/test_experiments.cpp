#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "plabel/error.hpp"
#include "plabel/experiments.hpp"

using namespace plabel;

TEST_CASE("mixture sampling") {
    const auto spec = experiment1_mixture();
    const std::size_t counts[2] = {1000, 1000};
    const Dataset d = sample_mixture(spec, counts, Seed{1});
    CHECK(d.size() == 2000);
    CHECK(d.class_counts() == std::vector<std::size_t>{1000, 1000});
    const std::size_t pool[2] = {30, 30};
    CHECK(sample_mixture(spec, pool, Seed{2}).size() == 60);
    CHECK(sample_mixture(spec, pool, Seed{2}).features() == sample_mixture(spec, pool, Seed{2}).features());
    const std::size_t none[2] = {0, 0};
    CHECK_THROWS_AS(sample_mixture(spec, none, Seed{1}), ArgumentError);
}

TEST_CASE("sample mean converges") {
    const auto spec = experiment1_mixture();
    const std::size_t counts[2] = {100000, 0};
    const Dataset d = sample_mixture(spec, counts, Seed{3});
    double m0 = 0, m1 = 0;
    for (const auto& x : d.features()) {
        m0 += x[0];
        m1 += x[1];
    }
    CHECK(std::abs(m0 / 1e5 - 5.0) < 0.02);
    CHECK(std::abs(m1 / 1e5 - 3.0) < 0.02);
}

TEST_CASE("true posterior") {
    const double z[2] = {5, 3};
    const auto p = true_posterior(experiment1_mixture(), z);
    CHECK(p[0] == doctest::Approx(0.9585).epsilon(1e-3));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
    MixtureSpec sym{{{Eigen::Vector2d(0, 1), Eigen::Matrix2d::Identity()},
                     {Eigen::Vector2d(0, -1), Eigen::Matrix2d::Identity()}},
                    ClassDistribution({0.5, 0.5})};
    const double on_locus[2] = {4.0, 0.0};
    CHECK(true_posterior(sym, on_locus)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("invalid mixtures") {
    MixtureSpec bad = experiment1_mixture();
    bad.components[1].covariance(0, 1) = bad.components[1].covariance(1, 0) = 2.0;
    CHECK_THROWS_AS(bad.validate(), LinAlgError);
}

TEST_CASE("sweep shape and determinism") {
    SweepConfig cfg;
    cfg.reps = 2;
    cfg.test_counts = {200, 200};
    cfg.classifier.epochs = 50;
    const std::vector<std::size_t> ns{2, 4, 10};
    const auto a = run_accuracy_vs_n(experiment1_mixture(), ns, cfg);
    CHECK(a.axis == std::vector<double>{2, 4, 10});
    CHECK(a.series.size() == 4);
    CHECK(a.reps == 2);
    for (const auto& s : a.series) {
        CHECK(s.mean.size() == 3);
        CHECK(s.values[0].size() == 2);
    }
    const auto b = run_accuracy_vs_n(experiment1_mixture(), ns, cfg);
    CHECK(sweep_csv(a) == sweep_csv(b));
    cfg.policy = ExecPolicy::parallel;
    CHECK(sweep_csv(run_accuracy_vs_n(experiment1_mixture(), ns, cfg)) == sweep_csv(a));
    const std::vector<std::size_t> odd{3};
    CHECK_THROWS_AS(run_accuracy_vs_n(experiment1_mixture(), odd, cfg), ArgumentError);
    CHECK(sweep_csv(a).substr(0, 33) == "axis,strategy,rep_mean,rep_std,re");
}

TEST_CASE("imbalance sweep axis") {
    SweepConfig cfg;
    cfg.reps = 1;
    cfg.test_counts = {100, 100};
    cfg.classifier.epochs = 20;
    cfg.strategies = {SweepStrategy::hard, SweepStrategy::correct_prob};
    std::vector<std::size_t> ms{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto r = run_imbalance_vs_ece(experiment1_mixture(), 10, ms, cfg);
    CHECK(r.axis.size() == 10);
    CHECK(r.axis.front() == 0.1);
    CHECK(r.axis.back() == 1.0);
    const std::vector<std::size_t> too_many{11};
    CHECK_THROWS_AS(run_imbalance_vs_ece(experiment1_mixture(), 10, too_many, cfg), ArgumentError);
    CHECK(parse_sweep_strategy("correct-prob") == SweepStrategy::correct_prob);
    CHECK_THROWS_AS(parse_sweep_strategy("x"), ConfigError);
}

TEST_CASE("synthetic images") {
    SyntheticImageConfig cfg;
    cfg.noise_std = 0.0;
    cfg.offset_std = 0.0;
    auto [images, feats] = generate_synthetic_images(cfg, 20, Seed{4});
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto m = extract_roi_means(images.images()[i], cfg.rois);
        const auto y = images.hard_labels()[i];
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(m[r] == doctest::Approx(cfg.base_level + cfg.offset_means[y][r]).epsilon(1e-12));
            CHECK(feats.features()[i][r] == cfg.offset_means[y][r]);
        }
    }
    const auto [a, fa] = generate_synthetic_images(SyntheticImageConfig{}, 505, Seed{5});
    const auto [b, fb] = generate_synthetic_images(SyntheticImageConfig{}, 505, Seed{5});
    CHECK(a.images() == b.images());
    // 313 expected, binomial sd about 11
    CHECK(std::abs(static_cast<double>(a.class_counts()[0]) - 313.0) < 45.0);

    SyntheticImageConfig overlap;
    overlap.rois = {{0, 0, 8, 8}, {4, 4, 8, 8}, {20, 20, 4, 4}};
    CHECK_THROWS_AS(overlap.validate(), ConfigError);
    SyntheticImageConfig outside;
    outside.rois[2].col = 30;
    CHECK_THROWS_AS(outside.validate(), ConfigError);
}

TEST_CASE("roi means") {
    const std::vector<Roi> rois{{0, 0, 2, 2}, {2, 2, 2, 2}, {0, 2, 2, 2}};
    CHECK(extract_roi_means(ImageGrid(4, 4, std::vector<double>(16, 0.25)), rois) ==
          FeatureVector({0.25, 0.25, 0.25}));
    std::vector<double> px(16, 0.0);
    px[0] = px[1] = px[4] = px[5] = 1.0;
    CHECK(extract_roi_means(ImageGrid(4, 4, px), rois) == FeatureVector({1.0, 0.0, 0.0}));
    std::vector<double> checker(16);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) checker[r * 4 + c] = (r + c) % 2;
    CHECK(extract_roi_means(ImageGrid(4, 4, checker), rois)[1] == 0.5);
    const std::vector<Roi> outside{{3, 3, 2, 2}};
    CHECK_THROWS_AS(extract_roi_means(ImageGrid(4, 4, checker), outside), ArgumentError);
}

TEST_CASE("small distillation run has the table shape") {
    DistillConfig cfg;
    cfg.images.height = cfg.images.width = 16;
    cfg.images.rois = {{2, 2, 4, 4}, {2, 10, 4, 4}, {10, 6, 4, 4}};
    cfg.n_images = 60;
    cfg.cnn.epochs = 2;
    cfg.lambda_grid = {0.0, 1.0};
    const auto r = run_distillation_experiment(cfg);
    REQUIRE(r.strategies.size() == 4);
    CHECK(r.strategies[0].name == "hard");
    CHECK(r.strategies[3].name == "reg");
    CHECK(r.holdout_labels.size() == 18);
    const auto csv = distillation_table_csv(r);
    CHECK(csv.substr(0, csv.find('\n')) == "metric,hard,soft,prob,reg");
    CHECK(csv.find("\naccuracy,") != std::string::npos);
    CHECK(csv.find("\nauc,") != std::string::npos);
    CHECK(csv.find("\nhl,") != std::string::npos);
    CHECK(csv.find("\nece,") != std::string::npos);
    CHECK(DistillConfig{}.cnn.epsilon_smoothing == 0.1);
    CHECK(distillation_table_csv(run_distillation_experiment(cfg)) == csv);
}

namespace {

// Spearman rank correlation; no ties expected in the inputs used here
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double d2 = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST_CASE("correct-prob accuracy grows with n") {
    SweepConfig c;
    c.strategies = {SweepStrategy::correct_prob};
    c.reps = 100;
    std::vector<std::size_t> ns;
    for (std::size_t n = 2; n <= 60; n += 2) ns.push_back(n);
    const auto r = run_accuracy_vs_n(experiment1_mixture(), ns, c);
    CHECK(spearman(r.axis, r.at(SweepStrategy::correct_prob).mean) > 0.8);
}

TEST_CASE("full-batch logistic loss is non-increasing at a small step") {
    const auto spec = experiment1_mixture();
    const std::size_t counts[2] = {30, 30};
    const Dataset raw = sample_mixture(spec, counts, Seed{17});
    // z-score with training statistics
    std::vector<double> mu(2, 0.0), sd(2, 0.0);
    for (const auto& x : raw.features())
        for (std::size_t j = 0; j < 2; ++j) mu[j] += x[j] / 60.0;
    for (const auto& x : raw.features())
        for (std::size_t j = 0; j < 2; ++j) sd[j] += (x[j] - mu[j]) * (x[j] - mu[j]) / 60.0;
    std::vector<FeatureVector> z;
    for (const auto& x : raw.features())
        z.emplace_back(std::vector<double>{(x[0] - mu[0]) / std::sqrt(sd[0]), (x[1] - mu[1]) / std::sqrt(sd[1])});
    const Dataset d(std::move(z), raw.hard_labels(), 2);

    TrainConfig tc = SweepConfig::default_classifier_config();
    tc.learning_rate = 1e-3;
    tc.epochs = 300;
    tc.label_strategy = LabelStrategy::hard;
    const auto run = train(NetworkSpec::logistic(2), d, tc);
    for (std::size_t e = 1; e < run.loss_trace.size(); ++e) CHECK(run.loss_trace[e] <= run.loss_trace[e - 1]);
}
