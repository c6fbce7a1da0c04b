#include <doctest.h>

#include <cmath>

#include "plabel/error.hpp"
#include "plabel/experiments.hpp"
#include "plabel/trainer.hpp"

using namespace plabel;

namespace {

Dataset mixture_with_posteriors(std::size_t per_class, Seed seed, bool reflected = false) {
    const auto spec = experiment1_mixture();
    const std::size_t counts[2] = {per_class, per_class};
    Dataset d = sample_mixture(spec, counts, seed);
    auto model = as_class_conditional(spec);
    if (reflected) model = swap_class_means(model);
    std::vector<ClassDistribution> soft;
    for (const auto& x : d.features()) soft.push_back(bayes_posterior(model, x));
    return d.with_soft_labels(std::move(soft));
}

TrainConfig logistic_config(Seed seed) {
    TrainConfig c = SweepConfig::default_classifier_config();
    c.epochs = 300;
    c.seed = seed;
    return c;
}

double max_abs_diff(const Parameters& a, const Parameters& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double distance(const Parameters& a, const Parameters& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("train config validation") {
    TrainConfig c;
    c.learning_rate = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.lambda = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_label_strategy("prob") == LabelStrategy::probabilistic);
    CHECK_THROWS_AS(parse_label_strategy("bogus"), ConfigError);
}

TEST_CASE("targets per strategy") {
    Dataset d = mixture_with_posteriors(2, Seed{1});
    TrainConfig c;
    c.label_strategy = LabelStrategy::hard;
    CHECK(resolve_targets(d, c)[0] == one_hot(d.hard_labels()[0], 2));
    c.label_strategy = LabelStrategy::soft;
    CHECK(resolve_targets(d, c)[0] == smooth_labels(one_hot(d.hard_labels()[0], 2), 0.1));
    c.label_strategy = LabelStrategy::probabilistic;
    CHECK(resolve_targets(d, c)[3] == d.soft_labels()[3]);
    CHECK_THROWS_AS(resolve_targets(d.without_soft_labels(), c), ConfigError);
    c.label_strategy = LabelStrategy::regularized;
    CHECK(resolve_targets(d, c)[1] == one_hot(d.hard_labels()[1], 2));
}

TEST_CASE("training is deterministic in the seed") {
    Dataset d = mixture_with_posteriors(10, Seed{2});
    const auto net = NetworkSpec::logistic(2);
    TrainConfig c = logistic_config(Seed{5});
    c.batch_size = 4;
    const auto a = train(net, d, c);
    const auto b = train(net, d, c);
    CHECK(a.params == b.params);
    CHECK(a.loss_trace == b.loss_trace);
    c.seed = Seed{6};
    CHECK_FALSE(train(net, d, c).params == a.params);
}

TEST_CASE("regularized training needs an anchor") {
    Dataset d = mixture_with_posteriors(3, Seed{2});
    TrainConfig c = logistic_config(Seed{1});
    c.label_strategy = LabelStrategy::regularized;
    CHECK_THROWS_AS(train(NetworkSpec::logistic(2), d, c), ConfigError);
}

TEST_CASE("lambda = 0 is hard fine-tuning from theta_p") {
    Dataset d = mixture_with_posteriors(5, Seed{3});
    const auto net = NetworkSpec::logistic(2);
    TrainConfig c = logistic_config(Seed{9});
    c.batch_size = 3;
    c.lambda = 0.0;
    const auto two = train_two_stage(net, d, c);
    TrainConfig hard = c;
    hard.label_strategy = LabelStrategy::hard;
    const auto tuned = train(net, d, hard, {.initial = two.stage1.params});
    CHECK(two.stage2.params == tuned.params);
    CHECK(two.stage2.loss_trace == tuned.loss_trace);
}

TEST_CASE("huge lambda pins theta to theta_p") {
    Dataset d = mixture_with_posteriors(5, Seed{4});
    const auto net = NetworkSpec::logistic(2);
    TrainConfig c = logistic_config(Seed{10});
    c.lambda = 1e8;
    const auto two = train_two_stage(net, d, c);
    CHECK(max_abs_diff(two.stage2.params, two.stage1.params) <= 1e-3);

    c.lambda = 1e6;
    c.epochs = 20;
    const auto pinned = train_two_stage(net, d, c);
    TrainConfig hard = c;
    hard.label_strategy = LabelStrategy::hard;
    const auto free = train(net, d, hard, {.initial = pinned.stage1.params});
    CHECK(distance(pinned.stage2.params, pinned.stage1.params) < distance(free.params, pinned.stage1.params));
}

TEST_CASE("stratified folds") {
    Dataset d = mixture_with_posteriors(7, Seed{5});
    const auto f = stratified_folds(d, 3, Seed{1});
    std::vector<std::size_t> per_fold(3, 0);
    for (auto x : f) ++per_fold[x];
    for (auto c : per_fold) CHECK((c == 4 || c == 5));
    CHECK(f == stratified_folds(d, 3, Seed{1}));
    CHECK_THROWS_AS(stratified_folds(mixture_with_posteriors(2, Seed{5}), 3, Seed{1}), DegenerateSplitError);
}

TEST_CASE("lambda search basics") {
    Dataset d = mixture_with_posteriors(6, Seed{6});
    const auto net = NetworkSpec::logistic(2);
    const std::vector<double> one{0.25};
    CHECK(cross_validate_lambda(net, d, one, 3, logistic_config(Seed{1})).chosen == 0.25);
    const std::vector<double> none;
    CHECK_THROWS_AS(cross_validate_lambda(net, d, none, 3, logistic_config(Seed{1})), ArgumentError);
    // identical candidates tie; the larger one wins
    const std::vector<double> twins{1e8, 1e9};
    const auto s = cross_validate_lambda(net, d, twins, 3, logistic_config(Seed{1}));
    CHECK(s.mean_accuracy[0] == s.mean_accuracy[1]);
    CHECK(s.chosen == 1e9);
}

TEST_CASE("lambda search follows label quality") {
    const auto net = NetworkSpec::logistic(2);
    const std::vector<double> grid{0.0, 1e8};
    int large_when_correct = 0, zero_when_reflected = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const Dataset good = mixture_with_posteriors(4, Seed{100 + s});
        const Dataset bad = mixture_with_posteriors(4, Seed{100 + s}, true);
        large_when_correct += cross_validate_lambda(net, good, grid, 2, logistic_config(Seed{s})).chosen == 1e8;
        zero_when_reflected += cross_validate_lambda(net, bad, grid, 2, logistic_config(Seed{s})).chosen == 0.0;
    }
    CHECK(large_when_correct > 10);
    CHECK(zero_when_reflected > 10);
}

TEST_CASE("logistic regression reaches Bayes accuracy at n = 60") {
    const auto spec = experiment1_mixture();
    // Monte-Carlo Bayes accuracy of the generating mixture
    const std::size_t big[2] = {500000, 500000};
    const Dataset mc = sample_mixture(spec, big, Seed{77});
    const auto model = as_class_conditional(spec);
    std::size_t right = 0;
    for (std::size_t i = 0; i < mc.size(); ++i)
        right += (bayes_posterior(model, mc.features()[i])[1] >= 0.5 ? 1u : 0u) == mc.hard_labels()[i];
    const double bayes = static_cast<double>(right) / static_cast<double>(mc.size());

    const std::size_t tc[2] = {1000, 1000};
    const Dataset test = sample_mixture(spec, tc, Seed{78});
    std::vector<int> labels(test.hard_labels().begin(), test.hard_labels().end());
    const auto net = NetworkSpec::logistic(2);
    double mean_acc = 0;
    for (std::uint64_t r = 0; r < 10; ++r) {
        const std::size_t n[2] = {30, 30};
        const Dataset d = sample_mixture(spec, n, Seed{200 + r});
        TrainConfig c = SweepConfig::default_classifier_config();
        c.seed = Seed{r};
        mean_acc += accuracy(predict_scores(net, train(net, d, c).params, test), labels) / 10.0;
    }
    CHECK(std::abs(mean_acc - bayes) <= 0.02);
}

TEST_CASE("serial and parallel training agree") {
    SyntheticImageConfig ic;
    ic.height = ic.width = 16;
    ic.rois = {{2, 2, 4, 4}, {2, 10, 4, 4}, {10, 6, 4, 4}};
    auto [images, feats] = generate_synthetic_images(ic, 24, Seed{1});
    const auto net = NetworkSpec::reduced_cnn(16, 16);
    TrainConfig c;
    c.epochs = 2;
    c.batch_size = 8;
    c.learning_rate = 0.05;
    c.seed = Seed{3};
    const auto a = train(net, images, c, {.policy = ExecPolicy::serial});
    const auto b = train(net, images, c, {.policy = ExecPolicy::parallel});
    CHECK(a.params == b.params);
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("ties at 0.5 predict the positive class") {
    const auto net = NetworkSpec::logistic(1);
    Parameters p(net.layout(), {0.0, 0.0});
    Dataset d(std::vector<FeatureVector>{FeatureVector({3.0})}, {0}, 2);
    CHECK(predict_classes(net, p, d)[0] == 1);
}
