#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "plabel/error.hpp"
#include "plabel/metrics.hpp"
#include "plabel/random.hpp"

using namespace plabel;

namespace {

// O(n^2) pair enumeration; ties count one half
double auc_by_pairs(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                ++pairs;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("accuracy examples") {
    CHECK(accuracy(std::vector<double>{0.6, 0.4}, std::vector<int>{1, 0}) == 1.0);
    CHECK(accuracy(std::vector<double>{0.5}, std::vector<int>{1}) == 1.0);
    CHECK(accuracy(std::vector<double>{0.9, 0.8, 0.2, 0.4}, std::vector<int>{1, 0, 0, 1}) == 0.5);
    CHECK_THROWS_AS(accuracy(std::vector<double>{0.5}, std::vector<int>{1, 0}), ArgumentError);
    CHECK_THROWS_AS(accuracy(std::vector<double>{0.5}, std::vector<int>{2}), ArgumentError);
}

TEST_CASE("auc examples") {
    CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}) == 1.0);
    CHECK(roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1, 0}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.9, 0.7, 0.7, 0.1}, std::vector<int>{1, 1, 0, 0}) == 0.875);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.2, 0.4}, std::vector<int>{1, 1}), UndefinedMetricError);
}

TEST_CASE("rank auc matches pair enumeration") {
    Rng rng(Seed{21});
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.below(60);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(8)) / 8.0;  // coarse grid forces ties
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 0;
        y[1] = 1;
        CHECK(roc_auc(s, y) == doctest::Approx(auc_by_pairs(s, y)).epsilon(1e-12));
    }
}

TEST_CASE("ece examples") {
    CHECK(expected_calibration_error(std::vector<double>{1, 1, 0, 0}, std::vector<int>{1, 1, 0, 0}) == 0.0);
    std::vector<int> seven(10, 0);
    std::fill(seven.begin(), seven.begin() + 7, 1);
    CHECK(expected_calibration_error(std::vector<double>(10, 0.7), seven) == doctest::Approx(0.0).epsilon(1e-12));
    std::vector<int> half(10, 0);
    std::fill(half.begin(), half.begin() + 5, 1);
    CHECK(std::abs(expected_calibration_error(std::vector<double>(10, 0.9), half) - 0.4) <= 1e-12);
}

TEST_CASE("hosmer-lemeshow examples") {
    std::vector<int> six(10, 0);
    std::fill(six.begin(), six.begin() + 6, 1);
    CHECK(std::abs(hosmer_lemeshow(std::vector<double>(10, 0.3), six, 1) - 9.0 / 2.1) <= 1e-12);
    // every group observed = expected
    std::vector<double> flat(20, 0.5);
    std::vector<int> alt(20);
    for (int i = 0; i < 20; ++i) alt[i] = i % 2;
    CHECK(hosmer_lemeshow(flat, alt, 1) == 0.0);
    CHECK_THROWS_AS(hosmer_lemeshow(flat, alt, 30), ArgumentError);
}

TEST_CASE("hosmer-lemeshow is invariant to input order") {
    Rng rng(Seed{4});
    std::vector<double> s(57);
    std::vector<int> y(57);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = static_cast<double>(rng.below(20)) / 20.0;
        y[i] = rng.uniform() < s[i];
    }
    const double ref = hosmer_lemeshow(s, y);
    std::vector<std::size_t> perm(s.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (int t = 0; t < 10; ++t) {
        rng.shuffle(perm);
        std::vector<double> ps;
        std::vector<int> py;
        for (auto i : perm) {
            ps.push_back(s[i]);
            py.push_back(y[i]);
        }
        CHECK(hosmer_lemeshow(ps, py) == ref);
    }
}

TEST_CASE("reliability table") {
    const std::vector<double> s(7, 0.33);
    const std::vector<int> y{1, 0, 0, 1, 0, 0, 0};
    const auto rows = reliability_table(s, y);
    REQUIRE(rows.size() == 10);
    std::size_t total = 0, populated = 0;
    for (const auto& r : rows) {
        total += r.count;
        populated += r.count > 0;
    }
    CHECK(total == 7);
    CHECK(populated == 1);
    CHECK(rows[3].count == 7);
    CHECK(rows[3].mean_confidence == doctest::Approx(0.33));
    CHECK(rows[3].empirical_accuracy == doctest::Approx(2.0 / 7.0));
    CHECK(reliability_table(std::vector<double>{1.0}, std::vector<int>{1})[9].count == 1);
}

TEST_CASE("oracle scores are calibrated") {
    Rng rng(Seed{8});
    std::vector<double> s(100000);
    std::vector<int> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.uniform();
        y[i] = rng.uniform() < s[i] ? 1 : 0;
    }
    for (const auto& r : reliability_table(s, y))
        if (r.count > 0) CHECK(std::abs(r.mean_confidence - r.empirical_accuracy) <= 0.05);
    CHECK(expected_calibration_error(s, y) <= 0.03);
    CHECK(hosmer_lemeshow(s, y) < 15.51);
}

TEST_CASE("evaluate_scores leaves an undefined AUC empty") {
    const auto r = evaluate_scores(std::vector<double>{0.2, 0.7, 0.9}, std::vector<int>{1, 1, 1});
    CHECK_FALSE(r.auc.has_value());
    CHECK(r.n == 3);
    CHECK(metrics_csv(r).find("nan") != std::string::npos);
}

TEST_CASE("decision boundary grid") {
    const auto flat = decision_boundary_grid([](std::span<const double>) { return 0.5; }, 2, {0, 1}, {0, 1}, 7, 5);
    CHECK(flat.scores.size() == 35);
    CHECK(flat.nx == 7);
    for (double v : flat.scores) CHECK(v == 0.5);

    auto logistic = [](std::span<const double> z) { return 1.0 / (1.0 + std::exp(-(z[0] - 5.0))); };
    const auto g = decision_boundary_grid(logistic, 2, {0, 10}, {0, 10}, 101, 11);
    CHECK(g.x_at(0) == 0.0);
    CHECK(g.x_at(100) == 10.0);
    for (std::size_t r = 0; r < g.ny; ++r) {
        std::size_t first = g.nx;
        for (std::size_t c = 0; c < g.nx && first == g.nx; ++c)
            if (g.at(r, c) >= 0.5) first = c;
        CHECK(std::abs(g.x_at(first) - 5.0) <= 0.1);
    }
    CHECK_THROWS_AS(decision_boundary_grid(logistic, 3, {0, 1}, {0, 1}, 2, 2), UnsupportedError);
    CHECK(boundary_csv(flat).substr(0, 10) == "x,y,score\n");
}
