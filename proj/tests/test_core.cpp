#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "plabel/core.hpp"
#include "plabel/error.hpp"

using namespace plabel;

namespace {

Dataset labelled(std::size_t n0, std::size_t n1) {
    std::vector<FeatureVector> f;
    std::vector<std::size_t> y;
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        f.emplace_back(std::vector<double>{static_cast<double>(i)});
        y.push_back(i < n0 ? 0 : 1);
    }
    return Dataset(std::move(f), std::move(y), 2);
}

}  // namespace

TEST_CASE("class distribution validation") {
    CHECK_NOTHROW(ClassDistribution({0.3, 0.7}));
    CHECK_THROWS_AS(ClassDistribution({1.0}), ArgumentError);
    CHECK_THROWS_AS(ClassDistribution({0.5, 0.6}), ArgumentError);
    CHECK_THROWS_AS(ClassDistribution({-0.1, 1.1}), ArgumentError);
    CHECK(ClassDistribution({0.2, 0.5, 0.3}).argmax() == 1);
}

TEST_CASE("one_hot") {
    CHECK(one_hot(1, 3) == ClassDistribution({0, 1, 0}));
    CHECK(one_hot(0, 2) == ClassDistribution({1, 0}));
    CHECK(one_hot(4, 5) == ClassDistribution({0, 0, 0, 0, 1}));
    CHECK_THROWS_AS(one_hot(3, 3), ArgumentError);
}

TEST_CASE("feature vectors and images reject bad values") {
    CHECK_THROWS_AS(FeatureVector(std::vector<double>{1.0, std::nan("")}), ArgumentError);
    CHECK_THROWS_AS(ImageGrid(2, 2, {0, 0, 0}), ArgumentError);
    CHECK_THROWS_AS(ImageGrid(1, 2, {0.5, 1.5}), ArgumentError);
    ImageGrid g(2, 3, {0, 0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(g.at(1, 2) == 0.5);
}

TEST_CASE("dataset checks labels and soft labels") {
    CHECK_THROWS_AS(Dataset(std::vector<FeatureVector>{FeatureVector({1.0})}, {2}, 2), ArgumentError);
    CHECK_THROWS_AS(Dataset(std::vector<FeatureVector>{FeatureVector({1.0})}, {0, 1}, 2), ArgumentError);
    Dataset d = labelled(3, 2);
    CHECK_THROWS_AS(d.soft_labels(), ConfigError);
    CHECK(d.class_counts() == std::vector<std::size_t>{3, 2});
    auto s = d.subset(std::vector<std::size_t>{4, 0});
    CHECK(s.size() == 2);
    CHECK(s.features()[0][0] == 4.0);
    CHECK(s.hard_labels() == std::vector<std::size_t>{1, 0});
}

TEST_CASE("split sizes use floor on the training side") {
    Dataset d = labelled(400, 285);
    auto sp = split_indices(d, 0.7, Seed{1}, false);
    CHECK(sp.train.size() == 479);  // floor(0.7 * 685)
    CHECK(sp.holdout.size() == 206);
    std::vector<std::size_t> all = sp.train;
    all.insert(all.end(), sp.holdout.begin(), sp.holdout.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("split determinism") {
    Dataset d = labelled(5, 5);
    auto a = split_indices(d, 0.5, Seed{9}, false);
    auto b = split_indices(d, 0.5, Seed{9}, false);
    CHECK(a.train == b.train);
    CHECK(a.holdout == b.holdout);
}

TEST_CASE("stratified split keeps class proportions") {
    Dataset d = labelled(62, 38);
    auto sp = split_indices(d, 0.7, Seed{3}, true);
    REQUIRE(sp.train.size() == 70);
    std::size_t c0 = 0;
    for (auto i : sp.train) c0 += d.hard_labels()[i] == 0;
    CHECK(c0 >= 43);
    CHECK(c0 <= 44);
}

TEST_CASE("split errors") {
    Dataset d = labelled(5, 5);
    CHECK_THROWS_AS(split_indices(d, 0.0, Seed{1}, false), ArgumentError);
    CHECK_THROWS_AS(split_indices(d, 1.0, Seed{1}, false), ArgumentError);
    Dataset tiny = labelled(0, 4);
    CHECK_THROWS_AS(split_indices(tiny, 0.5, Seed{1}, true), DegenerateSplitError);
}
