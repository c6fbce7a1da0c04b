#include "plabel/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "plabel/error.hpp"

namespace plabel {

ClassDistribution::ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) throw ArgumentError("class distribution needs at least 2 classes");
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0))
            throw ArgumentError("class probability outside [0,1]: " + std::to_string(p));
        total += p;
    }
    if (std::abs(total - 1.0) > kNormTolerance)
        throw ArgumentError("class probabilities sum to " + std::to_string(total));
}

std::size_t ClassDistribution::argmax() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
        if (!std::isfinite(v)) throw ArgumentError("feature vector has a non-finite entry");
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::vector<double> intensities)
    : height_(height), width_(width), pixels_(std::move(intensities)) {
    if (pixels_.size() != height_ * width_)
        throw ArgumentError("image has " + std::to_string(pixels_.size()) + " pixels, expected " +
                            std::to_string(height_ * width_));
    for (double v : pixels_)
        if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("image intensity outside [0,1]");
}

namespace {

std::size_t input_count(const Inputs& inputs) {
    return std::visit([](const auto& v) { return v.size(); }, inputs);
}

}  // namespace

Dataset::Dataset(Inputs inputs, std::vector<std::size_t> hard_labels, std::size_t num_classes,
                 std::optional<std::vector<ClassDistribution>> soft_labels)
    : inputs_(std::move(inputs)),
      hard_labels_(std::move(hard_labels)),
      num_classes_(num_classes),
      soft_labels_(std::move(soft_labels)) {
    if (num_classes_ < 2) throw ArgumentError("dataset needs at least 2 classes");
    if (input_count(inputs_) != hard_labels_.size())
        throw ArgumentError("inputs and hard labels differ in length");
    for (std::size_t y : hard_labels_)
        if (y >= num_classes_) throw ArgumentError("hard label " + std::to_string(y) + " >= K");
    if (soft_labels_) {
        if (soft_labels_->size() != hard_labels_.size())
            throw ArgumentError("soft labels and hard labels differ in length");
        for (const auto& s : *soft_labels_)
            if (s.size() != num_classes_) throw ArgumentError("soft label has wrong class count");
    }
    if (auto* images = std::get_if<std::vector<ImageGrid>>(&inputs_); images && !images->empty()) {
        for (const auto& img : *images)
            if (img.height() != images->front().height() || img.width() != images->front().width())
                throw ArgumentError("images differ in size");
    }
    if (auto* feats = std::get_if<std::vector<FeatureVector>>(&inputs_); feats && !feats->empty()) {
        for (const auto& f : *feats)
            if (f.size() != feats->front().size()) throw ArgumentError("feature vectors differ in dimension");
    }
}

const std::vector<FeatureVector>& Dataset::features() const {
    if (auto* f = std::get_if<std::vector<FeatureVector>>(&inputs_)) return *f;
    throw ArgumentError("dataset holds images, not feature vectors");
}

const std::vector<ImageGrid>& Dataset::images() const {
    if (auto* f = std::get_if<std::vector<ImageGrid>>(&inputs_)) return *f;
    throw ArgumentError("dataset holds feature vectors, not images");
}

std::span<const double> Dataset::input(std::size_t i) const {
    return std::visit(
        [i](const auto& v) -> std::span<const double> {
            using T = typename std::decay_t<decltype(v)>::value_type;
            if constexpr (std::is_same_v<T, FeatureVector>)
                return v[i].values();
            else
                return v[i].pixels();
        },
        inputs_);
}

const std::vector<ClassDistribution>& Dataset::soft_labels() const {
    if (!soft_labels_) throw ConfigError("dataset has no soft labels");
    return *soft_labels_;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes_, 0);
    for (std::size_t y : hard_labels_) ++counts[y];
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Inputs picked = std::visit(
        [&](const auto& v) -> Inputs {
            std::decay_t<decltype(v)> out;
            out.reserve(indices.size());
            for (std::size_t i : indices) out.push_back(v.at(i));
            return out;
        },
        inputs_);
    std::vector<std::size_t> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) labels.push_back(hard_labels_.at(i));
    std::optional<std::vector<ClassDistribution>> soft;
    if (soft_labels_) {
        soft.emplace();
        soft->reserve(indices.size());
        for (std::size_t i : indices) soft->push_back((*soft_labels_).at(i));
    }
    return Dataset(std::move(picked), std::move(labels), num_classes_, std::move(soft));
}

Dataset Dataset::with_soft_labels(std::vector<ClassDistribution> soft) const {
    return Dataset(inputs_, hard_labels_, num_classes_, std::move(soft));
}

Dataset Dataset::without_soft_labels() const { return Dataset(inputs_, hard_labels_, num_classes_); }

ClassDistribution one_hot(std::size_t class_index, std::size_t num_classes) {
    if (class_index >= num_classes)
        throw ArgumentError("class index " + std::to_string(class_index) + " out of range for K=" +
                            std::to_string(num_classes));
    std::vector<double> p(num_classes, 0.0);
    p[class_index] = 1.0;
    return ClassDistribution(std::move(p));
}

Split split_indices(const Dataset& data, double train_fraction, Seed seed, bool stratified) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ArgumentError("train fraction must lie in (0,1)");
    if (data.empty()) throw ArgumentError("cannot split an empty dataset");

    const std::size_t n = data.size();
    const auto train_total = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    Rng rng(seed);
    Split split;

    if (!stratified) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_total));
        split.holdout.assign(order.begin() + static_cast<std::ptrdiff_t>(train_total), order.end());
    } else {
        const std::size_t k = data.num_classes();
        std::vector<std::vector<std::size_t>> members(k);
        for (std::size_t i = 0; i < n; ++i) members[data.hard_labels()[i]].push_back(i);
        for (std::size_t c = 0; c < k; ++c)
            if (members[c].empty())
                throw DegenerateSplitError("class " + std::to_string(c) + " has no instances");

        // largest-remainder apportionment of the training quota
        std::vector<std::size_t> quota(k);
        std::vector<double> remainder(k);
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double share = train_fraction * static_cast<double>(members[c].size());
            quota[c] = static_cast<std::size_t>(std::floor(share));
            remainder[c] = share - static_cast<double>(quota[c]);
            assigned += quota[c];
        }
        std::vector<std::size_t> by_remainder(k);
        std::iota(by_remainder.begin(), by_remainder.end(), 0);
        std::stable_sort(by_remainder.begin(), by_remainder.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::size_t j = 0; assigned < train_total && j < k; ++j) {
            ++quota[by_remainder[j]];
            ++assigned;
        }

        for (std::size_t c = 0; c < k; ++c) {
            rng.shuffle(members[c]);
            auto mid = members[c].begin() + static_cast<std::ptrdiff_t>(quota[c]);
            split.train.insert(split.train.end(), members[c].begin(), mid);
            split.holdout.insert(split.holdout.end(), mid, members[c].end());
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.holdout.begin(), split.holdout.end());
    return split;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_fraction, Seed seed,
                                          bool stratified) {
    Split s = split_indices(data, train_fraction, seed, stratified);
    return {data.subset(s.train), data.subset(s.holdout)};
}

}  // namespace plabel
