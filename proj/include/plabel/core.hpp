#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "plabel/random.hpp"

namespace plabel {

/// Categorical distribution over K >= 2 classes. Entries lie in [0, 1] and sum
/// to one within 1e-9; the constructor rejects anything else.
class ClassDistribution {
public:
    static constexpr double kNormTolerance = 1e-9;

    explicit ClassDistribution(std::vector<double> probs);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t k) const { return probs_[k]; }
    std::span<const double> probs() const { return probs_; }
    std::size_t argmax() const;

    bool operator==(const ClassDistribution&) const = default;

private:
    std::vector<double> probs_;
};

/// Extracted feature representation; all entries finite.
class FeatureVector {
public:
    explicit FeatureVector(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }

    bool operator==(const FeatureVector&) const = default;

private:
    std::vector<double> values_;
};

/// Row-major grayscale image with intensities in [0, 1].
class ImageGrid {
public:
    ImageGrid(std::size_t height, std::size_t width, std::vector<double> intensities);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    double at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
    std::span<const double> pixels() const { return pixels_; }

    bool operator==(const ImageGrid&) const = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<double> pixels_;
};

using Inputs = std::variant<std::vector<FeatureVector>, std::vector<ImageGrid>>;

/// Homogeneous list of inputs with hard labels and optional soft labels.
class Dataset {
public:
    Dataset(Inputs inputs, std::vector<std::size_t> hard_labels, std::size_t num_classes,
            std::optional<std::vector<ClassDistribution>> soft_labels = std::nullopt);

    std::size_t size() const { return hard_labels_.size(); }
    bool empty() const { return hard_labels_.empty(); }
    std::size_t num_classes() const { return num_classes_; }

    const Inputs& inputs() const { return inputs_; }
    bool has_images() const { return std::holds_alternative<std::vector<ImageGrid>>(inputs_); }
    const std::vector<FeatureVector>& features() const;
    const std::vector<ImageGrid>& images() const;

    // flat view of instance i, whatever the input kind
    std::span<const double> input(std::size_t i) const;

    const std::vector<std::size_t>& hard_labels() const { return hard_labels_; }
    bool has_soft_labels() const { return soft_labels_.has_value(); }
    const std::vector<ClassDistribution>& soft_labels() const;

    std::vector<std::size_t> class_counts() const;

    Dataset subset(std::span<const std::size_t> indices) const;
    Dataset with_soft_labels(std::vector<ClassDistribution> soft) const;
    Dataset without_soft_labels() const;

private:
    Inputs inputs_;
    std::vector<std::size_t> hard_labels_;
    std::size_t num_classes_;
    std::optional<std::vector<ClassDistribution>> soft_labels_;
};

ClassDistribution one_hot(std::size_t class_index, std::size_t num_classes);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
};

/// Index-level split. The training part gets floor(train_fraction * n)
/// instances. When stratified, each class contributes floor or ceil of its
/// share so per-class proportions match within one instance.
Split split_indices(const Dataset& data, double train_fraction, Seed seed, bool stratified);

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_fraction, Seed seed,
                                          bool stratified);

}  // namespace plabel
