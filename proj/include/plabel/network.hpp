#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "plabel/core.hpp"
#include "plabel/random.hpp"

namespace plabel {

struct Shape {
    std::size_t channels = 1;
    std::size_t height = 1;
    std::size_t width = 1;

    std::size_t size() const { return channels * height * width; }
    bool flat() const { return height == 1 && width == 1; }
    bool operator==(const Shape&) const = default;
};

enum class Activation { relu, sigmoid, softmax };

struct DenseLayer {
    std::size_t units;
};
// 3x3 kernel, stride 1, zero same-padding
struct Conv2dLayer {
    std::size_t filters;
};
// 2x2 window, stride 2
struct MaxPoolLayer {};
struct ActivationLayer {
    Activation fn;
};
struct FlattenLayer {};

using LayerSpec = std::variant<DenseLayer, Conv2dLayer, MaxPoolLayer, ActivationLayer, FlattenLayer>;

/// Slice of the flat parameter vector owned by one layer: weights first, then biases.
struct ParamSlice {
    std::size_t layer = 0;
    std::size_t offset = 0;
    std::size_t weights = 0;
    std::size_t biases = 0;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;

    bool operator==(const ParamSlice&) const = default;
};

/// Layered classifier description. Shapes are chain-checked at construction
/// and the final layer must be a sigmoid on one unit (binary head, K = 2) or a
/// softmax on K >= 2 units.
class NetworkSpec {
public:
    NetworkSpec(Shape input, std::vector<LayerSpec> layers);

    // single dense unit + sigmoid: logistic regression on d features
    static NetworkSpec logistic(std::size_t dim);
    // conv(8)-relu-pool-conv(16)-relu-pool-flatten-dense(64)-relu-dense(1)-sigmoid
    static NetworkSpec reduced_cnn(std::size_t height, std::size_t width);

    const Shape& input_shape() const { return shapes_.front(); }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    // shapes_[i] is the input of layer i; shapes_.back() is the network output
    const std::vector<Shape>& shapes() const { return shapes_; }
    std::size_t num_classes() const { return num_classes_; }
    bool binary_head() const { return binary_head_; }
    const std::vector<ParamSlice>& layout() const { return layout_; }
    std::size_t num_parameters() const { return num_parameters_; }

    bool operator==(const NetworkSpec& o) const { return shapes_ == o.shapes_ && layout_ == o.layout_; }

private:
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;
    std::vector<ParamSlice> layout_;
    std::size_t num_parameters_ = 0;
    std::size_t num_classes_ = 0;
    bool binary_head_ = false;
};

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& doc);

/// Flat parameter vector theta plus the layout descriptor mapping slices to layers.
class Parameters {
public:
    Parameters(std::vector<ParamSlice> layout, std::vector<double> theta);

    std::span<const double> theta() const { return theta_; }
    std::span<double> theta() { return theta_; }
    const std::vector<ParamSlice>& layout() const { return layout_; }
    std::size_t size() const { return theta_.size(); }
    double operator[](std::size_t i) const { return theta_[i]; }
    double& operator[](std::size_t i) { return theta_[i]; }
    bool same_layout(const Parameters& o) const { return layout_ == o.layout_; }

    bool operator==(const Parameters&) const = default;

private:
    std::vector<ParamSlice> layout_;
    std::vector<double> theta_;
};

/// Weights ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases zero.
Parameters init_parameters(const NetworkSpec& spec, Seed seed);
Parameters zero_parameters(const NetworkSpec& spec);

nlohmann::json to_json(const NetworkSpec& spec, const Parameters& params);
std::pair<NetworkSpec, Parameters> model_from_json(const nlohmann::json& doc);

enum class ExecPolicy { serial, parallel };

/// Per-sample forward/backward state for one network. Not thread-safe; keep
/// one per thread.
class Evaluator {
public:
    explicit Evaluator(const NetworkSpec& spec);

    // class probabilities for one input
    std::span<const double> forward(const Parameters& params, std::span<const double> input);

    /// Runs forward then backward for one instance and writes d loss / d theta
    /// into grad (overwritten, size = num_parameters). Returns the CE loss.
    double loss_gradient(const Parameters& params, std::span<const double> input,
                         const ClassDistribution& target, std::span<double> grad);

    // relu masks and pooling argmaxes of the last forward pass
    std::uint64_t activation_pattern() const;

private:
    const NetworkSpec* spec_;
    std::vector<std::vector<double>> acts_;     // acts_[i] = input to layer i
    std::vector<std::vector<double>> grads_;    // d loss / d acts_[i]
    std::vector<std::vector<std::size_t>> pool_index_;
    std::vector<double> probs_;
};

ClassDistribution forward(const NetworkSpec& spec, const Parameters& params, std::span<const double> input);

/// -sum_k target_k log(max(pred_k, 1e-12))
double cross_entropy_loss(const ClassDistribution& pred, const ClassDistribution& target);

/// batch_loss + lambda * |theta - anchor|^2
double regularized_loss(double batch_loss, const Parameters& params, const Parameters& anchor, double lambda);

struct Penalty {
    const Parameters* anchor = nullptr;
    double lambda = 0.0;
    double weight_decay = 0.0;  // adds (decay / 2) |theta|^2
};

/// Inputs and resolved targets of one training run, indexed by instance.
struct TrainingSet {
    std::vector<std::span<const double>> inputs;
    std::vector<ClassDistribution> targets;
};

struct LossGradient {
    double loss = 0.0;  // mean data loss + penalties
    std::vector<double> gradient;
};

/// Exact gradient of the mean batch cross-entropy plus penalties.
///
/// The serial path is the reference. The parallel path computes per-sample
/// gradients concurrently and reduces them in sample order, so both paths
/// agree bit for bit regardless of the thread count.
class GradientEngine {
public:
    GradientEngine(const NetworkSpec& spec, ExecPolicy policy);

    LossGradient compute(const Parameters& params, const TrainingSet& data,
                         std::span<const std::size_t> batch, const Penalty& penalty);

private:
    const NetworkSpec* spec_;
    ExecPolicy policy_;
    std::vector<Evaluator> evaluators_;
    std::vector<double> sample_grads_;
    std::vector<double> sample_losses_;
};

LossGradient backward(const NetworkSpec& spec, const Parameters& params, const TrainingSet& data,
                      std::span<const std::size_t> batch, const Penalty& penalty,
                      ExecPolicy policy = ExecPolicy::serial);

}  // namespace plabel
