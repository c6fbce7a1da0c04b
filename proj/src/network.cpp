#include "plabel/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "plabel/error.hpp"
#include "plabel/kernels.hpp"

namespace plabel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kLogClamp = 1e-12;

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "softmax") return Activation::softmax;
    throw ArgumentError("unknown activation '" + s + "'");
}

}  // namespace

NetworkSpec::NetworkSpec(Shape input, std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    if (input.size() == 0) throw ArgumentError("network input has zero size");
    if (layers_.empty()) throw ArgumentError("network has no layers");
    shapes_.push_back(input);
    Shape cur = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const bool last = i + 1 == layers_.size();
        const std::string where = "layer " + std::to_string(i) + ": ";
        std::visit(
            overloaded{
                [&](const DenseLayer& l) {
                    if (!cur.flat()) throw ArgumentError(where + "dense layer needs a flat input (add flatten)");
                    if (l.units == 0) throw ArgumentError(where + "dense layer with zero units");
                    layout_.push_back({i, num_parameters_, l.units * cur.size(), l.units, cur.size(), l.units});
                    num_parameters_ += l.units * cur.size() + l.units;
                    cur = Shape{l.units, 1, 1};
                },
                [&](const Conv2dLayer& l) {
                    if (cur.flat()) throw ArgumentError(where + "conv2d needs a spatial input");
                    if (l.filters == 0) throw ArgumentError(where + "conv2d with zero filters");
                    const std::size_t w = l.filters * cur.channels * 9;
                    layout_.push_back({i, num_parameters_, w, l.filters, cur.channels * 9, l.filters * 9});
                    num_parameters_ += w + l.filters;
                    cur = Shape{l.filters, cur.height, cur.width};
                },
                [&](const MaxPoolLayer&) {
                    if (cur.flat() || cur.height % 2 != 0 || cur.width % 2 != 0)
                        throw ArgumentError(where + "maxpool needs even spatial dimensions");
                    cur = Shape{cur.channels, cur.height / 2, cur.width / 2};
                },
                [&](const ActivationLayer& l) {
                    if (l.fn == Activation::softmax && !last)
                        throw ArgumentError(where + "softmax is only allowed as the output layer");
                },
                [&](const FlattenLayer&) { cur = Shape{cur.size(), 1, 1}; },
            },
            layers_[i]);
        shapes_.push_back(cur);
    }

    const auto* head = std::get_if<ActivationLayer>(&layers_.back());
    if (!head || head->fn == Activation::relu)
        throw ArgumentError("network must end in a sigmoid or softmax activation");
    if (!cur.flat()) throw ArgumentError("network output must be flat");
    if (head->fn == Activation::sigmoid) {
        if (cur.size() != 1) throw ArgumentError("sigmoid head must have exactly one unit");
        binary_head_ = true;
        num_classes_ = 2;
    } else {
        if (cur.size() < 2) throw ArgumentError("softmax head needs at least two units");
        num_classes_ = cur.size();
    }
}

NetworkSpec NetworkSpec::logistic(std::size_t dim) {
    return NetworkSpec(Shape{dim, 1, 1}, {DenseLayer{1}, ActivationLayer{Activation::sigmoid}});
}

NetworkSpec NetworkSpec::reduced_cnn(std::size_t height, std::size_t width) {
    return NetworkSpec(Shape{1, height, width},
                       {Conv2dLayer{8}, ActivationLayer{Activation::relu}, MaxPoolLayer{},
                        Conv2dLayer{16}, ActivationLayer{Activation::relu}, MaxPoolLayer{}, FlattenLayer{},
                        DenseLayer{64}, ActivationLayer{Activation::relu}, DenseLayer{1},
                        ActivationLayer{Activation::sigmoid}});
}

nlohmann::json to_json(const NetworkSpec& spec) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : spec.layers()) {
        layers.push_back(std::visit(
            overloaded{
                [](const DenseLayer& l) -> nlohmann::json { return {{"type", "dense"}, {"units", l.units}}; },
                [](const Conv2dLayer& l) -> nlohmann::json { return {{"type", "conv2d"}, {"filters", l.filters}}; },
                [](const MaxPoolLayer&) -> nlohmann::json { return {{"type", "maxpool"}}; },
                [](const ActivationLayer& l) -> nlohmann::json {
                    return {{"type", "activation"}, {"fn", activation_name(l.fn)}};
                },
                [](const FlattenLayer&) -> nlohmann::json { return {{"type", "flatten"}}; },
            },
            layer));
    }
    const Shape& in = spec.input_shape();
    return {{"input", {{"channels", in.channels}, {"height", in.height}, {"width", in.width}}},
            {"layers", std::move(layers)}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& doc) {
    try {
        const auto& in = doc.at("input");
        Shape shape{in.at("channels").get<std::size_t>(), in.at("height").get<std::size_t>(),
                    in.at("width").get<std::size_t>()};
        std::vector<LayerSpec> layers;
        for (const auto& l : doc.at("layers")) {
            const auto type = l.at("type").get<std::string>();
            if (type == "dense")
                layers.emplace_back(DenseLayer{l.at("units").get<std::size_t>()});
            else if (type == "conv2d")
                layers.emplace_back(Conv2dLayer{l.at("filters").get<std::size_t>()});
            else if (type == "maxpool")
                layers.emplace_back(MaxPoolLayer{});
            else if (type == "activation")
                layers.emplace_back(ActivationLayer{parse_activation(l.at("fn").get<std::string>())});
            else if (type == "flatten")
                layers.emplace_back(FlattenLayer{});
            else
                throw ArgumentError("unknown layer type '" + type + "'");
        }
        return NetworkSpec(shape, std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed network spec JSON: ") + e.what());
    }
}

Parameters::Parameters(std::vector<ParamSlice> layout, std::vector<double> theta)
    : layout_(std::move(layout)), theta_(std::move(theta)) {
    std::size_t expected = 0;
    for (const auto& s : layout_) {
        if (s.offset != expected) throw ArgumentError("parameter layout is not contiguous");
        expected += s.weights + s.biases;
    }
    if (expected != theta_.size())
        throw ArgumentError("parameter vector has " + std::to_string(theta_.size()) + " entries, layout needs " +
                            std::to_string(expected));
    for (double v : theta_)
        if (!std::isfinite(v)) throw ArgumentError("non-finite parameter");
}

Parameters init_parameters(const NetworkSpec& spec, Seed seed) {
    Rng rng(seed);
    std::vector<double> theta(spec.num_parameters(), 0.0);
    for (const auto& s : spec.layout()) {
        const double a = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
        for (std::size_t i = 0; i < s.weights; ++i) theta[s.offset + i] = rng.uniform(-a, a);
    }
    return Parameters(spec.layout(), std::move(theta));
}

Parameters zero_parameters(const NetworkSpec& spec) {
    return Parameters(spec.layout(), std::vector<double>(spec.num_parameters(), 0.0));
}

nlohmann::json to_json(const NetworkSpec& spec, const Parameters& params) {
    nlohmann::json layout = nlohmann::json::array();
    for (const auto& s : params.layout())
        layout.push_back({{"layer", s.layer}, {"offset", s.offset}, {"weights", s.weights}, {"biases", s.biases}});
    return {{"spec", to_json(spec)},
            {"layout", std::move(layout)},
            {"theta", std::vector<double>(params.theta().begin(), params.theta().end())}};
}

std::pair<NetworkSpec, Parameters> model_from_json(const nlohmann::json& doc) {
    try {
        NetworkSpec spec = network_spec_from_json(doc.at("spec"));
        const auto& layout = doc.at("layout");
        if (layout.size() != spec.layout().size()) throw ArgumentError("layout does not match network spec");
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const auto& s = spec.layout()[i];
            if (layout[i].at("layer").get<std::size_t>() != s.layer ||
                layout[i].at("offset").get<std::size_t>() != s.offset ||
                layout[i].at("weights").get<std::size_t>() != s.weights ||
                layout[i].at("biases").get<std::size_t>() != s.biases)
                throw ArgumentError("layout entry " + std::to_string(i) + " does not match network spec");
        }
        Parameters params(spec.layout(), doc.at("theta").get<std::vector<double>>());
        return {std::move(spec), std::move(params)};
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed model JSON: ") + e.what());
    }
}

Evaluator::Evaluator(const NetworkSpec& spec) : spec_(&spec) {
    const auto& shapes = spec.shapes();
    acts_.resize(shapes.size());
    grads_.resize(shapes.size());
    pool_index_.resize(spec.layers().size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        acts_[i].assign(shapes[i].size(), 0.0);
        grads_[i].assign(shapes[i].size(), 0.0);
    }
    for (std::size_t i = 0; i < spec.layers().size(); ++i)
        if (std::holds_alternative<MaxPoolLayer>(spec.layers()[i])) pool_index_[i].assign(shapes[i + 1].size(), 0);
    probs_.assign(spec.num_classes(), 0.0);
}

std::span<const double> Evaluator::forward(const Parameters& params, std::span<const double> input) {
    const NetworkSpec& spec = *spec_;
    if (input.size() != spec.input_shape().size())
        throw ArgumentError("input has " + std::to_string(input.size()) + " values, network expects " +
                            std::to_string(spec.input_shape().size()));
    if (params.size() != spec.num_parameters()) throw ArgumentError("parameter count does not match network");
    std::copy(input.begin(), input.end(), acts_[0].begin());

    const auto theta = params.theta();
    std::size_t slice = 0;
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        const Shape& in_shape = spec.shapes()[i];
        std::span<const double> in = acts_[i];
        std::span<double> out = acts_[i + 1];
        std::visit(
            overloaded{
                [&](const DenseLayer&) {
                    const auto& s = spec.layout()[slice++];
                    kernels::dense_forward(in, theta.subspan(s.offset, s.weights),
                                           theta.subspan(s.offset + s.weights, s.biases), out);
                },
                [&](const Conv2dLayer& l) {
                    const auto& s = spec.layout()[slice++];
                    kernels::conv3x3_forward(in, in_shape.channels, in_shape.height, in_shape.width,
                                             theta.subspan(s.offset, s.weights),
                                             theta.subspan(s.offset + s.weights, s.biases), l.filters, out);
                },
                [&](const MaxPoolLayer&) {
                    kernels::maxpool2_forward(in, in_shape.channels, in_shape.height, in_shape.width, out,
                                              pool_index_[i]);
                },
                [&](const ActivationLayer& l) {
                    switch (l.fn) {
                        case Activation::relu: kernels::relu_forward(in, out); break;
                        case Activation::sigmoid: kernels::sigmoid_forward(in, out); break;
                        case Activation::softmax: kernels::softmax_forward(in, out); break;
                    }
                },
                [&](const FlattenLayer&) { std::copy(in.begin(), in.end(), out.begin()); },
            },
            spec.layers()[i]);
    }

    const auto& last = acts_.back();
    if (spec.binary_head()) {
        probs_[1] = last[0];
        probs_[0] = 1.0 - last[0];
    } else {
        std::copy(last.begin(), last.end(), probs_.begin());
    }
    return probs_;
}

double Evaluator::loss_gradient(const Parameters& params, std::span<const double> input,
                                const ClassDistribution& target, std::span<double> grad) {
    const NetworkSpec& spec = *spec_;
    if (target.size() != spec.num_classes()) throw ArgumentError("target has wrong class count");
    if (grad.size() != spec.num_parameters()) throw ArgumentError("gradient buffer has wrong size");
    forward(params, input);

    double loss = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k)
        if (target[k] != 0.0) loss -= target[k] * std::log(std::max(probs_[k], kLogClamp));

    // d loss / d logits for the fused output activation + cross-entropy
    const std::size_t n_layers = spec.layers().size();
    auto& dlogit = grads_[n_layers - 1];
    if (spec.binary_head()) {
        dlogit[0] = probs_[1] - target[1];
    } else {
        for (std::size_t k = 0; k < probs_.size(); ++k) dlogit[k] = probs_[k] - target[k];
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    const auto theta = params.theta();
    std::size_t slice = spec.layout().size();
    for (std::size_t i = n_layers - 1; i-- > 0;) {
        const Shape& in_shape = spec.shapes()[i];
        std::span<const double> in = acts_[i];
        std::span<const double> out = acts_[i + 1];
        std::span<const double> dout = grads_[i + 1];
        // the network input needs no gradient
        std::span<double> din = i == 0 ? std::span<double>() : std::span<double>(grads_[i]);
        std::visit(
            overloaded{
                [&](const DenseLayer&) {
                    const auto& s = spec.layout()[--slice];
                    kernels::dense_backward(in, theta.subspan(s.offset, s.weights), dout,
                                            grad.subspan(s.offset, s.weights),
                                            grad.subspan(s.offset + s.weights, s.biases), din);
                },
                [&](const Conv2dLayer& l) {
                    const auto& s = spec.layout()[--slice];
                    kernels::conv3x3_backward(in, in_shape.channels, in_shape.height, in_shape.width,
                                              theta.subspan(s.offset, s.weights), l.filters, dout,
                                              grad.subspan(s.offset, s.weights),
                                              grad.subspan(s.offset + s.weights, s.biases), din);
                },
                [&](const MaxPoolLayer&) {
                    if (!din.empty()) kernels::maxpool2_backward(dout, pool_index_[i], din);
                },
                [&](const ActivationLayer& l) {
                    if (din.empty()) return;
                    if (l.fn == Activation::relu)
                        kernels::relu_backward(out, dout, din);
                    else
                        kernels::sigmoid_backward(out, dout, din);
                },
                [&](const FlattenLayer&) {
                    if (!din.empty()) std::copy(dout.begin(), dout.end(), din.begin());
                },
            },
            spec.layers()[i]);
    }
    return loss;
}

std::uint64_t Evaluator::activation_pattern() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    const auto& layers = spec_->layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (const auto* a = std::get_if<ActivationLayer>(&layers[i]); a && a->fn == Activation::relu) {
            for (double v : acts_[i + 1]) mix(v > 0.0 ? 1 : 0);
        } else if (std::holds_alternative<MaxPoolLayer>(layers[i])) {
            for (std::size_t idx : pool_index_[i]) mix(idx);
        }
    }
    return h;
}

ClassDistribution forward(const NetworkSpec& spec, const Parameters& params, std::span<const double> input) {
    Evaluator ev(spec);
    auto p = ev.forward(params, input);
    return ClassDistribution(std::vector<double>(p.begin(), p.end()));
}

double cross_entropy_loss(const ClassDistribution& pred, const ClassDistribution& target) {
    if (pred.size() != target.size()) throw ArgumentError("class count mismatch in cross-entropy");
    double loss = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k)
        if (target[k] != 0.0) loss -= target[k] * std::log(std::max(pred[k], kLogClamp));
    return loss;
}

double regularized_loss(double batch_loss, const Parameters& params, const Parameters& anchor, double lambda) {
    if (!params.same_layout(anchor)) throw ArgumentError("parameters and anchor have different layouts");
    if (lambda < 0.0) throw ArgumentError("lambda must be non-negative");
    double dist2 = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double d = params[i] - anchor[i];
        dist2 += d * d;
    }
    return batch_loss + lambda * dist2;
}

GradientEngine::GradientEngine(const NetworkSpec& spec, ExecPolicy policy) : spec_(&spec), policy_(policy) {
    int threads = 1;
#ifdef _OPENMP
    if (policy_ == ExecPolicy::parallel) threads = omp_get_max_threads();
#endif
    evaluators_.assign(static_cast<std::size_t>(std::max(threads, 1)), Evaluator(spec));
}

LossGradient GradientEngine::compute(const Parameters& params, const TrainingSet& data,
                                     std::span<const std::size_t> batch, const Penalty& penalty) {
    const std::size_t p = spec_->num_parameters();
    if (params.size() != p) throw ArgumentError("parameter count does not match network");
    if (data.inputs.size() != data.targets.size()) throw ArgumentError("inputs and targets differ in length");
    std::vector<std::size_t> all;
    if (batch.empty()) {
        all.resize(data.inputs.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        batch = all;
    }
    if (batch.empty()) throw ArgumentError("empty batch");
    for (std::size_t idx : batch)
        if (idx >= data.inputs.size()) throw ArgumentError("batch index out of range");

    LossGradient out;
    out.gradient.assign(p, 0.0);
    const std::size_t b = batch.size();
    sample_losses_.assign(b, 0.0);

    if (policy_ == ExecPolicy::serial) {
        sample_grads_.resize(p);
        for (std::size_t s = 0; s < b; ++s) {
            sample_losses_[s] = evaluators_[0].loss_gradient(params, data.inputs[batch[s]], data.targets[batch[s]],
                                                             sample_grads_);
            for (std::size_t j = 0; j < p; ++j) out.gradient[j] += sample_grads_[j];
        }
    } else {
        sample_grads_.resize(b * p);
        const auto n = static_cast<std::ptrdiff_t>(b);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t s = 0; s < n; ++s) {
            int tid = 0;
#ifdef _OPENMP
            tid = omp_get_thread_num();
#endif
            const auto us = static_cast<std::size_t>(s);
            sample_losses_[us] = evaluators_[static_cast<std::size_t>(tid)].loss_gradient(
                params, data.inputs[batch[us]], data.targets[batch[us]],
                std::span<double>(sample_grads_).subspan(us * p, p));
        }
        for (std::size_t s = 0; s < b; ++s) {
            const double* g = sample_grads_.data() + s * p;
            for (std::size_t j = 0; j < p; ++j) out.gradient[j] += g[j];
        }
    }

    double loss = 0.0;
    for (double l : sample_losses_) loss += l;
    const double inv_b = 1.0 / static_cast<double>(b);
    out.loss = loss * inv_b;
    for (double& g : out.gradient) g *= inv_b;

    const auto theta = params.theta();
    if (penalty.anchor && penalty.lambda != 0.0) {
        if (!params.same_layout(*penalty.anchor)) throw ArgumentError("anchor layout does not match parameters");
        const auto anchor = penalty.anchor->theta();
        double dist2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double d = theta[j] - anchor[j];
            dist2 += d * d;
            out.gradient[j] += 2.0 * penalty.lambda * d;
        }
        out.loss += penalty.lambda * dist2;
    }
    if (penalty.weight_decay != 0.0) {
        double norm2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            norm2 += theta[j] * theta[j];
            out.gradient[j] += penalty.weight_decay * theta[j];
        }
        out.loss += 0.5 * penalty.weight_decay * norm2;
    }
    return out;
}

LossGradient backward(const NetworkSpec& spec, const Parameters& params, const TrainingSet& data,
                      std::span<const std::size_t> batch, const Penalty& penalty, ExecPolicy policy) {
    GradientEngine engine(spec, policy);
    return engine.compute(params, data, batch, penalty);
}

}  // namespace plabel
