#include "geoprune/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "geoprune/error.hpp"

namespace geoprune {

void NetworkSpec::validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("network needs at least an input and an output size");
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw std::invalid_argument("layer sizes must be positive");
    }
    if (class_count() < 2) throw std::invalid_argument("class count must be at least 2");
    if (classifier_bias) throw std::invalid_argument("classifier layer must be bias-free");
}

Network::Network(NetworkSpec spec, std::vector<Layer> layers) : spec_(std::move(spec)), layers_(std::move(layers)) {
    check_invariants();
}

void Network::check_invariants() {
    spec_.validate();
    if (layers_.size() != spec_.layer_count()) {
        throw DimensionError("layer count does not match spec");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Layer& layer = layers_[l];
        const std::size_t in = spec_.layer_sizes[l];
        const std::size_t out = spec_.layer_sizes[l + 1];
        if (layer.weights.rows() != out || layer.weights.cols() != in) {
            std::ostringstream msg;
            msg << "layer " << l << " weights are " << layer.weights.rows() << "x" << layer.weights.cols()
                << ", spec expects " << out << "x" << in;
            throw DimensionError(msg.str());
        }
        if (layer.mask.empty()) layer.mask = Matrix(out, in, 1.0f);
        if (!layer.mask.same_shape(layer.weights)) {
            throw DimensionError("layer " + std::to_string(l) + " mask shape differs from weights");
        }
        const bool is_classifier = l + 1 == layers_.size();
        if (is_classifier && layer.bias) throw std::invalid_argument("classifier layer must be bias-free");
        if (!is_classifier && spec_.hidden_bias != layer.bias.has_value()) {
            throw std::invalid_argument("layer " + std::to_string(l) + " bias presence disagrees with spec");
        }
        if (layer.bias && layer.bias->size() != out) throw DimensionError("bias length mismatch");
        auto w = layer.weights.data();
        auto m = layer.mask.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (m[i] != 0.0f && m[i] != 1.0f) throw std::invalid_argument("mask entries must be 0 or 1");
            if (m[i] == 0.0f) w[i] = 0.0f;
        }
        if (!layer.weights.all_finite()) throw std::invalid_argument("non-finite weight");
    }
}

Network Network::initialize(const NetworkSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const float bound = 1.0f / std::sqrt(static_cast<float>(in));
        std::uniform_real_distribution<float> dist(-bound, bound);
        Layer layer;
        layer.weights = Matrix(out, in);
        for (float& w : layer.weights.data()) w = dist(rng);
        layer.mask = Matrix(out, in, 1.0f);
        const bool is_classifier = l + 2 == spec.layer_sizes.size();
        if (!is_classifier && spec.hidden_bias) layer.bias = std::vector<float>(out, 0.0f);
        layers.push_back(std::move(layer));
    }
    return Network(spec, std::move(layers));
}

std::size_t Network::weight_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size();
    return n;
}

Network Network::with_weight(std::size_t layer, std::size_t row, std::size_t col, float value) const {
    if (layer >= layers_.size() || row >= layers_[layer].weights.rows() || col >= layers_[layer].weights.cols()) {
        throw std::out_of_range("weight index out of range");
    }
    if (layers_[layer].mask(row, col) == 0.0f && value != 0.0f) {
        throw std::invalid_argument("cannot set a masked weight");
    }
    Network copy = *this;
    copy.layers_[layer].weights(row, col) = value;
    return copy;
}

void LabeledDataset::validate() const {
    const std::size_t n = labels.size();
    if (n == 0) throw std::invalid_argument("dataset is empty");
    if (inputs.rows() != n) throw DimensionError("dataset inputs/labels row count mismatch");
    if (sample_ids.size() != n) throw DimensionError("dataset sample id count mismatch");
    if (class_count < 2) throw std::invalid_argument("dataset class count must be at least 2");
    for (auto y : labels) {
        if (y >= class_count) throw std::invalid_argument("label " + std::to_string(y) + " out of range");
    }
    std::set<std::uint64_t> seen(sample_ids.begin(), sample_ids.end());
    if (seen.size() != n) throw std::invalid_argument("sample ids are not unique");
    if (image && image->pixels() != inputs.cols()) throw DimensionError("image shape does not match input width");
    if (!inputs.all_finite()) throw std::invalid_argument("dataset contains non-finite inputs");
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.id = id;
    out.inputs = inputs.gather_rows(indices);
    out.class_count = class_count;
    out.image = image;
    for (std::size_t i : indices) {
        out.labels.push_back(labels.at(i));
        out.sample_ids.push_back(sample_ids.at(i));
    }
    return out;
}

void TrainConfig::validate(std::size_t dataset_size) const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be positive");
    if (batch_size == 0 || batch_size > dataset_size) {
        throw std::invalid_argument("batch size must be in [1, N]");
    }
}

namespace {

/// Activations of every layer for one input row, in double precision.
/// acts[0] is the input, acts[l] the post-ReLU output of layer l-1, and
/// pre[l] the pre-activation of layer l. The last pre entry is the logit row.
struct Trace {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pre;
};

Trace trace_row(const Network& net, std::span<const float> x) {
    const auto& layers = net.layers();
    Trace t;
    t.acts.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        const auto& a = t.acts.back();
        std::vector<double> z(layer.fan_out());
        for (std::size_t j = 0; j < layer.fan_out(); ++j) {
            auto w = layer.weights.row(j);
            double acc = layer.bias ? static_cast<double>((*layer.bias)[j]) : 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<double>(w[k]) * a[k];
            z[j] = acc;
        }
        if (l + 1 < layers.size()) {
            std::vector<double> act(z.size());
            std::transform(z.begin(), z.end(), act.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
            t.pre.push_back(std::move(z));
            t.acts.push_back(std::move(act));
        } else {
            t.pre.push_back(std::move(z));
        }
    }
    return t;
}

double row_cross_entropy(std::span<const double> logits, std::uint32_t label) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    return std::log(sum) - (logits[label] - mx);
}

void check_input_width(const Network& net, const Matrix& inputs) {
    if (inputs.cols() != net.spec().input_dim()) {
        std::ostringstream msg;
        msg << "input has " << inputs.cols() << " columns, network expects " << net.spec().input_dim();
        throw DimensionError(msg.str());
    }
}

void check_labels(std::span<const std::uint32_t> labels, std::size_t classes) {
    for (auto y : labels) {
        if (y >= classes) throw std::out_of_range("label " + std::to_string(y) + " out of range");
    }
}

}  // namespace

ForwardResult forward(const Network& net, const Matrix& inputs) {
    check_input_width(net, inputs);
    const std::size_t n = inputs.rows();
    ForwardResult out{Matrix(n, net.spec().penultimate_width()), Matrix(n, net.spec().class_count())};
    for (std::size_t i = 0; i < n; ++i) {
        Trace t = trace_row(net, inputs.row(i));
        const auto& feat = t.acts.back();
        for (std::size_t k = 0; k < feat.size(); ++k) out.features(i, k) = static_cast<float>(feat[k]);
        const auto& z = t.pre.back();
        for (std::size_t c = 0; c < z.size(); ++c) out.logits(i, c) = static_cast<float>(z[c]);
    }
    return out;
}

std::vector<double> softmax(std::span<const float> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(static_cast<double>(logits[i]) - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double loss(const Matrix& logits, std::span<const std::uint32_t> labels) {
    if (logits.rows() != labels.size()) throw DimensionError("logits rows and label count differ");
    if (labels.empty()) throw std::invalid_argument("loss of an empty batch");
    check_labels(labels, logits.cols());
    double total = 0.0;
    std::vector<double> row(logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto r = logits.row(i);
        std::copy(r.begin(), r.end(), row.begin());
        total += row_cross_entropy(row, labels[i]);
    }
    return total / static_cast<double>(labels.size());
}

double mean_loss(const Network& net, const LabeledDataset& data) {
    check_input_width(net, data.inputs);
    check_labels(data.labels, net.spec().class_count());
    if (data.size() == 0) throw std::invalid_argument("loss of an empty dataset");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Trace t = trace_row(net, data.inputs.row(i));
        total += row_cross_entropy(t.pre.back(), data.labels[i]);
    }
    return total / static_cast<double>(data.size());
}

Gradients backward(const Network& net, const LabeledDataset& batch) {
    check_input_width(net, batch.inputs);
    if (batch.size() == 0) throw std::invalid_argument("backward on an empty batch");
    if (batch.inputs.rows() != batch.size()) throw DimensionError("batch inputs/labels row count mismatch");
    check_labels(batch.labels, net.spec().class_count());

    const auto& layers = net.layers();
    const std::size_t depth = layers.size();
    std::vector<std::vector<double>> gw(depth);
    std::vector<std::vector<double>> gb(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        gw[l].assign(layers[l].weights.size(), 0.0);
        if (layers[l].bias) gb[l].assign(layers[l].fan_out(), 0.0);
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double total_loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Trace t = trace_row(net, batch.inputs.row(i));
        const auto& logits = t.pre.back();
        const std::uint32_t y = batch.labels[i];
        total_loss += row_cross_entropy(logits, y);

        // dL/dz for the classifier: softmax - onehot, scaled by 1/N.
        const double mx = *std::max_element(logits.begin(), logits.end());
        std::vector<double> delta(logits.size());
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.size(); ++c) {
            delta[c] = std::exp(logits[c] - mx);
            sum += delta[c];
        }
        for (std::size_t c = 0; c < logits.size(); ++c) {
            delta[c] = (delta[c] / sum - (c == y ? 1.0 : 0.0)) * inv_n;
        }

        for (std::size_t l = depth; l-- > 0;) {
            const Layer& layer = layers[l];
            const auto& a = t.acts[l];
            const std::size_t in = layer.fan_in();
            for (std::size_t j = 0; j < delta.size(); ++j) {
                if (delta[j] == 0.0) continue;
                double* g = gw[l].data() + j * in;
                for (std::size_t k = 0; k < in; ++k) g[k] += delta[j] * a[k];
                if (layer.bias) gb[l][j] += delta[j];
            }
            if (l == 0) break;
            std::vector<double> prev(in, 0.0);
            for (std::size_t j = 0; j < delta.size(); ++j) {
                if (delta[j] == 0.0) continue;
                auto w = layer.weights.row(j);
                for (std::size_t k = 0; k < in; ++k) prev[k] += static_cast<double>(w[k]) * delta[j];
            }
            const auto& z = t.pre[l - 1];
            for (std::size_t k = 0; k < in; ++k) {
                if (z[k] <= 0.0) prev[k] = 0.0;
            }
            delta = std::move(prev);
        }
    }

    Gradients out;
    out.loss = total_loss * inv_n;
    for (std::size_t l = 0; l < depth; ++l) {
        const Layer& layer = layers[l];
        Matrix g(layer.fan_out(), layer.fan_in());
        auto m = layer.mask.data();
        auto gd = g.data();
        for (std::size_t k = 0; k < gd.size(); ++k) gd[k] = m[k] == 0.0f ? 0.0f : static_cast<float>(gw[l][k]);
        out.weights.push_back(std::move(g));
        std::vector<float> b(gb[l].size());
        std::transform(gb[l].begin(), gb[l].end(), b.begin(), [](double v) { return static_cast<float>(v); });
        out.bias.push_back(std::move(b));
    }
    return out;
}

Network train(const Network& net, const LabeledDataset& data, const TrainConfig& cfg) {
    data.validate();
    cfg.validate(data.size());
    if (data.class_count != net.spec().class_count()) throw DimensionError("dataset class count differs from network");
    check_input_width(net, data.inputs);

    std::vector<Layer> layers = net.layers();
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const float lr = static_cast<float>(cfg.learning_rate);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
            LabeledDataset batch = data.subset(std::span(order).subspan(begin, count));
            Network current(net.spec(), layers);
            Gradients g = backward(current, batch);
            if (!std::isfinite(g.loss)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << ", batch starting at " << begin;
                throw NonFiniteLoss(msg.str());
            }
            for (std::size_t l = 0; l < layers.size(); ++l) {
                auto w = layers[l].weights.data();
                auto m = layers[l].mask.data();
                auto gw = g.weights[l].data();
                for (std::size_t k = 0; k < w.size(); ++k) {
                    w[k] = m[k] == 0.0f ? 0.0f : w[k] - lr * gw[k];
                }
                if (layers[l].bias) {
                    auto& b = *layers[l].bias;
                    for (std::size_t j = 0; j < b.size(); ++j) b[j] -= lr * g.bias[l][j];
                }
                // A finite loss can still produce an overflowing step.
                bool finite = layers[l].weights.all_finite();
                if (layers[l].bias) {
                    for (float b : *layers[l].bias) finite = finite && std::isfinite(b);
                }
                if (!finite) {
                    std::ostringstream msg;
                    msg << "parameters diverged at epoch " << epoch << ", batch starting at " << begin;
                    throw NonFiniteLoss(msg.str());
                }
            }
        }
    }
    return Network(net.spec(), std::move(layers));
}

std::uint32_t argmax(std::span<const float> row) {
    if (row.empty()) throw std::invalid_argument("argmax of empty row");
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < row.size(); ++c) {
        if (row[c] > row[best]) best = c;
    }
    return best;
}

std::vector<std::uint32_t> predict(const Network& net, const Matrix& inputs) {
    ForwardResult fr = forward(net, inputs);
    std::vector<std::uint32_t> out(inputs.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax(fr.logits.row(i));
    return out;
}

double accuracy(const Network& net, const LabeledDataset& data) {
    if (data.size() == 0) throw std::invalid_argument("accuracy of an empty dataset");
    auto pred = predict(net, data.inputs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double finite_diff_importance(const Network& net, const LabeledDataset& data, WeightIndex index) {
    if (index.layer >= net.layers().size()) throw std::out_of_range("layer index out of range");
    const Layer& layer = net.layer(index.layer);
    if (index.row >= layer.weights.rows() || index.col >= layer.weights.cols()) {
        throw std::out_of_range("weight index out of range");
    }
    if (layer.mask(index.row, index.col) == 0.0f) {
        throw std::invalid_argument("weight is already masked");
    }
    const double base = mean_loss(net, data);
    const double zeroed = mean_loss(net.with_weight(index.layer, index.row, index.col, 0.0f), data);
    return std::abs(zeroed - base);
}

}  // namespace geoprune
