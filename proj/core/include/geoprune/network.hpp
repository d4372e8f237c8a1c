#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoprune/tensor.hpp"

namespace geoprune {

enum class Activation { relu };

/// Architecture of a dense ReLU classifier. The last layer is the classifier
/// and never carries a bias, so every logit is a plain dot product W_j · X.
struct NetworkSpec {
    std::vector<std::size_t> layer_sizes;  // input dim first, class count last
    Activation activation = Activation::relu;
    bool classifier_bias = false;
    bool hidden_bias = true;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t class_count() const { return layer_sizes.back(); }
    std::size_t penultimate_width() const { return layer_sizes[layer_sizes.size() - 2]; }
    std::size_t layer_count() const { return layer_sizes.size() - 1; }

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct Layer {
    Matrix weights;                    // out × in; row j feeds output unit j
    std::optional<std::vector<float>> bias;
    Matrix mask;                       // 1 keep, 0 pruned; same shape as weights

    std::size_t fan_in() const { return weights.cols(); }
    std::size_t fan_out() const { return weights.rows(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Feedforward classifier. Everything before the last layer is the encoder;
/// the last layer's weight rows are the class directions.
///
/// Invariant: weights[i] == 0 wherever mask[i] == 0. Constructors enforce it by
/// zeroing masked entries.
class Network {
public:
    Network() = default;
    Network(NetworkSpec spec, std::vector<Layer> layers);

    /// Uniform ±1/sqrt(fan_in) weights from spec.seed, zero hidden biases, all-ones masks.
    static Network initialize(const NetworkSpec& spec);

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    const Layer& classifier() const { return layers_.back(); }
    std::size_t weight_count() const;

    /// Copy with one weight replaced. The mask is left untouched, so setting a
    /// masked weight to nonzero throws.
    Network with_weight(std::size_t layer, std::size_t row, std::size_t col, float value) const;

    friend bool operator==(const Network&, const Network&) = default;

private:
    void check_invariants();

    NetworkSpec spec_;
    std::vector<Layer> layers_;
};

struct ImageShape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;

    std::size_t pixels() const { return height * width * channels; }
    friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

struct LabeledDataset {
    std::string id;
    Matrix inputs;                        // N × input_dim
    std::vector<std::uint32_t> labels;
    std::vector<std::uint64_t> sample_ids;
    std::size_t class_count = 0;
    std::optional<ImageShape> image;      // set when rows are flattened images (HWC)

    std::size_t size() const { return labels.size(); }
    std::size_t input_dim() const { return inputs.cols(); }
    /// Throws DimensionError / std::invalid_argument on any violated invariant.
    void validate() const;
    LabeledDataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    void validate(std::size_t dataset_size) const;
};

struct ForwardResult {
    Matrix features;  // N × penultimate width (input to the classifier)
    Matrix logits;    // N × C
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<float>> bias;  // empty vector for layers without bias
    double loss = 0.0;                     // mean cross-entropy of the batch
};

struct WeightIndex {
    std::size_t layer = 0;
    std::size_t row = 0;
    std::size_t col = 0;

    friend bool operator==(const WeightIndex&, const WeightIndex&) = default;
    friend auto operator<=>(const WeightIndex&, const WeightIndex&) = default;
};

ForwardResult forward(const Network& net, const Matrix& inputs);

/// Max-shifted softmax of one logit row.
std::vector<double> softmax(std::span<const float> logits);

/// Mean cross-entropy of the rows of `logits` against `labels`.
double loss(const Matrix& logits, std::span<const std::uint32_t> labels);

/// Mean cross-entropy evaluated end to end in double precision.
double mean_loss(const Network& net, const LabeledDataset& data);

/// Gradient of mean cross-entropy w.r.t. every weight and bias; masked weights get 0.
Gradients backward(const Network& net, const LabeledDataset& batch);

/// Plain minibatch SGD. Returns a new network; masked weights stay exactly zero.
Network train(const Network& net, const LabeledDataset& data, const TrainConfig& cfg);

/// Index of the largest entry; ties resolve to the lowest index.
std::uint32_t argmax(std::span<const float> row);
std::vector<std::uint32_t> predict(const Network& net, const Matrix& inputs);
double accuracy(const Network& net, const LabeledDataset& data);

/// |L(weight zeroed) - L| over the whole dataset, evaluated exactly.
double finite_diff_importance(const Network& net, const LabeledDataset& data, WeightIndex index);

}  // namespace geoprune
