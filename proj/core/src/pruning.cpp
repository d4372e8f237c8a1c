#include "geoprune/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "geoprune/error.hpp"

namespace geoprune {

std::string_view to_string(PruneMethod m) {
    switch (m) {
        case PruneMethod::none: return "none";
        case PruneMethod::random: return "random";
        case PruneMethod::magnitude: return "magnitude";
        case PruneMethod::taylor: return "taylor";
        case PruneMethod::mpt: return "mpt";
    }
    return "none";
}

PruneMethod parse_prune_method(std::string_view name) {
    for (auto m : {PruneMethod::none, PruneMethod::random, PruneMethod::magnitude, PruneMethod::taylor,
                   PruneMethod::mpt}) {
        if (to_string(m) == name) return m;
    }
    if (name == "biprop") return PruneMethod::mpt;
    throw std::invalid_argument("unknown pruning method '" + std::string(name) + "'");
}

std::string_view to_string(PruneScope s) { return s == PruneScope::global ? "global" : "per-layer"; }

PruneScope parse_prune_scope(std::string_view name) {
    if (name == "global") return PruneScope::global;
    if (name == "per-layer" || name == "layer") return PruneScope::per_layer;
    throw std::invalid_argument("unknown pruning scope '" + std::string(name) + "'");
}

std::size_t PruneMask::prunable_weight_count() const {
    std::size_t n = 0;
    for (std::size_t l : prunable_layers) n += layers.at(l).size();
    return n;
}

std::size_t PruneMask::masked_count() const {
    std::size_t n = 0;
    for (std::size_t l : prunable_layers) {
        for (float v : layers.at(l).data()) n += v == 0.0f ? 1 : 0;
    }
    return n;
}

namespace {

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        std::ostringstream msg;
        msg << "prune rate " << rate << " outside [0, 1)";
        throw std::invalid_argument(msg.str());
    }
}

std::vector<std::size_t> resolve_prunable(const Network& net, std::optional<std::vector<std::size_t>> prunable) {
    std::vector<std::size_t> out = prunable ? *prunable : default_prunable_layers(net);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    for (std::size_t l : out) {
        if (l >= net.layers().size()) throw std::out_of_range("prunable layer index out of range");
    }
    return out;
}

std::size_t prune_count(double rate, std::size_t n) {
    return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
}

struct Slot {
    float score;
    std::size_t layer;
    std::size_t flat;
};

// Sorts ascending by score, then by (layer, flat index), and masks the first `count`.
void mask_lowest(std::vector<Slot>& slots, std::size_t count, std::vector<Matrix>& mask) {
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        if (a.score != b.score) return a.score < b.score;
        if (a.layer != b.layer) return a.layer < b.layer;
        return a.flat < b.flat;
    });
    for (std::size_t i = 0; i < count; ++i) mask[slots[i].layer].data()[slots[i].flat] = 0.0f;
}

std::vector<Slot> slots_for(const ImportanceScores& scores, std::size_t layer) {
    std::vector<Slot> out;
    auto d = scores.layers[layer].data();
    out.reserve(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) out.push_back({d[k], layer, k});
    return out;
}

}  // namespace

std::vector<std::size_t> default_prunable_layers(const Network& net) {
    std::vector<std::size_t> out(net.layers().size() - 1);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

PruneMask all_ones_mask(const Network& net, std::optional<std::vector<std::size_t>> prunable) {
    PruneMask mask;
    mask.prunable_layers = resolve_prunable(net, std::move(prunable));
    for (const Layer& l : net.layers()) mask.layers.emplace_back(l.weights.rows(), l.weights.cols(), 1.0f);
    return mask;
}

PruneMask prune_random(const Network& net, double rate, std::uint64_t seed,
                       std::optional<std::vector<std::size_t>> prunable) {
    check_rate(rate);
    PruneMask mask = all_ones_mask(net, std::move(prunable));
    std::vector<std::pair<std::size_t, std::size_t>> pool;
    for (std::size_t l : mask.prunable_layers) {
        for (std::size_t k = 0; k < mask.layers[l].size(); ++k) pool.emplace_back(l, k);
    }
    const std::size_t count = prune_count(rate, pool.size());
    // Partial Fisher-Yates: the first `count` entries become a uniform sample.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        mask.layers[pool[i].first].data()[pool[i].second] = 0.0f;
    }
    return mask;
}

ImportanceScores magnitude_scores(const Network& net) {
    ImportanceScores s;
    for (const Layer& l : net.layers()) {
        Matrix m(l.weights.rows(), l.weights.cols());
        auto w = l.weights.data();
        auto d = m.data();
        for (std::size_t k = 0; k < w.size(); ++k) d[k] = std::abs(w[k]);
        s.layers.push_back(std::move(m));
    }
    return s;
}

PruneMask prune_magnitude(const Network& net, double rate, PruneScope scope,
                          std::optional<std::vector<std::size_t>> prunable) {
    check_rate(rate);
    return prune_by_scores(magnitude_scores(net), rate, scope, resolve_prunable(net, std::move(prunable)));
}

ImportanceScores taylor_importance(const Network& net, const LabeledDataset& data) {
    if (data.size() == 0) throw std::invalid_argument("taylor importance needs a non-empty dataset");
    const Gradients g = backward(net, data);
    ImportanceScores s;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Layer& layer = net.layer(l);
        Matrix m(layer.weights.rows(), layer.weights.cols());
        auto w = layer.weights.data();
        auto gw = g.weights[l].data();
        auto mk = layer.mask.data();
        auto d = m.data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            d[k] = mk[k] == 0.0f ? 0.0f : static_cast<float>(std::abs(static_cast<double>(gw[k]) * w[k]));
        }
        s.layers.push_back(std::move(m));
    }
    return s;
}

PruneMask prune_by_scores(const ImportanceScores& scores, double rate, PruneScope scope,
                          const std::vector<std::size_t>& prunable_layers) {
    check_rate(rate);
    PruneMask mask;
    mask.prunable_layers = prunable_layers;
    std::sort(mask.prunable_layers.begin(), mask.prunable_layers.end());
    mask.prunable_layers.erase(std::unique(mask.prunable_layers.begin(), mask.prunable_layers.end()),
                               mask.prunable_layers.end());
    for (const Matrix& s : scores.layers) {
        if (!s.all_finite()) throw std::invalid_argument("importance scores must be finite");
        mask.layers.emplace_back(s.rows(), s.cols(), 1.0f);
    }
    for (std::size_t l : mask.prunable_layers) {
        if (l >= scores.layers.size()) throw DimensionError("prunable layer missing from scores");
    }

    if (scope == PruneScope::global) {
        std::vector<Slot> slots;
        for (std::size_t l : mask.prunable_layers) {
            auto s = slots_for(scores, l);
            slots.insert(slots.end(), s.begin(), s.end());
        }
        mask_lowest(slots, prune_count(rate, slots.size()), mask.layers);
    } else {
        for (std::size_t l : mask.prunable_layers) {
            auto slots = slots_for(scores, l);
            mask_lowest(slots, prune_count(rate, slots.size()), mask.layers);
        }
    }
    return mask;
}

Network apply_mask(const Network& net, const PruneMask& mask) {
    if (mask.layers.size() != net.layers().size()) throw DimensionError("mask layer count differs from network");
    std::vector<Layer> layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (!mask.layers[l].same_shape(layers[l].weights)) {
            throw DimensionError("mask shape differs from weights in layer " + std::to_string(l));
        }
        auto m = layers[l].mask.data();
        auto w = layers[l].weights.data();
        auto nm = mask.layers[l].data();
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (nm[k] == 0.0f) {
                m[k] = 0.0f;
                w[k] = 0.0f;
            }
        }
    }
    return Network(net.spec(), std::move(layers));
}

double sparsity(const PruneMask& mask) {
    const std::size_t n = mask.prunable_weight_count();
    if (n == 0) return 0.0;
    return static_cast<double>(mask.masked_count()) / static_cast<double>(n);
}

PruneMask mask_of(const Network& net, std::optional<std::vector<std::size_t>> prunable) {
    PruneMask mask;
    mask.prunable_layers = resolve_prunable(net, std::move(prunable));
    for (const Layer& l : net.layers()) mask.layers.push_back(l.mask);
    return mask;
}

namespace {

struct BinarizedLayer {
    Matrix effective;  // alpha * sign(w) * mask
    Matrix mask;
    float alpha = 0.0f;
};

BinarizedLayer binarize(const Matrix& init, const Matrix& scores, double rate, bool prunable) {
    BinarizedLayer out;
    out.mask = Matrix(init.rows(), init.cols(), 1.0f);
    if (prunable) {
        std::vector<Slot> slots;
        auto s = scores.data();
        for (std::size_t k = 0; k < s.size(); ++k) slots.push_back({s[k], 0, k});
        std::vector<Matrix> one{out.mask};
        mask_lowest(slots, prune_count(rate, slots.size()), one);
        out.mask = std::move(one[0]);
    }
    auto w = init.data();
    auto m = out.mask.data();
    double total = 0.0;
    std::size_t kept = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (m[k] != 0.0f) {
            total += std::abs(static_cast<double>(w[k]));
            ++kept;
        }
    }
    out.alpha = kept == 0 ? 0.0f : static_cast<float>(total / static_cast<double>(kept));
    out.effective = Matrix(init.rows(), init.cols());
    auto e = out.effective.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
        e[k] = m[k] == 0.0f ? 0.0f : (w[k] < 0.0f ? -out.alpha : out.alpha);
    }
    return out;
}

}  // namespace

BipropResult biprop_train(const NetworkSpec& spec, const LabeledDataset& data, const BipropConfig& cfg) {
    check_rate(cfg.prune_rate);
    data.validate();
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("biprop learning rate must be positive");
    if (cfg.batch_size == 0 || cfg.batch_size > data.size()) throw std::invalid_argument("batch size must be in [1, N]");
    if (data.class_count != spec.class_count()) throw DimensionError("dataset class count differs from spec");

    const Network init = Network::initialize(spec);
    const auto prunable = resolve_prunable(init, cfg.prunable_layers);
    const std::set<std::size_t> prunable_set(prunable.begin(), prunable.end());
    const std::size_t depth = init.layers().size();

    std::vector<Matrix> scores = magnitude_scores(init).layers;
    std::vector<std::optional<std::vector<float>>> biases;
    for (const Layer& l : init.layers()) biases.push_back(l.bias);

    auto assemble = [&](bool with_masks, std::vector<BinarizedLayer>* bin_out) {
        std::vector<Layer> layers;
        std::vector<BinarizedLayer> bins;
        for (std::size_t l = 0; l < depth; ++l) {
            bins.push_back(binarize(init.layer(l).weights, scores[l], cfg.prune_rate, prunable_set.count(l) > 0));
            Layer layer;
            layer.weights = bins.back().effective;
            layer.bias = biases[l];
            // Training uses an all-ones mask so backward reports the gradient at
            // pruned positions too; the straight-through estimator needs it.
            layer.mask = with_masks ? bins.back().mask : Matrix(layer.weights.rows(), layer.weights.cols(), 1.0f);
            layers.push_back(std::move(layer));
        }
        if (bin_out) *bin_out = std::move(bins);
        return Network(spec, std::move(layers));
    };

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double lr = cfg.learning_rate;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
            const LabeledDataset batch = data.subset(std::span(order).subspan(begin, count));
            std::vector<BinarizedLayer> bins;
            const Network current = assemble(false, &bins);
            const Gradients g = backward(current, batch);
            if (!std::isfinite(g.loss)) {
                throw NonFiniteLoss("non-finite loss in biprop at epoch " + std::to_string(epoch));
            }
            for (std::size_t l : prunable) {
                auto s = scores[l].data();
                auto w = init.layer(l).weights.data();
                auto gw = g.weights[l].data();
                const double a = bins[l].alpha;
                for (std::size_t k = 0; k < s.size(); ++k) {
                    const double sign = w[k] < 0.0f ? -1.0 : 1.0;
                    s[k] = static_cast<float>(s[k] - lr * static_cast<double>(gw[k]) * a * sign);
                }
            }
        }
    }

    BipropResult result;
    std::vector<BinarizedLayer> bins;
    result.network = assemble(true, &bins);
    result.mask = mask_of(result.network, prunable);
    for (const auto& b : bins) result.alpha.push_back(b.alpha);
    return result;
}

}  // namespace geoprune
