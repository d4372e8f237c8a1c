#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoprune/network.hpp"

namespace geoprune {

enum class PruneScope { global, per_layer };
enum class PruneMethod { none, random, magnitude, taylor, mpt };

std::string_view to_string(PruneMethod m);
PruneMethod parse_prune_method(std::string_view name);
std::string_view to_string(PruneScope s);
PruneScope parse_prune_scope(std::string_view name);

/// Per-layer keep bits. Layers outside `prunable_layers` are all ones.
struct PruneMask {
    std::vector<Matrix> layers;
    std::vector<std::size_t> prunable_layers;

    std::size_t prunable_weight_count() const;
    std::size_t masked_count() const;  // zeros inside prunable layers
    friend bool operator==(const PruneMask&, const PruneMask&) = default;
};

/// Nonnegative importance per weight; lower means pruned first.
struct ImportanceScores {
    std::vector<Matrix> layers;
};

/// Every layer except the classifier, so class directions survive pruning.
std::vector<std::size_t> default_prunable_layers(const Network& net);

PruneMask all_ones_mask(const Network& net, std::optional<std::vector<std::size_t>> prunable = std::nullopt);

/// Masks exactly floor(rate * n_prunable) weights drawn uniformly without replacement.
PruneMask prune_random(const Network& net, double rate, std::uint64_t seed,
                       std::optional<std::vector<std::size_t>> prunable = std::nullopt);

PruneMask prune_magnitude(const Network& net, double rate, PruneScope scope = PruneScope::global,
                          std::optional<std::vector<std::size_t>> prunable = std::nullopt);

/// |dL/dw · w| with the gradient of mean cross-entropy over the whole dataset.
ImportanceScores taylor_importance(const Network& net, const LabeledDataset& data);
ImportanceScores magnitude_scores(const Network& net);

/// Masks the lowest-scoring floor(rate * n) weights, globally or per layer.
/// Ties go to the lower (layer, row, col) first.
PruneMask prune_by_scores(const ImportanceScores& scores, double rate, PruneScope scope,
                          const std::vector<std::size_t>& prunable_layers);

/// Zeroes masked weights and stores the mask (combined with any existing one). Idempotent.
Network apply_mask(const Network& net, const PruneMask& mask);

/// Fraction of prunable weights that are masked.
double sparsity(const PruneMask& mask);
/// Mask currently stored on a network, viewed over the given prunable layers.
PruneMask mask_of(const Network& net, std::optional<std::vector<std::size_t>> prunable = std::nullopt);

struct BipropConfig {
    double prune_rate = 0.5;
    std::size_t epochs = 40;
    double learning_rate = 0.1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::optional<std::vector<std::size_t>> prunable_layers;  // default: all but the classifier
};

struct BipropResult {
    Network network;           // binarized subnetwork; weights never trained
    PruneMask mask;
    std::vector<float> alpha;  // per-layer scale of the kept weights
};

/// Score-based subnetwork search with binarized weights.
///
/// Weights are drawn once from spec.seed and never updated. Each layer owns a
/// score per weight, initialised to |w|. In every step a prunable layer keeps
/// its top (1 - rate) fraction by score, and every kept weight becomes
/// alpha * sign(w) with alpha the mean |w| of that layer's kept set. Scores move
/// by SGD using the straight-through gradient dL/dscore = dL/dw_eff · alpha·sign(w).
/// Non-prunable layers are binarized the same way with nothing masked.
BipropResult biprop_train(const NetworkSpec& spec, const LabeledDataset& data, const BipropConfig& cfg);

}  // namespace geoprune
