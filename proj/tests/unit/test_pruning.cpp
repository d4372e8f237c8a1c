#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "geoprune/error.hpp"
#include "geoprune/pruning.hpp"
#include "geoprune/stats.hpp"
#include "geoprune/synthetic.hpp"
#include "helpers.hpp"

using namespace geoprune;
using geoprune::testing::make_network;
using geoprune::testing::network_from;
using geoprune::testing::random_dataset;

namespace {

std::set<std::tuple<std::size_t, std::size_t>> masked_positions(const PruneMask& m) {
    std::set<std::tuple<std::size_t, std::size_t>> out;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        for (std::size_t k = 0; k < m.layers[l].size(); ++k) {
            if (m.layers[l].data()[k] == 0.0f) out.insert({l, k});
        }
    }
    return out;
}

}  // namespace

TEST(PruneRandom, RateZeroKeepsEverything) {
    const Network net = make_network({4, 8, 3}, 1);
    EXPECT_EQ(prune_random(net, 0.0, 9).masked_count(), 0u);
}

TEST(PruneRandom, ForcedCount) {
    const Network net = network_from({2, 2, 2}, {{1, 2, 3, 4}, {1, 0, 0, 1}});
    const PruneMask m = prune_random(net, 0.25, 3);
    EXPECT_EQ(m.prunable_weight_count(), 4u);
    EXPECT_EQ(m.masked_count(), 1u);
}

TEST(PruneRandom, DeterministicPerSeed) {
    const Network net = make_network({4, 8, 8, 3}, 1);
    EXPECT_EQ(prune_random(net, 0.4, 9), prune_random(net, 0.4, 9));
    EXPECT_NE(prune_random(net, 0.4, 9), prune_random(net, 0.4, 10));
}

TEST(PruneRandom, RateOutOfRange) {
    const Network net = make_network({4, 8, 3}, 1);
    EXPECT_THROW(prune_random(net, 1.0, 0), std::invalid_argument);
    EXPECT_THROW(prune_random(net, -0.1, 0), std::invalid_argument);
}

TEST(PruneMagnitude, KeepsLargestGlobal) {
    const Network net = network_from({2, 2, 2}, {{0.1f, -3.0f, 2.0f, 1.0f}, {1, 0, 0, 1}});
    const PruneMask m = prune_magnitude(net, 0.5);
    EXPECT_EQ(m.layers[0], Matrix(2, 2, std::vector<float>{0, 1, 1, 0}));
    EXPECT_EQ(m.layers[1], Matrix(2, 2, 1.0f));
}

TEST(PruneMagnitude, RateZeroIsIdentity) {
    const Network net = make_network({4, 8, 3}, 1);
    EXPECT_EQ(prune_magnitude(net, 0.0), all_ones_mask(net));
}

TEST(PruneMagnitude, MatchesFullSortOracle) {
    // 1000 prunable weights in one layer, classifier excluded.
    const Network net = make_network({100, 10, 2}, 77);
    const auto& w = net.layer(0).weights.values();
    std::vector<std::size_t> order(w.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(w[a]) < std::abs(w[b]); });
    for (double rate : {0.1, 0.37, 0.9}) {
        const PruneMask m = prune_magnitude(net, rate);
        const auto k = static_cast<std::size_t>(std::floor(rate * 1000));
        std::set<std::size_t> expected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        std::set<std::size_t> got;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (m.layers[0].data()[i] == 0.0f) got.insert(i);
        }
        EXPECT_EQ(got, expected) << "rate " << rate;
    }
}

TEST(PruneMagnitude, PerLayerScope) {
    const Network net = make_network({6, 10, 10, 3}, 4);
    const PruneMask m = prune_magnitude(net, 0.5, PruneScope::per_layer);
    for (std::size_t l : m.prunable_layers) {
        const auto zeros = std::count(m.layers[l].data().begin(), m.layers[l].data().end(), 0.0f);
        EXPECT_EQ(static_cast<std::size_t>(zeros), m.layers[l].size() / 2);
    }
}

TEST(PruneMagnitude, CountExactnessAndNesting) {
    const Network net = make_network({7, 13, 11, 3}, 21);
    const std::size_t n = all_ones_mask(net).prunable_weight_count();
    std::set<std::tuple<std::size_t, std::size_t>> prev;
    for (double rate : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const PruneMask m = prune_magnitude(net, rate);
        EXPECT_EQ(m.masked_count(), static_cast<std::size_t>(std::floor(rate * n)));
        const auto cur = masked_positions(m);
        EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) << "rate " << rate;
        prev = cur;
    }
}

TEST(PruneMagnitude, ClassifierNeverMasked) {
    const Network net = make_network({4, 8, 3}, 1);
    const PruneMask m = prune_magnitude(net, 0.9);
    EXPECT_EQ(m.layers.back(), Matrix(3, 8, 1.0f));
    const Network pruned = apply_mask(net, m);
    EXPECT_EQ(pruned.classifier().weights, net.classifier().weights);
}

TEST(PruneByScores, MagnitudeScoresReproduceMagnitudePruning) {
    const Network net = make_network({5, 9, 7, 3}, 3);
    for (auto scope : {PruneScope::global, PruneScope::per_layer}) {
        EXPECT_EQ(prune_by_scores(magnitude_scores(net), 0.45, scope, default_prunable_layers(net)),
                  prune_magnitude(net, 0.45, scope));
    }
}

TEST(PruneByScores, EqualScoresFollowIndexOrder) {
    ImportanceScores s;
    s.layers = {Matrix(2, 3, 1.0f), Matrix(2, 2, 1.0f)};
    const PruneMask m = prune_by_scores(s, 0.5, PruneScope::global, {0, 1});
    // 10 weights, 5 masked: all of layer 0 (6) comes first, so its first 5 go.
    EXPECT_EQ(m.layers[0], Matrix(2, 3, std::vector<float>{0, 0, 0, 0, 0, 1}));
    EXPECT_EQ(m.layers[1], Matrix(2, 2, 1.0f));
}

TEST(PruneByScores, ForcedCountAtHighRate) {
    ImportanceScores s;
    s.layers = {Matrix(10, 10, 0.5f)};
    EXPECT_EQ(prune_by_scores(s, 0.99, PruneScope::global, {0}).masked_count(), 99u);
}

TEST(PruneByScores, ShapeMismatchWithNetwork) {
    const Network net = make_network({4, 8, 3}, 1);
    ImportanceScores s;
    s.layers = {Matrix(2, 2, 1.0f)};
    EXPECT_THROW(apply_mask(net, prune_by_scores(s, 0.5, PruneScope::global, {0})), DimensionError);
}

TEST(TaylorImportance, ZeroWeightScoresZero) {
    const Network net = make_network({2, 4, 2}, 1).with_weight(0, 2, 1, 0.0f);
    EXPECT_EQ(taylor_importance(net, random_dataset(10, 2, 2, 3)).layers[0](2, 1), 0.0f);
}

TEST(TaylorImportance, MatchesGradientTimesWeight) {
    const Network net = make_network({3, 5, 2}, 6);
    const LabeledDataset d = random_dataset(20, 3, 2, 2);
    const Gradients g = backward(net, d);
    const ImportanceScores s = taylor_importance(net, d);
    for (std::size_t l = 0; l < 2; ++l)
        for (std::size_t k = 0; k < s.layers[l].size(); ++k)
            EXPECT_FLOAT_EQ(s.layers[l].data()[k], std::abs(g.weights[l].data()[k] * net.layer(l).weights.data()[k]));
}

TEST(TaylorImportance, SaturatedLossGivesZeroScores) {
    // Identity classifier on huge, correctly labelled inputs: softmax is exactly one-hot in double.
    const Network net = network_from({2, 2}, {{1, 0, 0, 1}});
    LabeledDataset d;
    d.inputs = Matrix(2, 2, std::vector<float>{1000, 0, 0, 1000});
    d.labels = {0, 1};
    d.sample_ids = {0, 1};
    d.class_count = 2;
    const ImportanceScores s = taylor_importance(net, d);
    for (float v : s.layers[0].data()) EXPECT_EQ(v, 0.0f);
}

TEST(TaylorImportance, RankCorrelatesWithFiniteDifferenceTopDecile) {
    synthetic::BlobOptions o;
    o.samples = 200;
    o.seed = 2;
    const LabeledDataset d = synthetic::make_blobs(o);
    const Network net = train(make_network({2, 8, 2}, 3), d, TrainConfig{0.05, 5, 20, 1});
    const ImportanceScores s = taylor_importance(net, d);
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t l = 0; l < 2; ++l) {
        const Layer& layer = net.layer(l);
        for (std::size_t r = 0; r < layer.fan_out(); ++r)
            for (std::size_t c = 0; c < layer.fan_in(); ++c)
                pairs.push_back({s.layers[l](r, c), finite_diff_importance(net, d, {l, r, c})});
    }
    std::sort(pairs.begin(), pairs.end(), [](auto a, auto b) { return a.first > b.first; });
    pairs.resize(std::max<std::size_t>(pairs.size() / 10, 3));
    std::vector<double> a, b;
    for (auto [x, y] : pairs) {
        a.push_back(x);
        b.push_back(y);
    }
    EXPECT_GE(spearman(a, b), 0.8);
}

TEST(ApplyMask, AllOnesIsIdentityAndIdempotent) {
    const Network net = make_network({4, 8, 3}, 1);
    EXPECT_EQ(apply_mask(net, all_ones_mask(net)), net);
    const PruneMask m = prune_magnitude(net, 0.6);
    const Network once = apply_mask(net, m);
    EXPECT_EQ(apply_mask(once, m), once);
    EXPECT_DOUBLE_EQ(sparsity(mask_of(once)), sparsity(m));
}

TEST(Sparsity, Values) {
    const Network net = network_from({2, 2, 2}, {{1, 2, 3, 4}, {1, 0, 0, 1}});
    PruneMask m = all_ones_mask(net);
    EXPECT_EQ(sparsity(m), 0.0);
    m.layers[0](0, 1) = 0.0f;
    EXPECT_EQ(sparsity(m), 0.25);
    m.layers[0] = Matrix(2, 2, 0.0f);
    EXPECT_EQ(sparsity(m), 1.0);
}

TEST(Biprop, RateZeroBinarizesWithoutMasking) {
    NetworkSpec spec;
    spec.layer_sizes = {2, 6, 2};
    spec.seed = 4;
    const Network init = Network::initialize(spec);
    BipropConfig cfg;
    cfg.prune_rate = 0.0;
    cfg.epochs = 2;
    cfg.batch_size = 10;
    const BipropResult r = biprop_train(spec, random_dataset(20, 2, 2, 1), cfg);
    EXPECT_EQ(r.mask.masked_count(), 0u);
    for (std::size_t l = 0; l < 2; ++l) {
        const auto& w0 = init.layer(l).weights.values();
        double mean_abs = 0.0;
        for (float v : w0) mean_abs += std::abs(v);
        mean_abs /= static_cast<double>(w0.size());
        EXPECT_NEAR(r.alpha[l], mean_abs, 1e-6);
        for (std::size_t k = 0; k < w0.size(); ++k) {
            EXPECT_FLOAT_EQ(r.network.layer(l).weights.values()[k], std::copysign(r.alpha[l], w0[k]));
        }
    }
}

TEST(Biprop, BinarizedValuesAndExactCount) {
    NetworkSpec spec;
    spec.layer_sizes = {2, 16, 16, 2};
    spec.seed = 9;
    BipropConfig cfg;
    cfg.prune_rate = 0.5;
    cfg.epochs = 3;
    const BipropResult r = biprop_train(spec, random_dataset(40, 2, 2, 3), cfg);
    for (std::size_t l = 0; l < 3; ++l) {
        std::set<float> mags;
        for (float v : r.network.layer(l).weights.values()) mags.insert(std::abs(v));
        mags.erase(0.0f);
        EXPECT_EQ(mags.size(), 1u) << "layer " << l;
        EXPECT_FLOAT_EQ(*mags.begin(), r.alpha[l]);
    }
    EXPECT_EQ(r.mask.masked_count(), static_cast<std::size_t>(0.5 * 16 * 2) + static_cast<std::size_t>(0.5 * 16 * 16));
    EXPECT_EQ(r.mask.masked_count(), mask_of(r.network).masked_count());
}

TEST(Biprop, DeterministicAndSolvesBlobs) {
    synthetic::BlobOptions o;
    o.samples = 400;
    o.classes = 2;
    o.seed = 5;
    const LabeledDataset train_set = synthetic::make_blobs(o);
    o.seed = 6;
    o.first_id = 10000;
    const LabeledDataset test_set = synthetic::make_blobs(o);
    NetworkSpec spec;
    spec.layer_sizes = {2, 64, 64, 2};
    spec.seed = 1;
    BipropConfig cfg;
    cfg.prune_rate = 0.5;
    cfg.epochs = 10;
    cfg.learning_rate = 0.5;
    const BipropResult a = biprop_train(spec, train_set, cfg);
    EXPECT_GE(accuracy(a.network, test_set), 0.95);
    EXPECT_EQ(a.network, biprop_train(spec, train_set, cfg).network);
}
