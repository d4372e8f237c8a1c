#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "geoprune/network.hpp"

namespace geoprune::testing {

inline Network make_network(std::vector<std::size_t> sizes, std::uint64_t seed) {
    NetworkSpec spec;
    spec.layer_sizes = std::move(sizes);
    spec.seed = seed;
    return Network::initialize(spec);
}

/// Network with explicit weights and no hidden bias.
inline Network network_from(std::vector<std::size_t> sizes, const std::vector<std::vector<float>>& weights) {
    NetworkSpec spec;
    spec.layer_sizes = sizes;
    spec.hidden_bias = false;
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(sizes[l + 1], sizes[l], weights.at(l));
        layer.mask = Matrix(sizes[l + 1], sizes[l], 1.0f);
        layers.push_back(std::move(layer));
    }
    return Network(spec, std::move(layers));
}

inline LabeledDataset random_dataset(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed,
                                     float lo = -1.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    LabeledDataset d;
    d.id = "random";
    d.class_count = classes;
    d.inputs = Matrix(n, dim);
    for (auto& v : d.inputs.data()) v = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
        d.labels.push_back(static_cast<std::uint32_t>(i % classes));
        d.sample_ids.push_back(1000 + i);
    }
    return d;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("geoprune-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

/// Reference a·bᵀ with plain loops, independent of the library's matmul.
inline std::vector<double> naive_matmul_t(const std::vector<double>& a, std::size_t n, std::size_t k,
                                          const std::vector<double>& b, std::size_t m) {
    std::vector<double> out(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t t = 0; t < k; ++t) out[i * m + j] += a[i * k + t] * b[j * k + t];
    return out;
}

/// Mean cross-entropy of a ReLU MLP evaluated from scratch in double.
inline double oracle_loss(const Network& net, const LabeledDataset& data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> a(data.inputs.row(i).begin(), data.inputs.row(i).end());
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            const Layer& layer = net.layer(l);
            std::vector<double> z(layer.fan_out(), 0.0);
            for (std::size_t r = 0; r < layer.fan_out(); ++r) {
                for (std::size_t c = 0; c < layer.fan_in(); ++c) z[r] += double(layer.weights(r, c)) * a[c];
                if (layer.bias) z[r] += (*layer.bias)[r];
            }
            if (l + 1 < net.layers().size()) {
                for (auto& v : z) v = std::max(0.0, v);
            }
            a = std::move(z);
        }
        double mx = a[0];
        for (double v : a) mx = std::max(mx, v);
        double s = 0.0;
        for (double v : a) s += std::exp(v - mx);
        total += -(a[data.labels[i]] - mx - std::log(s));
    }
    return total / static_cast<double>(data.size());
}

}  // namespace geoprune::testing
