#include "geoprune/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "geoprune/error.hpp"

namespace geoprune {

namespace {

constexpr std::array<CorruptionType, 8> kAllTypes = {
    CorruptionType::gaussian_noise, CorruptionType::shot_noise, CorruptionType::impulse_noise,
    CorruptionType::gaussian_blur,  CorruptionType::brightness, CorruptionType::contrast,
    CorruptionType::pixelate,       CorruptionType::occlusion,
};

constexpr double kTable[8][kSeverityLevels] = {
    {0.08, 0.12, 0.18, 0.26, 0.38},   // gaussian_noise
    {60.0, 25.0, 12.0, 5.0, 3.0},     // shot_noise
    {0.03, 0.06, 0.09, 0.17, 0.27},   // impulse_noise
    {0.5, 0.75, 1.0, 1.5, 2.0},       // gaussian_blur
    {0.05, 0.10, 0.15, 0.20, 0.25},   // brightness
    {0.75, 0.60, 0.45, 0.30, 0.15},   // contrast
    {0.6, 0.5, 0.4, 0.3, 0.25},       // pixelate
    {0.15, 0.25, 0.35, 0.45, 0.55},   // occlusion
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t variant_seed(std::uint64_t seed, std::uint64_t sample_id, CorruptionType type, int severity) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ sample_id);
    h = splitmix64(h ^ static_cast<std::uint64_t>(type));
    return splitmix64(h ^ static_cast<std::uint64_t>(severity));
}

void clamp_unit(std::vector<float>& img) {
    for (float& v : img) v = std::clamp(v, 0.0f, 1.0f);
}

std::vector<float> blur(std::span<const float> img, const ImageShape& s, double sigma) {
    if (sigma <= 0.0) return {img.begin(), img.end()};
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> kernel;
    double total = 0.0;
    for (long k = -radius; k <= radius; ++k) {
        kernel.push_back(std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma)));
        total += kernel.back();
    }
    for (double& k : kernel) k /= total;

    const long h = static_cast<long>(s.height);
    const long w = static_cast<long>(s.width);
    const long c = static_cast<long>(s.channels);
    auto at = [&](long r, long col, long ch) { return static_cast<std::size_t>((r * w + col) * c + ch); };
    std::vector<double> tmp(img.size());
    for (long r = 0; r < h; ++r) {
        for (long col = 0; col < w; ++col) {
            for (long ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (long k = -radius; k <= radius; ++k) {
                    const long cc = std::clamp(col + k, 0L, w - 1);
                    acc += kernel[static_cast<std::size_t>(k + radius)] * img[at(r, cc, ch)];
                }
                tmp[at(r, col, ch)] = acc;
            }
        }
    }
    std::vector<float> out(img.size());
    for (long r = 0; r < h; ++r) {
        for (long col = 0; col < w; ++col) {
            for (long ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (long k = -radius; k <= radius; ++k) {
                    const long rr = std::clamp(r + k, 0L, h - 1);
                    acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[at(rr, col, ch)];
                }
                out[at(r, col, ch)] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

std::vector<float> pixelate(std::span<const float> img, const ImageShape& s, double factor) {
    const std::size_t sh = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(factor * static_cast<double>(s.height))));
    const std::size_t sw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(factor * static_cast<double>(s.width))));
    const std::size_t c = s.channels;
    std::vector<double> sum(sh * sw * c, 0.0);
    std::vector<std::size_t> count(sh * sw, 0);
    auto block_r = [&](std::size_t r) { return r * sh / s.height; };
    auto block_c = [&](std::size_t col) { return col * sw / s.width; };
    for (std::size_t r = 0; r < s.height; ++r) {
        for (std::size_t col = 0; col < s.width; ++col) {
            const std::size_t b = block_r(r) * sw + block_c(col);
            ++count[b];
            for (std::size_t ch = 0; ch < c; ++ch) sum[b * c + ch] += img[(r * s.width + col) * c + ch];
        }
    }
    std::vector<float> out(img.size());
    for (std::size_t r = 0; r < s.height; ++r) {
        for (std::size_t col = 0; col < s.width; ++col) {
            const std::size_t b = block_r(r) * sw + block_c(col);
            for (std::size_t ch = 0; ch < c; ++ch) {
                out[(r * s.width + col) * c + ch] = static_cast<float>(sum[b * c + ch] / static_cast<double>(count[b]));
            }
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(CorruptionType t) {
    switch (t) {
        case CorruptionType::gaussian_noise: return "gaussian_noise";
        case CorruptionType::shot_noise: return "shot_noise";
        case CorruptionType::impulse_noise: return "impulse_noise";
        case CorruptionType::gaussian_blur: return "gaussian_blur";
        case CorruptionType::brightness: return "brightness";
        case CorruptionType::contrast: return "contrast";
        case CorruptionType::pixelate: return "pixelate";
        case CorruptionType::occlusion: return "occlusion";
    }
    return "unknown";
}

CorruptionType parse_corruption_type(std::string_view name) {
    for (auto t : kAllTypes) {
        if (to_string(t) == name) return t;
    }
    throw std::invalid_argument("unknown corruption type '" + std::string(name) + "'");
}

const std::array<CorruptionType, 8>& all_corruption_types() { return kAllTypes; }

std::vector<CorruptionType> default_suite_types() {
    return {CorruptionType::gaussian_noise, CorruptionType::shot_noise, CorruptionType::impulse_noise,
            CorruptionType::gaussian_blur, CorruptionType::contrast, CorruptionType::occlusion};
}

double severity_parameter(CorruptionType type, int severity) {
    if (severity < 1 || severity > kSeverityLevels) {
        throw std::out_of_range("severity " + std::to_string(severity) + " outside 1..5");
    }
    return kTable[static_cast<std::size_t>(type)][severity - 1];
}

std::vector<float> apply_corruption(std::span<const float> image, const ImageShape& shape, CorruptionType type,
                                    double p, std::uint64_t seed) {
    if (shape.pixels() != image.size()) throw DimensionError("image size does not match its shape");
    for (float v : image) {
        if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("pixel outside [0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::vector<float> out(image.begin(), image.end());
    switch (type) {
        case CorruptionType::gaussian_noise: {
            if (p > 0.0) {
                std::normal_distribution<double> noise(0.0, p);
                for (float& v : out) v = static_cast<float>(v + noise(rng));
            }
            break;
        }
        case CorruptionType::shot_noise: {
            for (float& v : out) {
                std::poisson_distribution<long> photons(std::max(1e-12, static_cast<double>(v) * p));
                v = static_cast<float>(static_cast<double>(photons(rng)) / p);
            }
            break;
        }
        case CorruptionType::impulse_noise: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (float& v : out) {
                if (u(rng) < p) v = u(rng) < 0.5 ? 0.0f : 1.0f;
            }
            break;
        }
        case CorruptionType::gaussian_blur:
            out = blur(image, shape, p);
            break;
        case CorruptionType::brightness:
            for (float& v : out) v = static_cast<float>(v + p);
            break;
        case CorruptionType::contrast: {
            for (std::size_t ch = 0; ch < shape.channels; ++ch) {
                double mean = 0.0;
                for (std::size_t k = ch; k < out.size(); k += shape.channels) mean += out[k];
                mean /= static_cast<double>(shape.height * shape.width);
                for (std::size_t k = ch; k < out.size(); k += shape.channels) {
                    out[k] = static_cast<float>((out[k] - mean) * p + mean);
                }
            }
            break;
        }
        case CorruptionType::pixelate:
            out = pixelate(image, shape, p);
            break;
        case CorruptionType::occlusion: {
            const std::size_t side_limit = std::min(shape.height, shape.width);
            const auto side = std::clamp<std::size_t>(
                static_cast<std::size_t>(std::ceil(p * static_cast<double>(side_limit))), 1, side_limit);
            std::uniform_int_distribution<std::size_t> top(0, shape.height - std::min(side, shape.height));
            std::uniform_int_distribution<std::size_t> left(0, shape.width - std::min(side, shape.width));
            const std::size_t r0 = top(rng);
            const std::size_t c0 = left(rng);
            for (std::size_t r = r0; r < std::min(shape.height, r0 + side); ++r) {
                for (std::size_t col = c0; col < std::min(shape.width, c0 + side); ++col) {
                    for (std::size_t ch = 0; ch < shape.channels; ++ch) {
                        out[(r * shape.width + col) * shape.channels + ch] = 0.0f;
                    }
                }
            }
            break;
        }
    }
    clamp_unit(out);
    return out;
}

std::vector<float> corrupt(std::span<const float> image, const ImageShape& shape, const CorruptionSpec& spec) {
    return apply_corruption(image, shape, spec.type, severity_parameter(spec.type, spec.severity), spec.seed);
}

const Matrix& CorruptedDataset::variant(const std::string& type, int severity) const {
    auto it = variants.find({type, severity});
    if (it == variants.end()) {
        throw std::out_of_range("suite has no variant " + type + " severity " + std::to_string(severity));
    }
    return it->second;
}

LabeledDataset CorruptedDataset::as_dataset(const std::string& type, int severity) const {
    LabeledDataset ds;
    ds.id = base_id + ":" + type + "@" + std::to_string(severity);
    ds.inputs = variant(type, severity);
    ds.labels = labels;
    ds.sample_ids = sample_ids;
    ds.class_count = class_count;
    ds.image = shape;
    return ds;
}

void CorruptedDataset::validate() const {
    if (types.empty()) throw std::invalid_argument("corruption suite has no types");
    if (sample_ids.size() != labels.size()) throw DimensionError("suite ids/labels length mismatch");
    if (variants.size() != variants_per_sample()) {
        throw FormatError("suite has " + std::to_string(variants.size()) + " variant sets, expected " +
                          std::to_string(variants_per_sample()));
    }
    for (const auto& t : types) {
        for (int s = 1; s <= kSeverityLevels; ++s) {
            const Matrix& m = variant(t, s);
            if (m.rows() != size() || m.cols() != shape.pixels()) {
                throw DimensionError("variant " + t + "@" + std::to_string(s) + " has the wrong shape");
            }
        }
    }
    for (auto y : labels) {
        if (y >= class_count) throw std::invalid_argument("suite label out of range");
    }
}

CorruptedDataset build_suite(const LabeledDataset& data, std::span<const CorruptionType> types, std::uint64_t seed) {
    if (types.empty()) throw std::invalid_argument("corruption suite needs at least one type");
    data.validate();
    CorruptedDataset suite;
    suite.base_id = data.id;
    suite.labels = data.labels;
    suite.sample_ids = data.sample_ids;
    suite.class_count = data.class_count;
    suite.shape = data.image.value_or(ImageShape{1, data.input_dim(), 1});
    for (CorruptionType t : types) {
        const std::string name(to_string(t));
        if (std::find(suite.types.begin(), suite.types.end(), name) != suite.types.end()) {
            throw std::invalid_argument("duplicate corruption type " + name);
        }
        suite.types.push_back(name);
        for (int s = 1; s <= kSeverityLevels; ++s) {
            Matrix m(data.size(), data.input_dim());
            for (std::size_t i = 0; i < data.size(); ++i) {
                const auto img = corrupt(data.inputs.row(i), suite.shape,
                                         CorruptionSpec{t, s, variant_seed(seed, data.sample_ids[i], t, s)});
                std::copy(img.begin(), img.end(), m.row(i).begin());
            }
            suite.variants.emplace(CorruptedDataset::Key{name, s}, std::move(m));
        }
    }
    return suite;
}

std::vector<RobustnessRecord> per_sample_robustness(const Network& net, const CorruptedDataset& suite) {
    suite.validate();
    if (suite.class_count != net.spec().class_count()) {
        std::ostringstream msg;
        msg << "suite has " << suite.class_count << " classes, network has " << net.spec().class_count();
        throw DimensionError(msg.str());
    }
    std::vector<RobustnessRecord> records(suite.size());
    for (std::size_t i = 0; i < suite.size(); ++i) {
        records[i].sample_id = suite.sample_ids[i];
        records[i].max_count = static_cast<std::uint32_t>(suite.variants_per_sample());
    }
    for (const auto& [key, inputs] : suite.variants) {
        const auto pred = predict(net, inputs);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == suite.labels[i]) ++records[i].correct_count;
        }
    }
    return records;
}

std::uint64_t aggregate_robustness(std::span<const RobustnessRecord> records) {
    std::uint64_t total = 0;
    for (const auto& r : records) total += r.correct_count;
    return total;
}

}  // namespace geoprune
