#include "geoprune/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace geoprune::synthetic {

LabeledDataset make_blobs(const BlobOptions& opts) {
    if (opts.classes < 2) throw std::invalid_argument("blobs need at least 2 classes");
    if (opts.samples == 0) throw std::invalid_argument("blobs need at least one sample");
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> noise(0.0, opts.spread);

    LabeledDataset ds;
    ds.id = "blobs";
    ds.class_count = opts.classes;
    ds.inputs = Matrix(opts.samples, 2);
    for (std::size_t i = 0; i < opts.samples; ++i) {
        const auto label = static_cast<std::uint32_t>(i % opts.classes);
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(label) / static_cast<double>(opts.classes) +
                           std::numbers::pi / 4.0;
        ds.inputs(i, 0) = static_cast<float>(opts.radius * std::cos(phi) + noise(rng));
        ds.inputs(i, 1) = static_cast<float>(opts.radius * std::sin(phi) + noise(rng));
        ds.labels.push_back(label);
        ds.sample_ids.push_back(opts.first_id + i);
    }
    return ds;
}

namespace {

// Stroke pattern for class c evaluated at (r, col) on an n×n grid.
bool glyph_on(std::size_t c, long r, long col, long n) {
    const long mid = n / 2;
    switch (c) {
        case 0: return r == mid - 1 || r == mid;                       // horizontal bar
        case 1: return col == mid - 1 || col == mid;                   // vertical bar
        case 2: return std::abs(r - col) <= 0;                         // diagonal
        case 3: return std::abs(r + col - (n - 1)) <= 0;               // anti-diagonal
        case 4: return (r == 1 || r == n - 2 || col == 1 || col == n - 2) && r >= 1 && r <= n - 2 &&
                       col >= 1 && col <= n - 2;                       // box outline
        case 5: return (r == mid && col >= 1 && col <= n - 2) || (col == mid && r >= 1 && r <= n - 2);
        case 6: return r < mid && col < mid;                           // top-left block
        case 7: return r >= mid && col >= mid;                         // bottom-right block
        case 8: {
            const double dr = static_cast<double>(r) - (static_cast<double>(n) - 1.0) / 2.0;
            const double dc = static_cast<double>(col) - (static_cast<double>(n) - 1.0) / 2.0;
            const double d = std::sqrt(dr * dr + dc * dc);
            return std::abs(d - static_cast<double>(n) / 3.0) < 0.75;  // ring
        }
        case 9: return r == col || r + col == n - 1;                  // X
        default: return false;
    }
}

std::vector<double> render_glyph(std::size_t c, long shift_r, long shift_c, std::size_t side) {
    const long n = static_cast<long>(side);
    std::vector<double> img(side * side, 0.0);
    for (long r = 0; r < n; ++r) {
        for (long col = 0; col < n; ++col) {
            const long sr = r - shift_r;
            const long sc = col - shift_c;
            if (sr < 0 || sc < 0 || sr >= n || sc >= n) continue;
            if (glyph_on(c, sr, sc, n)) img[static_cast<std::size_t>(r * n + col)] = 1.0;
        }
    }
    return img;
}

}  // namespace

LabeledDataset make_glyphs(const GlyphOptions& opts) {
    if (opts.classes < 2 || opts.classes > 10) throw std::invalid_argument("glyphs support 2..10 classes");
    if (opts.side < 6) throw std::invalid_argument("glyph side must be at least 6");
    if (opts.samples == 0) throw std::invalid_argument("glyphs need at least one sample");

    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<int> shift(-1, 1);
    std::uniform_real_distribution<double> intensity(0.35, 1.0);
    std::uniform_real_distribution<double> noise_level(0.0, 0.3);
    std::uniform_real_distribution<double> blend(0.0, 0.7);
    std::uniform_int_distribution<std::size_t> other(1, opts.classes - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t dim = opts.side * opts.side;
    LabeledDataset ds;
    ds.id = "glyphs";
    ds.class_count = opts.classes;
    ds.image = ImageShape{opts.side, opts.side, 1};
    ds.inputs = Matrix(opts.samples, dim);
    for (std::size_t i = 0; i < opts.samples; ++i) {
        const std::size_t label = i % opts.classes;
        const std::size_t distractor = (label + other(rng)) % opts.classes;
        const auto main = render_glyph(label, shift(rng), shift(rng), opts.side);
        const auto extra = render_glyph(distractor, shift(rng), shift(rng), opts.side);
        const double a = intensity(rng);
        const double b = blend(rng) * a;
        const double sigma = noise_level(rng);
        for (std::size_t k = 0; k < dim; ++k) {
            const double v = a * main[k] + b * extra[k] + sigma * gauss(rng) + 0.1;
            ds.inputs(i, k) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
        ds.labels.push_back(static_cast<std::uint32_t>(label));
        ds.sample_ids.push_back(opts.first_id + i);
    }
    return ds;
}

}  // namespace geoprune::synthetic
