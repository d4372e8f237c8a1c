#pragma once

#include <cstddef>
#include <cstdint>

#include "geoprune/network.hpp"

namespace geoprune::synthetic {

struct BlobOptions {
    std::size_t samples = 400;
    std::size_t classes = 2;
    double radius = 3.0;   // class centers sit on a circle of this radius
    double spread = 0.5;   // isotropic std of each blob
    std::uint64_t seed = 0;
    std::uint64_t first_id = 0;
};

/// 2-D Gaussian blobs, class-balanced (round robin). Centers are spread
/// evenly in angle, so classes are separable by direction alone.
LabeledDataset make_blobs(const BlobOptions& opts);

struct GlyphOptions {
    std::size_t samples = 1000;
    std::size_t classes = 4;  // up to 10 stroke patterns
    std::size_t side = 8;     // square grayscale images
    std::uint64_t seed = 0;
    std::uint64_t first_id = 0;
};

/// Small grayscale stroke images (bars, diagonals, boxes, ...). Each sample
/// varies in shift, stroke intensity, background noise, and how much of a
/// distractor glyph from another class is blended in, so samples span a
/// range of difficulty.
LabeledDataset make_glyphs(const GlyphOptions& opts);

}  // namespace geoprune::synthetic
