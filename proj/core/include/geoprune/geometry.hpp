#pragma once

// Penultimate-layer geometry of a bias-free softmax classifier.
//
// With logits z_j = W_j · X, the softmax probability of class i can be written
// purely in terms of the feature length |X|, the class-direction norms C_j = |W_j|
// and the angles theta_j between X and W_j:
//
//   p_i = 1 / (1 + sum_{j != i} exp(|X| (C_j cos theta_j - C_i cos theta_i)))
//
// The decision boundary between classes p and j is the hyperplane
// (W_p - W_j) · X = 0, so the distance of X to the nearest boundary of its
// predicted class p is min_{j != p} (W_p - W_j) · X / |W_p - W_j|.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geoprune/network.hpp"

namespace geoprune {

inline constexpr double kDegenerateEpsilon = 1e-12;

struct ClassDirections {
    Matrix directions;          // C × m, row j is W_j
    std::vector<double> norms;  // C_j = |W_j|

    std::size_t class_count() const { return directions.rows(); }
    std::size_t width() const { return directions.cols(); }
};

/// Throws std::invalid_argument if any class direction has zero norm.
ClassDirections class_directions(const Network& net);

/// Angle between a feature vector and a direction, in degrees.
/// Throws DegenerateFeature when |x| <= kDegenerateEpsilon.
double angle_degrees(std::span<const float> x, std::span<const float> direction);

/// Distance from X to the nearest decision boundary of `predicted`.
/// `predicted` must be the argmax class of X; tiny negative terms from float
/// rounding are clamped to zero, anything larger throws.
double margin(std::span<const float> x, const ClassDirections& dirs, std::uint32_t predicted);

/// Softmax probability of `cls` through the angle/length decomposition.
double decompose_probability(std::span<const float> x, const ClassDirections& dirs, std::uint32_t cls);

struct GeometrySample {
    std::uint64_t sample_id = 0;
    std::uint32_t true_label = 0;
    std::uint32_t predicted_label = 0;
    std::vector<float> angles;  // degrees, one per class; NaN when degenerate
    float length = 0.0f;
    float distance = 0.0f;      // unsigned distance to the predicted class's nearest boundary
    bool correct = false;
    bool degenerate = false;

    float angle_to_true() const { return angles.at(true_label); }
    /// Bitwise on floats, so NaN angles of degenerate samples compare equal.
    friend bool operator==(const GeometrySample& a, const GeometrySample& b);
};

/// +distance for a correct prediction, -distance otherwise.
double signed_margin(const GeometrySample& sample);

struct GeometrySnapshot {
    std::string combination_id;
    std::string dataset_id;
    std::size_t class_count = 0;
    std::string created_at;
    std::vector<GeometrySample> samples;  // sorted by sample_id

    double accuracy() const;
    std::size_t correct_count() const;
    /// Index of a sample id, or npos.
    std::size_t find(std::uint64_t sample_id) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    void validate() const;
};

/// One record per input. Degenerate features are kept and flagged.
GeometrySnapshot geometry_snapshot(const Network& net, const LabeledDataset& data,
                                   std::string combination_id = {}, std::string dataset_id = {});

/// Builds a record from an already-computed feature row and logit row.
GeometrySample geometry_sample(std::span<const float> features, std::span<const float> logits,
                               const ClassDirections& dirs, std::uint64_t sample_id, std::uint32_t true_label);

/// Snapshot binary layout (little-endian):
///   char[4] "GPSN", u32 version (1), u64 N, u32 C,
///   u32 len + combination id, u32 len + dataset id, u32 len + created_at,
///   u64 ids[N], u32 true[N], u32 predicted[N], u8 flags[N] (bit0 correct, bit1 degenerate),
///   f32 angles[C*N] class-major (all samples for class 0, then class 1, ...),
///   f32 length[N], f32 signed_margin[N]
std::vector<unsigned char> encode_snapshot(const GeometrySnapshot& snapshot);
GeometrySnapshot decode_snapshot(std::span<const unsigned char> bytes);

}  // namespace geoprune
