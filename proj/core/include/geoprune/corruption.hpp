#pragma once

// Deterministic image corruptions at severities 1..5.
//
// Severity parameter table (index = severity - 1). These constants are part of
// the archive contract; changing them changes every generated suite.
//
//   gaussian_noise  noise std            0.08  0.12  0.18  0.26  0.38
//   shot_noise      photon count lambda  60    25    12    5     3
//   impulse_noise   salt/pepper fraction 0.03  0.06  0.09  0.17  0.27
//   gaussian_blur   kernel sigma (px)    0.5   0.75  1.0   1.5   2.0
//   brightness      additive offset      0.05  0.10  0.15  0.20  0.25
//   contrast        contrast factor      0.75  0.60  0.45  0.30  0.15
//   pixelate        resample factor      0.6   0.5   0.4   0.3   0.25
//   occlusion       patch side fraction  0.15  0.25  0.35  0.45  0.55
//
// Pixels live in [0, 1] and every output is clamped back into that range.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoprune/network.hpp"

namespace geoprune {

enum class CorruptionType {
    gaussian_noise,
    shot_noise,
    impulse_noise,
    gaussian_blur,
    brightness,
    contrast,
    pixelate,
    occlusion,
};

inline constexpr int kSeverityLevels = 5;

std::string_view to_string(CorruptionType t);
CorruptionType parse_corruption_type(std::string_view name);
const std::array<CorruptionType, 8>& all_corruption_types();
/// Six-type desk suite: the three noises, blur, contrast and occlusion.
std::vector<CorruptionType> default_suite_types();

struct CorruptionSpec {
    CorruptionType type = CorruptionType::gaussian_noise;
    int severity = 1;
    std::uint64_t seed = 0;
};

/// Table lookup; throws std::out_of_range for severities outside 1..5.
double severity_parameter(CorruptionType type, int severity);

std::vector<float> corrupt(std::span<const float> image, const ImageShape& shape, const CorruptionSpec& spec);
/// Same transforms with an explicit parameter instead of a severity (e.g. zero noise).
std::vector<float> apply_corruption(std::span<const float> image, const ImageShape& shape, CorruptionType type,
                                    double parameter, std::uint64_t seed);

/// Corrupted copies x_i^{c,s} of a base dataset, keyed by (type name, severity).
/// Type names are free-form so ingested archives may carry types this library
/// does not implement.
struct CorruptedDataset {
    using Key = std::pair<std::string, int>;

    std::string base_id;
    std::vector<std::uint32_t> labels;
    std::vector<std::uint64_t> sample_ids;
    std::size_t class_count = 0;
    ImageShape shape;
    std::vector<std::string> types;    // in suite order
    std::map<Key, Matrix> variants;    // each N × pixels

    std::size_t size() const { return labels.size(); }
    std::size_t variants_per_sample() const { return types.size() * kSeverityLevels; }
    std::size_t total_variants() const { return size() * variants_per_sample(); }
    const Matrix& variant(const std::string& type, int severity) const;
    /// The variant set for one (type, severity) as a labelled dataset sharing ids and labels.
    LabeledDataset as_dataset(const std::string& type, int severity) const;
    void validate() const;

    friend bool operator==(const CorruptedDataset&, const CorruptedDataset&) = default;
};

/// Throws std::invalid_argument on an empty type list.
CorruptedDataset build_suite(const LabeledDataset& data, std::span<const CorruptionType> types, std::uint64_t seed);

struct RobustnessRecord {
    std::uint64_t sample_id = 0;
    std::uint32_t correct_count = 0;
    std::uint32_t max_count = 0;

    friend bool operator==(const RobustnessRecord&, const RobustnessRecord&) = default;
};

/// correct_count = number of corrupted variants of the sample predicted as its true label.
/// The clean input is not counted.
std::vector<RobustnessRecord> per_sample_robustness(const Network& net, const CorruptedDataset& suite);
std::uint64_t aggregate_robustness(std::span<const RobustnessRecord> records);

/// Archive layout:
///   manifest.json  {"format":"geoprune-corruption-archive","version":1,
///                   "base_dataset", "samples", "input_dim", "class_count",
///                   "image":{"height","width","channels"}, "types":[...],
///                   "labels":{"file","dtype":"uint32"}, "sample_ids":{"file","dtype":"uint64"},
///                   "arrays":[{"type","severity","file","shape":[N,D],"dtype":"float32","sha256"}...]}
///   <type>-s<severity>.f32   raw little-endian float32, N×D row-major
///   labels.u32, sample_ids.u64
void export_archive(const std::filesystem::path& dir, const CorruptedDataset& suite);

/// Validates shapes, byte counts, hashes, severity coverage and pixel range.
/// With `base`, labels and ids come from the base dataset (aligned by index).
CorruptedDataset ingest_archive(const std::filesystem::path& dir, const LabeledDataset* base = nullptr);

}  // namespace geoprune
