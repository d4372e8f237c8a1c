#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geoprune/corruption.hpp"
#include "geoprune/geometry.hpp"

namespace geoprune {

/// Product-moment correlation. Needs equal lengths >= 3; throws
/// UndefinedCorrelation when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);
/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
    double rc_angle = 0.0;   // corr(angle to true class, robustness)
    double rc_l2 = 0.0;      // corr(feature length, robustness)
    double rc_margin = 0.0;  // corr(signed margin, robustness)
    std::size_t n = 0;
    std::size_t excluded_degenerate = 0;
};

/// Joins clean-data geometry with per-sample robustness on sample id.
CorrelationReport metric_robustness_correlations(const GeometrySnapshot& clean,
                                                 std::span<const RobustnessRecord> records);

struct DensityCurve {
    std::string metric;
    std::vector<double> edges;    // bins + 1 entries
    std::vector<double> centers;
    std::vector<double> heights;  // normalised so sum(height * width) == 1
    std::size_t count = 0;

    double area() const;
};

/// Histogram density. With bins == 0 the bin count follows Freedman-Diaconis,
/// floored at 10 and capped at 512. A constant series gets a unit-width range
/// centred on the value.
DensityCurve density(std::span<const double> values, std::size_t bins = 0, std::string metric = {});

struct KeyedValue {
    double value = 0.0;
    std::uint64_t sample_id = 0;
    std::string variant;  // dataset id of the corrupted copy, e.g. "gaussian_noise@3"

    friend bool operator==(const KeyedValue&, const KeyedValue&) = default;
};

/// Drops floor(fraction * n) lowest and highest values. Order is by value,
/// then (sample_id, variant), so the surviving multiset is independent of
/// input order. Returns survivors sorted by that order.
std::vector<KeyedValue> trim_extremes(std::vector<KeyedValue> values, double fraction = 0.005);

inline constexpr double kMarginEpsilon = 1e-9;

struct RelativeMarginChange {
    std::vector<KeyedValue> kept;        // after trimming, ascending
    std::size_t pairs = 0;               // matched (sample, variant) pairs
    std::size_t excluded_small = 0;      // |m_original| <= kMarginEpsilon
    std::size_t trimmed = 0;             // removed from both tails together
    double median = 0.0;
    DensityCurve density;
};

/// (m_original - m_corrupted) / m_original per matched sample and variant,
/// using signed margins, followed by 0.5 % / 0.5 % trimming.
/// Throws std::invalid_argument when no valid pair remains.
RelativeMarginChange relative_margin_change(const GeometrySnapshot& reference,
                                            std::span<const GeometrySnapshot> corrupted);

double median(std::vector<double> values);

struct AngleExperimentRow {
    std::size_t dim = 0;
    double mean_deg = 0.0;
    double std_deg = 0.0;
    std::size_t pairs = 0;
};

struct AngleExperimentResult {
    std::vector<AngleExperimentRow> rows;
};

/// Angles between independent random vectors with i.i.d. U[-1, 1] coordinates.
/// Each dimension draws from its own stream derived from (seed, dim).
AngleExperimentResult random_angle_experiment(std::span<const std::size_t> dims, std::size_t pairs, std::uint64_t seed);

struct AngleSummary {
    double mean_deg = 0.0;
    double std_deg = 0.0;
    std::size_t n = 0;
};

/// Mean and sample std of the angle to the true class over non-degenerate samples.
AngleSummary angle_to_true_summary(const GeometrySnapshot& snapshot);

}  // namespace geoprune
