#include "geoprune/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "geoprune/error.hpp"

namespace geoprune {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("pearson: series lengths differ");
    if (x.size() < 3) throw std::invalid_argument("pearson: need at least 3 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

CorrelationReport metric_robustness_correlations(const GeometrySnapshot& clean,
                                                 std::span<const RobustnessRecord> records) {
    std::vector<double> angle, length, margin, robust;
    CorrelationReport report;
    for (const auto& r : records) {
        const std::size_t idx = clean.find(r.sample_id);
        if (idx == GeometrySnapshot::npos) continue;
        const auto& s = clean.samples[idx];
        if (s.degenerate) {
            ++report.excluded_degenerate;
            continue;
        }
        angle.push_back(s.angle_to_true());
        length.push_back(s.length);
        margin.push_back(signed_margin(s));
        robust.push_back(static_cast<double>(r.correct_count));
    }
    if (robust.size() < 3) {
        throw std::invalid_argument("correlation needs at least 3 aligned samples, got " + std::to_string(robust.size()));
    }
    report.n = robust.size();
    report.rc_angle = pearson(angle, robust);
    report.rc_l2 = pearson(length, robust);
    report.rc_margin = pearson(margin, robust);
    return report;
}

double DensityCurve::area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < heights.size(); ++i) a += heights[i] * (edges[i + 1] - edges[i]);
    return a;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

DensityCurve density(std::span<const double> values, std::size_t bins, std::string metric) {
    if (values.empty()) throw std::invalid_argument("density of an empty series");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) throw std::invalid_argument("density input must be finite");
    }
    std::sort(sorted.begin(), sorted.end());
    double lo = sorted.front();
    double hi = sorted.back();
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    if (bins == 0) {
        const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
        std::size_t fd = width > 0.0 ? static_cast<std::size_t>(std::ceil((hi - lo) / width)) : 0;
        bins = std::clamp<std::size_t>(fd, 10, 512);
    }
    DensityCurve curve;
    curve.metric = std::move(metric);
    curve.count = sorted.size();
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) curve.edges.push_back(lo + width * static_cast<double>(b));
    curve.edges.back() = hi;
    std::vector<std::size_t> counts(bins, 0);
    for (double v : sorted) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        ++counts[std::min(b, bins - 1)];
    }
    const double n = static_cast<double>(sorted.size());
    for (std::size_t b = 0; b < bins; ++b) {
        curve.centers.push_back(0.5 * (curve.edges[b] + curve.edges[b + 1]));
        curve.heights.push_back(static_cast<double>(counts[b]) / (n * (curve.edges[b + 1] - curve.edges[b])));
    }
    return curve;
}

std::vector<KeyedValue> trim_extremes(std::vector<KeyedValue> values, double fraction) {
    if (!(fraction >= 0.0 && fraction < 0.5)) throw std::invalid_argument("trim fraction must be in [0, 0.5)");
    std::sort(values.begin(), values.end(), [](const KeyedValue& a, const KeyedValue& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
        return a.variant < b.variant;
    });
    const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(values.size())));
    return {values.begin() + static_cast<std::ptrdiff_t>(cut), values.end() - static_cast<std::ptrdiff_t>(cut)};
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty series");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RelativeMarginChange relative_margin_change(const GeometrySnapshot& reference,
                                            std::span<const GeometrySnapshot> corrupted) {
    RelativeMarginChange out;
    std::vector<KeyedValue> all;
    for (const auto& snap : corrupted) {
        for (const auto& s : snap.samples) {
            const std::size_t idx = reference.find(s.sample_id);
            if (idx == GeometrySnapshot::npos) continue;
            ++out.pairs;
            const double m0 = signed_margin(reference.samples[idx]);
            if (std::abs(m0) <= kMarginEpsilon) {
                ++out.excluded_small;
                continue;
            }
            all.push_back({(m0 - signed_margin(s)) / m0, s.sample_id, snap.dataset_id});
        }
    }
    if (all.empty()) throw std::invalid_argument("relative margin change: no valid (sample, variant) pairs");
    const std::size_t before = all.size();
    out.kept = trim_extremes(std::move(all));
    out.trimmed = before - out.kept.size();
    std::vector<double> v;
    v.reserve(out.kept.size());
    for (const auto& k : out.kept) v.push_back(k.value);
    out.median = median(v);
    out.density = density(v, 0, "relative_margin_change");
    return out;
}

namespace {
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

AngleExperimentResult random_angle_experiment(std::span<const std::size_t> dims, std::size_t pairs, std::uint64_t seed) {
    if (pairs < 2) throw std::invalid_argument("angle experiment needs at least 2 pairs");
    AngleExperimentResult result;
    for (std::size_t d : dims) {
        if (d < 2) throw std::invalid_argument("angle experiment dimensions must be >= 2");
        std::mt19937_64 rng(mix(seed ^ mix(d)));
        std::uniform_real_distribution<double> coord(-1.0, 1.0);
        std::vector<double> a(d), b(d);
        auto draw = [&](std::vector<double>& v) {
            double n2 = 0.0;
            do {
                n2 = 0.0;
                for (double& x : v) {
                    x = coord(rng);
                    n2 += x * x;
                }
            } while (n2 == 0.0);
            return std::sqrt(n2);
        };
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t p = 0; p < pairs; ++p) {
            const double na = draw(a);
            const double nb = draw(b);
            double dp = 0.0;
            for (std::size_t k = 0; k < d; ++k) dp += a[k] * b[k];
            const double deg = std::acos(std::clamp(dp / (na * nb), -1.0, 1.0)) * 180.0 / std::numbers::pi;
            sum += deg;
            sum2 += deg * deg;
        }
        const double n = static_cast<double>(pairs);
        const double mean = sum / n;
        const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
        result.rows.push_back({d, mean, std::sqrt(var), pairs});
    }
    return result;
}

AngleSummary angle_to_true_summary(const GeometrySnapshot& snapshot) {
    AngleSummary s;
    double sum = 0.0, sum2 = 0.0;
    for (const auto& sample : snapshot.samples) {
        if (sample.degenerate) continue;
        const double a = sample.angle_to_true();
        sum += a;
        sum2 += a * a;
        ++s.n;
    }
    if (s.n == 0) throw std::invalid_argument("no non-degenerate samples");
    const double n = static_cast<double>(s.n);
    s.mean_deg = sum / n;
    s.std_deg = s.n > 1 ? std::sqrt(std::max(0.0, (sum2 - n * s.mean_deg * s.mean_deg) / (n - 1.0))) : 0.0;
    return s;
}

}  // namespace geoprune
