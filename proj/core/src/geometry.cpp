#include "geoprune/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "geoprune/error.hpp"

namespace geoprune {

ClassDirections class_directions(const Network& net) {
    const Layer& cls = net.classifier();
    if (cls.bias) throw std::invalid_argument("classifier layer has a bias");
    ClassDirections d;
    d.directions = cls.weights;
    for (std::size_t j = 0; j < d.directions.rows(); ++j) {
        const double n = l2_norm(d.directions.row(j));
        if (!(n > kDegenerateEpsilon)) {
            throw std::invalid_argument("class direction " + std::to_string(j) + " has zero norm");
        }
        d.norms.push_back(n);
    }
    return d;
}

double angle_degrees(std::span<const float> x, std::span<const float> direction) {
    if (x.size() != direction.size()) throw DimensionError("feature and direction widths differ");
    const double nx = l2_norm(x);
    if (!(nx > kDegenerateEpsilon)) throw DegenerateFeature("feature vector has zero length");
    const double nw = l2_norm(direction);
    if (!(nw > kDegenerateEpsilon)) throw std::invalid_argument("direction has zero length");
    const double c = std::clamp(dot(x, direction) / (nx * nw), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

double margin(std::span<const float> x, const ClassDirections& dirs, std::uint32_t predicted) {
    if (x.size() != dirs.width()) throw DimensionError("feature width differs from class directions");
    if (predicted >= dirs.class_count()) throw std::out_of_range("predicted class out of range");
    auto wp = dirs.directions.row(predicted);
    const double nx = l2_norm(x);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dirs.class_count(); ++j) {
        if (j == predicted) continue;
        auto wj = dirs.directions.row(j);
        double num = 0.0;
        double den2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double diff = static_cast<double>(wp[k]) - static_cast<double>(wj[k]);
            num += diff * x[k];
            den2 += diff * diff;
        }
        if (den2 == 0.0) {
            throw std::invalid_argument("class directions " + std::to_string(predicted) + " and " +
                                        std::to_string(j) + " coincide; boundary undefined");
        }
        double dist = num / std::sqrt(den2);
        if (dist < 0.0) {
            if (dist < -1e-5 * (nx + 1.0)) {
                throw std::invalid_argument("class " + std::to_string(predicted) + " is not the argmax of the features");
            }
            dist = 0.0;
        }
        best = std::min(best, dist);
    }
    return best;
}

double decompose_probability(std::span<const float> x, const ClassDirections& dirs, std::uint32_t cls) {
    if (cls >= dirs.class_count()) throw std::out_of_range("class out of range");
    const double nx = l2_norm(x);
    if (!(nx > kDegenerateEpsilon)) throw DegenerateFeature("feature vector has zero length");
    std::vector<double> cosines(dirs.class_count());
    for (std::size_t j = 0; j < dirs.class_count(); ++j) {
        cosines[j] = dot(x, dirs.directions.row(j)) / (nx * dirs.norms[j]);
    }
    const double own = dirs.norms[cls] * cosines[cls];
    double sum = 1.0;
    for (std::size_t j = 0; j < dirs.class_count(); ++j) {
        if (j == cls) continue;
        sum += std::exp(nx * (dirs.norms[j] * cosines[j] - own));
    }
    return 1.0 / sum;
}

namespace {
bool same_bits(float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }
}  // namespace

bool operator==(const GeometrySample& a, const GeometrySample& b) {
    if (a.sample_id != b.sample_id || a.true_label != b.true_label || a.predicted_label != b.predicted_label ||
        a.correct != b.correct || a.degenerate != b.degenerate || a.angles.size() != b.angles.size()) {
        return false;
    }
    if (!same_bits(a.length, b.length) || !same_bits(a.distance, b.distance)) return false;
    for (std::size_t j = 0; j < a.angles.size(); ++j) {
        if (!same_bits(a.angles[j], b.angles[j])) return false;
    }
    return true;
}

double signed_margin(const GeometrySample& sample) {
    return sample.correct ? static_cast<double>(sample.distance) : -static_cast<double>(sample.distance);
}

double GeometrySnapshot::accuracy() const {
    if (samples.empty()) return 0.0;
    return static_cast<double>(correct_count()) / static_cast<double>(samples.size());
}

std::size_t GeometrySnapshot::correct_count() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.correct; }));
}

std::size_t GeometrySnapshot::find(std::uint64_t sample_id) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), sample_id,
                               [](const GeometrySample& s, std::uint64_t id) { return s.sample_id < id; });
    if (it == samples.end() || it->sample_id != sample_id) return npos;
    return static_cast<std::size_t>(it - samples.begin());
}

void GeometrySnapshot::validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (i > 0 && samples[i - 1].sample_id >= s.sample_id) {
            throw std::invalid_argument("snapshot sample ids must be unique and sorted");
        }
        if (s.angles.size() != class_count) throw DimensionError("snapshot sample has wrong angle count");
        if (s.true_label >= class_count || s.predicted_label >= class_count) {
            throw std::invalid_argument("snapshot label out of range");
        }
        if (s.correct != (s.true_label == s.predicted_label)) {
            throw std::invalid_argument("snapshot correctness flag disagrees with labels");
        }
    }
}

GeometrySample geometry_sample(std::span<const float> features, std::span<const float> logits,
                               const ClassDirections& dirs, std::uint64_t sample_id, std::uint32_t true_label) {
    GeometrySample s;
    s.sample_id = sample_id;
    s.true_label = true_label;
    s.predicted_label = argmax(logits);
    s.correct = s.true_label == s.predicted_label;
    const double len = l2_norm(features);
    s.length = static_cast<float>(len);
    s.degenerate = !(len > kDegenerateEpsilon);
    s.angles.resize(dirs.class_count(), std::numeric_limits<float>::quiet_NaN());
    if (!s.degenerate) {
        for (std::size_t j = 0; j < dirs.class_count(); ++j) {
            s.angles[j] = static_cast<float>(angle_degrees(features, dirs.directions.row(j)));
        }
    }
    s.distance = static_cast<float>(margin(features, dirs, s.predicted_label));
    return s;
}

GeometrySnapshot geometry_snapshot(const Network& net, const LabeledDataset& data, std::string combination_id,
                                   std::string dataset_id) {
    if (data.class_count != net.spec().class_count()) {
        std::ostringstream msg;
        msg << "dataset has " << data.class_count << " classes, network has " << net.spec().class_count();
        throw DimensionError(msg.str());
    }
    const ClassDirections dirs = class_directions(net);
    const ForwardResult fr = forward(net, data.inputs);
    GeometrySnapshot snap;
    snap.combination_id = std::move(combination_id);
    snap.dataset_id = dataset_id.empty() ? data.id : std::move(dataset_id);
    snap.class_count = dirs.class_count();
    snap.samples.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        snap.samples.push_back(
            geometry_sample(fr.features.row(i), fr.logits.row(i), dirs, data.sample_ids[i], data.labels[i]));
    }
    std::sort(snap.samples.begin(), snap.samples.end(),
              [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
    snap.validate();
    return snap;
}

}  // namespace geoprune
