#include <cmath>

#include "binary_io.hpp"
#include "geoprune/geometry.hpp"

namespace geoprune {

namespace {
constexpr std::string_view kSnapshotMagic = "GPSN";
constexpr std::uint32_t kSnapshotVersion = 1;

void put_string(detail::ByteWriter& w, const std::string& s) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    w.put_raw(s);
}
}  // namespace

std::vector<unsigned char> encode_snapshot(const GeometrySnapshot& snap) {
    snap.validate();
    const std::size_t n = snap.samples.size();
    const std::size_t c = snap.class_count;
    detail::ByteWriter w;
    w.put_raw(kSnapshotMagic);
    w.put<std::uint32_t>(kSnapshotVersion);
    w.put<std::uint64_t>(n);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c));
    put_string(w, snap.combination_id);
    put_string(w, snap.dataset_id);
    put_string(w, snap.created_at);
    for (const auto& s : snap.samples) w.put<std::uint64_t>(s.sample_id);
    for (const auto& s : snap.samples) w.put<std::uint32_t>(s.true_label);
    for (const auto& s : snap.samples) w.put<std::uint32_t>(s.predicted_label);
    for (const auto& s : snap.samples) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>((s.correct ? 1u : 0u) | (s.degenerate ? 2u : 0u)));
    }
    for (std::size_t j = 0; j < c; ++j) {
        for (const auto& s : snap.samples) w.put<float>(s.angles[j]);
    }
    for (const auto& s : snap.samples) w.put<float>(s.length);
    for (const auto& s : snap.samples) w.put<float>(static_cast<float>(signed_margin(s)));
    return std::move(w.bytes());
}

GeometrySnapshot decode_snapshot(std::span<const unsigned char> bytes) {
    detail::ByteReader r(bytes, "snapshot");
    if (r.get_raw(4) != kSnapshotMagic) throw FormatError("not a snapshot (bad magic)");
    const auto version = r.get<std::uint32_t>();
    if (version != kSnapshotVersion) throw FormatError("unsupported snapshot version " + std::to_string(version));
    const auto n = r.get<std::uint64_t>();
    const auto c = r.get<std::uint32_t>();
    GeometrySnapshot snap;
    snap.class_count = c;
    snap.combination_id = r.get_raw(r.get<std::uint32_t>());
    snap.dataset_id = r.get_raw(r.get<std::uint32_t>());
    snap.created_at = r.get_raw(r.get<std::uint32_t>());
    const auto ids = r.get_all<std::uint64_t>(n);
    const auto truth = r.get_all<std::uint32_t>(n);
    const auto pred = r.get_all<std::uint32_t>(n);
    const auto flags = r.get_all<std::uint8_t>(n);
    const auto angles = r.get_all<float>(n * c);
    const auto length = r.get_all<float>(n);
    const auto margin = r.get_all<float>(n);
    if (r.remaining() != 0) throw FormatError("snapshot has " + std::to_string(r.remaining()) + " trailing bytes");

    snap.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = snap.samples[i];
        s.sample_id = ids[i];
        s.true_label = truth[i];
        s.predicted_label = pred[i];
        s.correct = (flags[i] & 1u) != 0;
        s.degenerate = (flags[i] & 2u) != 0;
        s.angles.resize(c);
        for (std::size_t j = 0; j < c; ++j) s.angles[j] = angles[j * n + i];
        s.length = length[i];
        s.distance = std::fabs(margin[i]);
    }
    snap.validate();
    return snap;
}

}  // namespace geoprune
