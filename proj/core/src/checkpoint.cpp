#include <json.hpp>

#include "binary_io.hpp"
#include "geoprune/content_hash.hpp"
#include "geoprune/io.hpp"

namespace geoprune {

using nlohmann::json;

namespace {

json spec_json(const NetworkSpec& spec) {
    return json{{"layer_sizes", spec.layer_sizes},
                {"activation", "relu"},
                {"classifier_bias", spec.classifier_bias},
                {"hidden_bias", spec.hidden_bias},
                {"seed", spec.seed}};
}

NetworkSpec parse_spec(const json& j) {
    NetworkSpec spec;
    try {
        spec.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        if (j.contains("activation") && j.at("activation").get<std::string>() != "relu") {
            throw FormatError("unsupported activation '" + j.at("activation").get<std::string>() + "'");
        }
        spec.classifier_bias = j.value("classifier_bias", false);
        spec.hidden_bias = j.value("hidden_bias", true);
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad network spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

constexpr const char* kFormat = "geoprune-checkpoint";

}  // namespace

std::string spec_to_json(const NetworkSpec& spec) { return spec_json(spec).dump(2); }

NetworkSpec spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("spec is not valid JSON: ") + e.what());
    }
    return parse_spec(j);
}

EncodedCheckpoint encode_checkpoint(const Network& net) {
    EncodedCheckpoint out;
    detail::ByteWriter w;
    json layers = json::array();
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Layer& layer = net.layer(l);
        const std::size_t offset = w.bytes().size();
        detail::ByteWriter seg;
        seg.put_all<float>(layer.weights.data());
        if (layer.bias) seg.put_all<float>(*layer.bias);
        std::size_t kept = 0;
        for (float m : layer.mask.data()) {
            seg.put<std::uint8_t>(m != 0.0f ? 1 : 0);
            kept += m != 0.0f ? 1 : 0;
        }
        w.put_all<unsigned char>(seg.bytes());
        layers.push_back({{"index", l},
                          {"rows", layer.weights.rows()},
                          {"cols", layer.weights.cols()},
                          {"has_bias", layer.bias.has_value()},
                          {"offset", offset},
                          {"bytes", seg.bytes().size()},
                          {"kept", kept},
                          {"masked", layer.mask.size() - kept},
                          {"sha256", sha256_hex(seg.bytes())}});
    }
    out.blob = std::move(w.bytes());
    json manifest{{"format", kFormat},
                  {"version", 1},
                  {"spec", spec_json(net.spec())},
                  {"layers", layers},
                  {"blob", "checkpoint.bin"},
                  {"blob_sha256", sha256_hex(out.blob)}};
    out.manifest = manifest.dump(2);
    return out;
}

Network decode_checkpoint(const std::string& manifest_text, const std::vector<unsigned char>& blob) {
    json manifest;
    try {
        manifest = json::parse(manifest_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
    }
    if (manifest.value("format", "") != kFormat) throw FormatError("not a checkpoint manifest");
    const NetworkSpec spec = parse_spec(manifest.at("spec"));
    if (manifest.value("blob_sha256", "") != sha256_hex(blob)) {
        throw IntegrityError("checkpoint blob hash does not match manifest");
    }
    const auto& entries = manifest.at("layers");
    if (entries.size() != spec.layer_count()) throw FormatError("checkpoint layer count does not match spec");

    std::vector<Layer> layers;
    for (std::size_t l = 0; l < entries.size(); ++l) {
        const auto& e = entries[l];
        const auto rows = e.at("rows").get<std::size_t>();
        const auto cols = e.at("cols").get<std::size_t>();
        const auto offset = e.at("offset").get<std::size_t>();
        const auto size = e.at("bytes").get<std::size_t>();
        const bool has_bias = e.at("has_bias").get<bool>();
        const std::size_t expected = rows * cols * 4 + (has_bias ? rows * 4 : 0) + rows * cols;
        if (size != expected) {
            throw FormatError("layer " + std::to_string(l) + " segment is " + std::to_string(size) +
                              " bytes, shape implies " + std::to_string(expected));
        }
        if (offset + size > blob.size()) {
            throw FormatError("layer " + std::to_string(l) + " segment ends at byte " + std::to_string(offset + size) +
                              " but blob has " + std::to_string(blob.size()));
        }
        std::span<const unsigned char> seg(blob.data() + offset, size);
        if (sha256_hex(seg) != e.at("sha256").get<std::string>()) {
            throw IntegrityError("layer " + std::to_string(l) + " segment hash mismatch");
        }
        detail::ByteReader r(seg, "checkpoint layer " + std::to_string(l));
        Layer layer;
        layer.weights = Matrix(rows, cols, r.get_all<float>(rows * cols));
        if (has_bias) layer.bias = r.get_all<float>(rows);
        auto mask_bytes = r.get_all<std::uint8_t>(rows * cols);
        layer.mask = Matrix(rows, cols);
        for (std::size_t k = 0; k < mask_bytes.size(); ++k) {
            if (mask_bytes[k] > 1) throw FormatError("mask byte out of range in layer " + std::to_string(l));
            layer.mask.data()[k] = static_cast<float>(mask_bytes[k]);
        }
        layers.push_back(std::move(layer));
    }
    return Network(spec, std::move(layers));
}

void save_checkpoint(const std::filesystem::path& dir, const Network& net) {
    std::filesystem::create_directories(dir);
    const EncodedCheckpoint enc = encode_checkpoint(net);
    detail::write_file_atomic(dir / "checkpoint.bin", enc.blob);
    detail::write_file_atomic(dir / "manifest.json", enc.manifest);
}

Network load_checkpoint(const std::filesystem::path& dir) {
    const auto manifest = detail::read_file(dir / "manifest.json");
    const auto blob = detail::read_file(dir / "checkpoint.bin");
    return decode_checkpoint(std::string(manifest.begin(), manifest.end()), blob);
}

}  // namespace geoprune
