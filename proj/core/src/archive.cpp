#include <json.hpp>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "geoprune/content_hash.hpp"
#include "geoprune/corruption.hpp"

namespace geoprune {

using nlohmann::json;

namespace {

constexpr const char* kArchiveFormat = "geoprune-corruption-archive";

std::string array_file(const std::string& type, int severity) {
    return type + "-s" + std::to_string(severity) + ".f32";
}

}  // namespace

void export_archive(const std::filesystem::path& dir, const CorruptedDataset& suite) {
    suite.validate();
    std::filesystem::create_directories(dir);
    json arrays = json::array();
    for (const auto& type : suite.types) {
        for (int s = 1; s <= kSeverityLevels; ++s) {
            const Matrix& m = suite.variant(type, s);
            detail::ByteWriter w;
            w.put_all<float>(m.data());
            const std::string file = array_file(type, s);
            detail::write_file_atomic(dir / file, w.bytes());
            arrays.push_back({{"type", type},
                              {"severity", s},
                              {"file", file},
                              {"shape", {m.rows(), m.cols()}},
                              {"dtype", "float32"},
                              {"sha256", sha256_hex(w.bytes())}});
        }
    }
    detail::ByteWriter labels;
    labels.put_all<std::uint32_t>(suite.labels);
    detail::write_file_atomic(dir / "labels.u32", labels.bytes());
    detail::ByteWriter ids;
    ids.put_all<std::uint64_t>(suite.sample_ids);
    detail::write_file_atomic(dir / "sample_ids.u64", ids.bytes());

    json manifest{{"format", kArchiveFormat},
                  {"version", 1},
                  {"base_dataset", suite.base_id},
                  {"samples", suite.size()},
                  {"input_dim", suite.shape.pixels()},
                  {"class_count", suite.class_count},
                  {"image", {{"height", suite.shape.height}, {"width", suite.shape.width}, {"channels", suite.shape.channels}}},
                  {"types", suite.types},
                  {"labels", {{"file", "labels.u32"}, {"dtype", "uint32"}}},
                  {"sample_ids", {{"file", "sample_ids.u64"}, {"dtype", "uint64"}}},
                  {"arrays", arrays}};
    detail::write_file_atomic(dir / "manifest.json", manifest.dump(2));
}

CorruptedDataset ingest_archive(const std::filesystem::path& dir, const LabeledDataset* base) {
    json manifest;
    try {
        const auto text = detail::read_file(dir / "manifest.json");
        manifest = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw FormatError("archive manifest is not valid JSON: " + std::string(e.what()));
    }
    try {
        if (manifest.value("format", "") != kArchiveFormat) throw FormatError("not a corruption archive manifest");

        CorruptedDataset suite;
        const auto n = manifest.at("samples").get<std::size_t>();
        const auto dim = manifest.at("input_dim").get<std::size_t>();
        suite.base_id = manifest.value("base_dataset", "");
        suite.class_count = manifest.at("class_count").get<std::size_t>();
        const auto& img = manifest.at("image");
        suite.shape = ImageShape{img.at("height").get<std::size_t>(), img.at("width").get<std::size_t>(),
                                 img.value("channels", std::size_t{1})};
        if (suite.shape.pixels() != dim) throw FormatError("archive image shape does not match input_dim");

        if (base) {
            if (base->size() != n) {
                throw FormatError("archive has " + std::to_string(n) + " samples, base dataset has " +
                                  std::to_string(base->size()));
            }
            if (base->input_dim() != dim) throw FormatError("archive input_dim differs from base dataset");
            suite.labels = base->labels;
            suite.sample_ids = base->sample_ids;
            suite.class_count = base->class_count;
            if (suite.base_id.empty()) suite.base_id = base->id;
        } else {
            const auto label_file = dir / manifest.at("labels").at("file").get<std::string>();
            const auto lb = detail::read_file(label_file);
            if (lb.size() != n * 4) {
                throw FormatError(label_file.string() + ": expected " + std::to_string(n * 4) + " bytes, found " +
                                  std::to_string(lb.size()));
            }
            suite.labels = detail::ByteReader(lb, label_file.string()).get_all<std::uint32_t>(n);
            const auto id_file = dir / manifest.at("sample_ids").at("file").get<std::string>();
            const auto ib = detail::read_file(id_file);
            if (ib.size() != n * 8) {
                throw FormatError(id_file.string() + ": expected " + std::to_string(n * 8) + " bytes, found " +
                                  std::to_string(ib.size()));
            }
            suite.sample_ids = detail::ByteReader(ib, id_file.string()).get_all<std::uint64_t>(n);
        }

        suite.types = manifest.at("types").get<std::vector<std::string>>();
        if (suite.types.empty()) throw FormatError("archive lists no corruption types");
        std::set<std::string> declared(suite.types.begin(), suite.types.end());
        if (declared.size() != suite.types.size()) throw FormatError("archive lists a corruption type twice");

        for (const auto& entry : manifest.at("arrays")) {
            const auto type = entry.at("type").get<std::string>();
            const int severity = entry.at("severity").get<int>();
            if (!declared.count(type)) throw FormatError("array for undeclared type '" + type + "'");
            if (severity < 1 || severity > kSeverityLevels) {
                throw FormatError("array " + type + " has severity " + std::to_string(severity) + " outside 1..5");
            }
            if (entry.value("dtype", "float32") != "float32") {
                throw FormatError("array " + type + "@" + std::to_string(severity) + " has unsupported dtype");
            }
            const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            if (shape.size() != 2 || shape[0] != n || shape[1] != dim) {
                throw FormatError("array " + type + "@" + std::to_string(severity) + " shape disagrees with manifest");
            }
            const auto file = dir / entry.at("file").get<std::string>();
            const auto bytes = detail::read_file(file);
            const std::size_t expected = n * dim * 4;
            if (bytes.size() != expected) {
                throw FormatError(file.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                                  std::to_string(bytes.size()));
            }
            if (entry.contains("sha256") && entry.at("sha256").get<std::string>() != sha256_hex(bytes)) {
                throw IntegrityError(file.string() + ": content hash mismatch");
            }
            auto values = detail::ByteReader(bytes, file.string()).get_all<float>(n * dim);
            for (std::size_t k = 0; k < values.size(); ++k) {
                if (!(values[k] >= 0.0f && values[k] <= 1.0f)) {
                    std::ostringstream msg;
                    msg << file.string() << ": pixel " << k << " = " << values[k] << " outside [0, 1]";
                    throw FormatError(msg.str());
                }
            }
            auto [it, inserted] = suite.variants.emplace(CorruptedDataset::Key{type, severity}, Matrix(n, dim, std::move(values)));
            if (!inserted) throw FormatError("duplicate array for " + type + "@" + std::to_string(severity));
        }
        for (const auto& type : suite.types) {
            for (int s = 1; s <= kSeverityLevels; ++s) {
                if (!suite.variants.count({type, s})) {
                    throw FormatError("archive is missing severity " + std::to_string(s) + " of type '" + type + "'");
                }
            }
        }
        suite.validate();
        return suite;
    } catch (const json::exception& e) {
        throw FormatError("archive manifest: " + std::string(e.what()));
    }
}

}  // namespace geoprune
