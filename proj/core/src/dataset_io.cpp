#include <sstream>

#include "binary_io.hpp"
#include "geoprune/io.hpp"

namespace geoprune {

namespace {
constexpr std::string_view kDatasetMagic = "GPDS";
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const std::filesystem::path& path, const LabeledDataset& data) {
    data.validate();
    detail::ByteWriter w;
    w.put_raw(kDatasetMagic);
    w.put<std::uint32_t>(kDatasetVersion);
    w.put<std::uint64_t>(data.size());
    w.put<std::uint64_t>(data.input_dim());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(data.class_count));
    w.put<std::uint32_t>(data.image ? 1u : 0u);
    const ImageShape shape = data.image.value_or(ImageShape{0, 0, 0});
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.height));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.width));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.channels));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(data.id.size()));
    w.put_raw(data.id);
    w.put_all<float>(data.inputs.data());
    w.put_all<std::uint32_t>(data.labels);
    w.put_all<std::uint64_t>(data.sample_ids);
    detail::write_file_atomic(path, w.bytes());
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader r(bytes, "dataset " + path.string());
    if (r.get_raw(4) != kDatasetMagic) throw FormatError(path.string() + ": not a dataset file (bad magic)");
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion) {
        throw FormatError(path.string() + ": unsupported dataset version " + std::to_string(version));
    }
    const auto n = r.get<std::uint64_t>();
    const auto dim = r.get<std::uint64_t>();
    LabeledDataset ds;
    ds.class_count = r.get<std::uint32_t>();
    const bool has_image = r.get<std::uint32_t>() != 0;
    ImageShape shape;
    shape.height = r.get<std::uint32_t>();
    shape.width = r.get<std::uint32_t>();
    shape.channels = r.get<std::uint32_t>();
    if (has_image) ds.image = shape;
    ds.id = r.get_raw(r.get<std::uint32_t>());
    ds.inputs = Matrix(n, dim, r.get_all<float>(n * dim));
    ds.labels = r.get_all<std::uint32_t>(n);
    ds.sample_ids = r.get_all<std::uint64_t>(n);
    if (r.remaining() != 0) {
        std::ostringstream msg;
        msg << path.string() << ": " << r.remaining() << " trailing bytes after dataset payload";
        throw FormatError(msg.str());
    }
    ds.validate();
    return ds;
}

}  // namespace geoprune
