#pragma once

// On-disk formats for datasets, network specs and checkpoints.
//
// Dataset file (.bin), all little-endian:
//   char[4]  "GPDS"
//   u32      version (1)
//   u64      N, u64 input_dim, u32 class_count
//   u32      has_image, u32 height, u32 width, u32 channels
//   u32      id length L, then L bytes of UTF-8 dataset id
//   f32[N*input_dim] inputs (row-major), u32[N] labels, u64[N] sample ids
//
// Checkpoint directory:
//   manifest.json   {"format":"geoprune-checkpoint","version":1,"spec":{...},
//                    "layers":[{"index","rows","cols","has_bias","offset","bytes",
//                               "kept","masked","sha256"}...],
//                    "blob":"checkpoint.bin","blob_sha256":"..."}
//   checkpoint.bin  one segment per layer, in layer order:
//                   f32[rows*cols] weights (row-major), f32[rows] bias if has_bias,
//                   u8[rows*cols] mask (0 pruned, 1 kept)
// Offsets are byte offsets of each layer's segment inside checkpoint.bin.

#include <filesystem>
#include <string>
#include <vector>

#include "geoprune/network.hpp"

namespace geoprune {

void save_dataset(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset load_dataset(const std::filesystem::path& path);

std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& text);

struct EncodedCheckpoint {
    std::string manifest;              // JSON text
    std::vector<unsigned char> blob;   // checkpoint.bin bytes
};

EncodedCheckpoint encode_checkpoint(const Network& net);
/// Verifies segment hashes and shapes; throws IntegrityError / FormatError.
Network decode_checkpoint(const std::string& manifest, const std::vector<unsigned char>& blob);

void save_checkpoint(const std::filesystem::path& dir, const Network& net);
Network load_checkpoint(const std::filesystem::path& dir);

}  // namespace geoprune
