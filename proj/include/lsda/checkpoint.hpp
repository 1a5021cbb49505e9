#pragma once

#include <filesystem>

#include "lsda/networks.hpp"

namespace lsda {

// Checkpoint file: magic "LSDA", version u32, length-prefixed UTF-8 JSON
// architecture config, then per parameter (name, shape, little-endian f32
// payload). Round-trips bit-exactly.
void save_checkpoint(const ModelBundle& m, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace lsda
