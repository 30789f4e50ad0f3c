#pragma once

#include <filesystem>

#include "minn/network.hpp"

namespace minn {

struct Checkpoint {
    NetworkConfig config;
    ModelParams params;
    Normalizer normalizer;  // fit on the training data at save time
    std::uint64_t train_seed = 0;
};

// Versioned JSON container; weight matrices are stored row-major.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Validates every tensor shape against the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace minn
