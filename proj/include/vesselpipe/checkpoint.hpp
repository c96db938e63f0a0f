#pragma once

#include <memory>
#include <string>

#include "vesselpipe/unet.hpp"

namespace vesselpipe {

inline constexpr char kCheckpointMagic[] = "VESSELPIPE-CKPT-1";

// Writes geometry plus every named parameter blob as little-endian
// float32 to a single file.
void save_checkpoint(UNet& net, const std::string& path);

// Rebuilds the network the checkpoint was saved from. Throws on a bad
// magic header or a parameter layout mismatch.
std::unique_ptr<UNet> load_checkpoint(const std::string& path);

}  // namespace vesselpipe
