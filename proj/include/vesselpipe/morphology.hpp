#pragma once

#include "vesselpipe/raster.hpp"

namespace vesselpipe {

// Binary rasters hold {0,1}.

// Keeps only the largest 8-connected foreground component; among equally
// sized components the one whose first pixel in row-major order comes
// first wins. Throws std::runtime_error("no vascular structure") on an
// all-zero mask so callers can fall back to easy-only segmentation.
ByteRaster largest_component(const ByteRaster& mask);

// Iterative two-subiteration thinning to a one-pixel-wide, 8-connected
// skeleton. The result is a subset of the input and a fixed point of the
// procedure. Empty input stays empty.
ByteRaster skeletonize(const ByteRaster& mask);

}  // namespace vesselpipe
