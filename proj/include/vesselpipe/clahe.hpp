#pragma once

#include "vesselpipe/raster.hpp"

namespace vesselpipe {

// Contrast-limited adaptive histogram equalization on an 8-bit raster.
// clip_limit is the usual normalized limit (histogram counts are clipped
// at clip_limit * tile_area / 256 and the excess is redistributed), and
// the per-tile mappings are blended bilinearly. A grid whose tiles would
// be smaller than one pixel falls back to a single global tile.
ByteRaster clahe(const ByteRaster& input, double clip_limit = 2.0, int grid_rows = 8,
                 int grid_cols = 8);

}  // namespace vesselpipe
