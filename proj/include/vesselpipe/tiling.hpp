#pragma once

#include <vector>

#include "vesselpipe/geometry.hpp"
#include "vesselpipe/raster.hpp"

namespace vesselpipe {

struct Tile {
    // Output window in image coordinates, clipped to the image.
    int out_r0 = 0, out_c0 = 0, out_r1 = 0, out_c1 = 0;
    // Input window origin (can be negative; extraction mirrors).
    int in_r0 = 0, in_c0 = 0;
    bool mirrored = false;  // input window leaves the image

    int out_rows() const { return out_r1 - out_r0; }
    int out_cols() const { return out_c1 - out_c0; }
};

struct TilePlan {
    std::vector<Tile> tiles;
    int input_size = 0;
    int output_size = 0;
    int margin = 0;
};

// Non-overlapping output windows covering the image exactly, each with a
// centered input window of the geometry's context margin.
TilePlan tile_plan(int rows, int cols, const UNetGeometry& geom);

// Extracts a square window whose out-of-bounds samples reflect about the
// border without duplicating the border pixel. Throws when the window
// does not overlap the raster at all.
template <typename T>
Raster<T> mirror_extract(const Raster<T>& raster, int r0, int c0, int size) {
    if (raster.empty()) throw std::invalid_argument("mirror_extract: empty raster");
    if (r0 + size <= 0 || c0 + size <= 0 || r0 >= raster.rows() || c0 >= raster.cols())
        throw std::invalid_argument("mirror_extract: window fully outside raster");
    Raster<T> out(size, size);
    for (int r = 0; r < size; ++r) {
        const int sr = reflect_index(r0 + r, raster.rows());
        for (int c = 0; c < size; ++c)
            out(r, c) = raster(sr, reflect_index(c0 + c, raster.cols()));
    }
    return out;
}

}  // namespace vesselpipe
