#include "vesselpipe/tiling.hpp"

#include <stdexcept>

namespace vesselpipe {

TilePlan tile_plan(int rows, int cols, const UNetGeometry& geom) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("tile_plan: empty image");

    TilePlan plan;
    plan.input_size = geom.input_size;
    plan.output_size = geom.output_size;
    plan.margin = geom.context_margin();

    const int out = geom.output_size;
    const int ny = (rows + out - 1) / out;
    const int nx = (cols + out - 1) / out;
    plan.tiles.reserve(static_cast<size_t>(ny) * nx);
    for (int ty = 0; ty < ny; ++ty) {
        for (int tx = 0; tx < nx; ++tx) {
            Tile t;
            t.out_r0 = ty * out;
            t.out_c0 = tx * out;
            t.out_r1 = std::min(t.out_r0 + out, rows);
            t.out_c1 = std::min(t.out_c0 + out, cols);
            t.in_r0 = t.out_r0 - plan.margin;
            t.in_c0 = t.out_c0 - plan.margin;
            t.mirrored = t.in_r0 < 0 || t.in_c0 < 0 || t.in_r0 + geom.input_size > rows ||
                         t.in_c0 + geom.input_size > cols;
            plan.tiles.push_back(t);
        }
    }
    return plan;
}

}  // namespace vesselpipe
