#include "vesselpipe/clahe.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vesselpipe {
namespace {

constexpr int kBins = 256;

using Lut = std::array<std::uint8_t, kBins>;

Lut tile_lut(const ByteRaster& img, int r0, int r1, int c0, int c1, double clip_limit) {
    std::array<std::int64_t, kBins> hist{};
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) ++hist[img(r, c)];

    const std::int64_t area = std::int64_t(r1 - r0) * (c1 - c0);
    const std::int64_t clip =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(clip_limit * area / kBins));

    std::int64_t excess = 0;
    for (auto& h : hist) {
        if (h > clip) {
            excess += h - clip;
            h = clip;
        }
    }
    // Redistribute the excess evenly; the remainder goes one count at a
    // time to the lowest bins so the result is deterministic.
    const std::int64_t bonus = excess / kBins;
    std::int64_t leftover = excess % kBins;
    for (int i = 0; i < kBins; ++i) {
        hist[i] += bonus;
        if (leftover > 0) {
            ++hist[i];
            --leftover;
        }
    }

    Lut lut{};
    std::int64_t cdf = 0;
    for (int i = 0; i < kBins; ++i) {
        cdf += hist[i];
        const double v = std::round(cdf * 255.0 / area);
        lut[i] = static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
    }
    return lut;
}

}  // namespace

ByteRaster clahe(const ByteRaster& input, double clip_limit, int grid_rows, int grid_cols) {
    if (input.empty()) throw std::invalid_argument("clahe: empty raster");
    if (clip_limit <= 0.0) throw std::invalid_argument("clahe: clip_limit must be > 0");
    if (grid_rows < 1 || grid_cols < 1)
        throw std::invalid_argument("clahe: tile grid dims must be >= 1");

    // Tiles smaller than a pixel are meaningless; equalize globally instead.
    if (grid_rows > input.rows() || grid_cols > input.cols()) {
        grid_rows = 1;
        grid_cols = 1;
    }

    const int tile_h = (input.rows() + grid_rows - 1) / grid_rows;
    const int tile_w = (input.cols() + grid_cols - 1) / grid_cols;

    std::vector<Lut> luts(static_cast<size_t>(grid_rows) * grid_cols);
    for (int ty = 0; ty < grid_rows; ++ty) {
        for (int tx = 0; tx < grid_cols; ++tx) {
            const int r0 = ty * tile_h, r1 = std::min((ty + 1) * tile_h, input.rows());
            const int c0 = tx * tile_w, c1 = std::min((tx + 1) * tile_w, input.cols());
            luts[static_cast<size_t>(ty) * grid_cols + tx] =
                tile_lut(input, r0, r1, c0, c1, clip_limit);
        }
    }

    ByteRaster out(input.rows(), input.cols());
    for (int r = 0; r < input.rows(); ++r) {
        const double gy = (r + 0.5) / tile_h - 0.5;
        int ty0 = static_cast<int>(std::floor(gy));
        double fy = gy - ty0;
        if (ty0 < 0) {
            ty0 = 0;
            fy = 0.0;
        }
        int ty1 = ty0 + 1;
        if (ty1 >= grid_rows) {
            ty1 = grid_rows - 1;
            if (ty0 >= grid_rows) ty0 = grid_rows - 1;
            if (ty0 == ty1) fy = 0.0;
        }
        for (int c = 0; c < input.cols(); ++c) {
            const double gx = (c + 0.5) / tile_w - 0.5;
            int tx0 = static_cast<int>(std::floor(gx));
            double fx = gx - tx0;
            if (tx0 < 0) {
                tx0 = 0;
                fx = 0.0;
            }
            int tx1 = tx0 + 1;
            if (tx1 >= grid_cols) {
                tx1 = grid_cols - 1;
                if (tx0 >= grid_cols) tx0 = grid_cols - 1;
                if (tx0 == tx1) fx = 0.0;
            }

            const std::uint8_t v = input(r, c);
            const double v00 = luts[static_cast<size_t>(ty0) * grid_cols + tx0][v];
            const double v01 = luts[static_cast<size_t>(ty0) * grid_cols + tx1][v];
            const double v10 = luts[static_cast<size_t>(ty1) * grid_cols + tx0][v];
            const double v11 = luts[static_cast<size_t>(ty1) * grid_cols + tx1][v];
            const double blended = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                   fy * ((1 - fx) * v10 + fx * v11);
            const double rounded = std::round(blended);
            out(r, c) = static_cast<std::uint8_t>(rounded < 0 ? 0 : (rounded > 255 ? 255 : rounded));
        }
    }
    return out;
}

}  // namespace vesselpipe
