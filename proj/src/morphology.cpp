#include "vesselpipe/morphology.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vesselpipe {

ByteRaster largest_component(const ByteRaster& mask) {
    const int rows = mask.rows(), cols = mask.cols();
    Raster<std::int32_t> label(rows, cols, 0);
    std::vector<std::int64_t> sizes{0};  // sizes[0] unused
    std::vector<std::pair<int, int>> stack;

    std::int32_t next = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!mask(r, c) || label(r, c)) continue;
            const std::int32_t id = ++next;
            sizes.push_back(0);
            stack.clear();
            stack.emplace_back(r, c);
            label(r, c) = id;
            while (!stack.empty()) {
                const auto [y, x] = stack.back();
                stack.pop_back();
                ++sizes[id];
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = y + dy, nx = x + dx;
                        if (ny < 0 || ny >= rows || nx < 0 || nx >= cols) continue;
                        if (!mask(ny, nx) || label(ny, nx)) continue;
                        label(ny, nx) = id;
                        stack.emplace_back(ny, nx);
                    }
                }
            }
        }
    }
    if (next == 0) throw std::runtime_error("no vascular structure");

    // Scan order assigns ids by first (top-left-most) pixel, so a strict
    // comparison breaks size ties in favor of the smaller id.
    std::int32_t best = 1;
    for (std::int32_t id = 2; id <= next; ++id)
        if (sizes[id] > sizes[best]) best = id;

    ByteRaster out(rows, cols, 0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (label(r, c) == best) out(r, c) = 1;
    return out;
}

namespace {

// Zhang-Suen subiteration. Neighbors p2..p9 run clockwise from north.
bool thinning_pass(ByteRaster& img, int subiteration) {
    const int rows = img.rows(), cols = img.cols();
    std::vector<std::pair<int, int>> to_delete;
    auto px = [&](int r, int c) -> int {
        return (r < 0 || r >= rows || c < 0 || c >= cols) ? 0 : img(r, c);
    };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!img(r, c)) continue;
            const int p2 = px(r - 1, c), p3 = px(r - 1, c + 1), p4 = px(r, c + 1),
                      p5 = px(r + 1, c + 1), p6 = px(r + 1, c), p7 = px(r + 1, c - 1),
                      p8 = px(r, c - 1), p9 = px(r - 1, c - 1);
            const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
            if (b < 2 || b > 6) continue;
            const int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
            int transitions = 0;
            for (int i = 0; i < 8; ++i)
                if (seq[i] == 0 && seq[i + 1] == 1) ++transitions;
            if (transitions != 1) continue;
            if (subiteration == 0) {
                if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
            } else {
                if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
            }
            to_delete.emplace_back(r, c);
        }
    }
    for (const auto& [r, c] : to_delete) img(r, c) = 0;
    return !to_delete.empty();
}

}  // namespace

ByteRaster skeletonize(const ByteRaster& mask) {
    ByteRaster img = mask;
    bool changed = true;
    while (changed) {
        changed = thinning_pass(img, 0);
        changed = thinning_pass(img, 1) || changed;
    }
    return img;
}

}  // namespace vesselpipe
