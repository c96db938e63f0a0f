#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vesselpipe {

// Dense CHW float tensor. Batch handling is the caller's loop.
struct Tensor {
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, float fill = 0.0f)
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {
        if (c_ < 0 || h_ < 0 || w_ < 0) throw std::invalid_argument("Tensor: negative dims");
    }

    size_t plane_size() const { return static_cast<size_t>(h) * w; }
    size_t size() const { return v.size(); }

    float* plane(int ci) { return v.data() + static_cast<size_t>(ci) * plane_size(); }
    const float* plane(int ci) const { return v.data() + static_cast<size_t>(ci) * plane_size(); }

    float& at(int ci, int y, int x) { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    float at(int ci, int y, int x) const { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }

    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

}  // namespace vesselpipe
