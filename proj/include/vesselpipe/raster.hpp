#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vesselpipe {

// Row-major 2D raster. Value semantics, no implicit conversions between
// element types.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0)
            throw std::invalid_argument("Raster: negative dimensions");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }
    size_t size() const { return data_.size(); }

    T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    T& at(int r, int c) {
        check(r, c);
        return (*this)(r, c);
    }
    const T& at(int r, int c) const {
        check(r, c);
        return (*this)(r, c);
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
    const T* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

    bool same_shape(const Raster& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Raster& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

private:
    void check(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw std::out_of_range("Raster: index (" + std::to_string(r) + "," +
                                    std::to_string(c) + ") outside " + std::to_string(rows_) +
                                    "x" + std::to_string(cols_));
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using ByteRaster = Raster<std::uint8_t>;
using FloatRaster = Raster<float>;

template <typename T>
Raster<T> flip_horizontal(const Raster<T>& in) {
    Raster<T> out(in.rows(), in.cols());
    for (int r = 0; r < in.rows(); ++r)
        for (int c = 0; c < in.cols(); ++c)
            out(r, c) = in(r, in.cols() - 1 - c);
    return out;
}

template <typename T>
Raster<T> flip_vertical(const Raster<T>& in) {
    Raster<T> out(in.rows(), in.cols());
    for (int r = 0; r < in.rows(); ++r)
        for (int c = 0; c < in.cols(); ++c)
            out(r, c) = in(in.rows() - 1 - r, c);
    return out;
}

// Reflection about the border without duplicating the border pixel
// (…3 2 1 | 0 1 2 3 … n-1 | n-2 n-3…). n == 1 maps everything to 0.
inline int reflect_index(int x, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    x %= period;
    if (x < 0) x += period;
    return x < n ? x : period - x;
}

}  // namespace vesselpipe
