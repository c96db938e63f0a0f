#include "vesselpipe/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace vesselpipe {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using ConstMapRowMat = Eigen::Map<const RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Column budget for the im2col scratch buffer; bounds peak memory on the
// 572x572 tiles of the full-size network.
constexpr size_t kIm2colBudget = 12u * 1024 * 1024;  // floats

void he_init(std::vector<float>& w, size_t fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& x : w) x = static_cast<float>(rng.normal() * stddev);
}

// Gathers the [rows y0, y1) strip of the 3x3 im2col matrix:
// K(ci*9 + ky*3 + kx, (y - y0)*out_w + x) = in(ci, y + ky, x + kx).
void im2col_strip(const Tensor& in, int y0, int y1, int out_w, RowMat& k) {
    const int cols = (y1 - y0) * out_w;
    k.resize(in.c * 9, cols);
    for (int ci = 0; ci < in.c; ++ci) {
        const float* plane = in.plane(ci);
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                float* dst = k.data() + static_cast<size_t>(ci * 9 + ky * 3 + kx) * cols;
                for (int y = y0; y < y1; ++y) {
                    const float* src = plane + static_cast<size_t>(y + ky) * in.w + kx;
                    std::memcpy(dst, src, sizeof(float) * out_w);
                    dst += out_w;
                }
            }
        }
    }
}

}  // namespace

// ---- Conv3x3 ---------------------------------------------------------

Conv3x3::Conv3x3(int in_channels, int out_channels)
    : cin_(in_channels),
      cout_(out_channels),
      w_(static_cast<size_t>(out_channels) * in_channels * 9, 0.0f),
      b_(out_channels, 0.0f),
      gw_(w_.size(), 0.0f),
      gb_(b_.size(), 0.0f) {}

void Conv3x3::init(Rng& rng) {
    he_init(w_, static_cast<size_t>(cin_) * 9, rng);
    std::fill(b_.begin(), b_.end(), 0.0f);
}

Tensor Conv3x3::forward(const Tensor& in) {
    if (in.c != cin_) throw std::invalid_argument("Conv3x3: channel mismatch");
    if (in.h < 3 || in.w < 3) throw std::invalid_argument("Conv3x3: input below kernel size");
    last_in_ = in;

    const int out_h = in.h - 2, out_w = in.w - 2;
    Tensor out(cout_, out_h, out_w);
    ConstMapRowMat wmat(w_.data(), cout_, cin_ * 9);

    const int strip_rows =
        std::max<int>(1, static_cast<int>(kIm2colBudget / (static_cast<size_t>(cin_) * 9 * out_w)));
    RowMat k;
    for (int y0 = 0; y0 < out_h; y0 += strip_rows) {
        const int y1 = std::min(out_h, y0 + strip_rows);
        im2col_strip(in, y0, y1, out_w, k);
        StridedMap omap(out.v.data() + static_cast<size_t>(y0) * out_w, cout_,
                        (y1 - y0) * out_w, Eigen::OuterStride<>(out.plane_size()));
        omap.noalias() = wmat * k;
    }
    for (int co = 0; co < cout_; ++co) {
        float* plane = out.plane(co);
        const float bias = b_[co];
        for (size_t i = 0; i < out.plane_size(); ++i) plane[i] += bias;
    }
    return out;
}

Tensor Conv3x3::backward(const Tensor& d_out) {
    const Tensor& in = last_in_;
    if (in.c == 0) throw std::logic_error("Conv3x3: backward before forward");
    const int out_h = d_out.h, out_w = d_out.w;

    Tensor d_in(in.c, in.h, in.w);
    ConstMapRowMat wmat(w_.data(), cout_, cin_ * 9);
    MapRowMat gwmat(gw_.data(), cout_, cin_ * 9);

    const int strip_rows =
        std::max<int>(1, static_cast<int>(kIm2colBudget / (static_cast<size_t>(cin_) * 9 * out_w)));
    RowMat k, dk;
    for (int y0 = 0; y0 < out_h; y0 += strip_rows) {
        const int y1 = std::min(out_h, y0 + strip_rows);
        const int cols = (y1 - y0) * out_w;
        im2col_strip(in, y0, y1, out_w, k);
        ConstStridedMap dmap(d_out.v.data() + static_cast<size_t>(y0) * out_w, cout_, cols,
                             Eigen::OuterStride<>(d_out.plane_size()));
        gwmat.noalias() += dmap * k.transpose();
        dk.resize(cin_ * 9, cols);
        dk.noalias() = wmat.transpose() * dmap;
        // col2im scatter-add.
        for (int ci = 0; ci < cin_; ++ci) {
            float* plane = d_in.plane(ci);
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const float* src =
                        dk.data() + static_cast<size_t>(ci * 9 + ky * 3 + kx) * cols;
                    for (int y = y0; y < y1; ++y) {
                        float* dst = plane + static_cast<size_t>(y + ky) * in.w + kx;
                        for (int x = 0; x < out_w; ++x) dst[x] += src[x];
                        src += out_w;
                    }
                }
            }
        }
    }
    for (int co = 0; co < cout_; ++co) {
        const float* plane = d_out.plane(co);
        double sum = 0.0;
        for (size_t i = 0; i < d_out.plane_size(); ++i) sum += plane[i];
        gb_[co] += static_cast<float>(sum);
    }
    return d_in;
}

void Conv3x3::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
    out.push_back({prefix + ".w", w_.data(), gw_.data(), w_.size()});
    out.push_back({prefix + ".b", b_.data(), gb_.data(), b_.size()});
}

// ---- Relu ------------------------------------------------------------

Tensor Relu::forward(const Tensor& in) {
    Tensor out = in;
    for (auto& x : out.v)
        if (x < 0.0f) x = 0.0f;
    last_out_ = out;
    return out;
}

Tensor Relu::backward(const Tensor& d_out) const {
    Tensor d_in = d_out;
    for (size_t i = 0; i < d_in.v.size(); ++i)
        if (last_out_.v[i] <= 0.0f) d_in.v[i] = 0.0f;
    return d_in;
}

// ---- MaxPool2 --------------------------------------------------------

Tensor MaxPool2::forward(const Tensor& in) {
    if (in.h % 2 != 0 || in.w % 2 != 0)
        throw std::invalid_argument("MaxPool2: odd input size");
    in_h_ = in.h;
    in_w_ = in.w;
    channels_ = in.c;
    const int oh = in.h / 2, ow = in.w / 2;
    Tensor out(in.c, oh, ow);
    choice_.assign(out.size(), 0);
    size_t idx = 0;
    for (int ci = 0; ci < in.c; ++ci) {
        const float* plane = in.plane(ci);
        for (int y = 0; y < oh; ++y) {
            const float* r0 = plane + static_cast<size_t>(2 * y) * in.w;
            const float* r1 = r0 + in.w;
            for (int x = 0; x < ow; ++x, ++idx) {
                const float vals[4] = {r0[2 * x], r0[2 * x + 1], r1[2 * x], r1[2 * x + 1]};
                int best = 0;
                for (int j = 1; j < 4; ++j)
                    if (vals[j] > vals[best]) best = j;
                choice_[idx] = static_cast<std::uint8_t>(best);
                out.v[idx] = vals[best];
            }
        }
    }
    return out;
}

Tensor MaxPool2::backward(const Tensor& d_out) const {
    Tensor d_in(channels_, in_h_, in_w_);
    size_t idx = 0;
    const int oh = in_h_ / 2, ow = in_w_ / 2;
    for (int ci = 0; ci < channels_; ++ci) {
        float* plane = d_in.plane(ci);
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x, ++idx) {
                const int j = choice_[idx];
                const int yy = 2 * y + (j >> 1), xx = 2 * x + (j & 1);
                plane[static_cast<size_t>(yy) * in_w_ + xx] += d_out.v[idx];
            }
        }
    }
    return d_in;
}

// ---- UpConv2 ---------------------------------------------------------

UpConv2::UpConv2(int in_channels, int out_channels)
    : cin_(in_channels),
      cout_(out_channels),
      w_(static_cast<size_t>(4) * out_channels * in_channels, 0.0f),
      b_(out_channels, 0.0f),
      gw_(w_.size(), 0.0f),
      gb_(b_.size(), 0.0f) {}

void UpConv2::init(Rng& rng) {
    he_init(w_, static_cast<size_t>(cin_), rng);
    std::fill(b_.begin(), b_.end(), 0.0f);
}

Tensor UpConv2::forward(const Tensor& in) {
    if (in.c != cin_) throw std::invalid_argument("UpConv2: channel mismatch");
    last_in_ = in;
    const size_t hw = in.plane_size();
    Tensor out(cout_, in.h * 2, in.w * 2);
    ConstMapRowMat imat(in.v.data(), cin_, hw);
    RowMat tmp;
    for (int k = 0; k < 4; ++k) {
        ConstMapRowMat wk(w_.data() + static_cast<size_t>(k) * cout_ * cin_, cout_, cin_);
        tmp.noalias() = wk * imat;
        const int dy = k >> 1, dx = k & 1;
        for (int co = 0; co < cout_; ++co) {
            const float* src = tmp.data() + static_cast<size_t>(co) * hw;
            float* plane = out.plane(co);
            const float bias = b_[co];
            for (int y = 0; y < in.h; ++y) {
                float* dst = plane + static_cast<size_t>(2 * y + dy) * out.w + dx;
                for (int x = 0; x < in.w; ++x) dst[2 * x] = src[x] + bias;
                src += in.w;
            }
        }
    }
    return out;
}

Tensor UpConv2::backward(const Tensor& d_out) {
    const Tensor& in = last_in_;
    if (in.c == 0) throw std::logic_error("UpConv2: backward before forward");
    const size_t hw = in.plane_size();
    ConstMapRowMat imat(in.v.data(), cin_, hw);

    Tensor d_in(cin_, in.h, in.w);
    MapRowMat dimat(d_in.v.data(), cin_, hw);
    RowMat gathered(cout_, hw);
    for (int k = 0; k < 4; ++k) {
        const int dy = k >> 1, dx = k & 1;
        for (int co = 0; co < cout_; ++co) {
            float* dst = gathered.data() + static_cast<size_t>(co) * hw;
            const float* plane = d_out.plane(co);
            for (int y = 0; y < in.h; ++y) {
                const float* src = plane + static_cast<size_t>(2 * y + dy) * d_out.w + dx;
                for (int x = 0; x < in.w; ++x) dst[x] = src[2 * x];
                dst += in.w;
            }
        }
        MapRowMat gwk(gw_.data() + static_cast<size_t>(k) * cout_ * cin_, cout_, cin_);
        ConstMapRowMat wk(w_.data() + static_cast<size_t>(k) * cout_ * cin_, cout_, cin_);
        gwk.noalias() += gathered * imat.transpose();
        dimat.noalias() += wk.transpose() * gathered;
        for (int co = 0; co < cout_; ++co)
            gb_[co] += gathered.row(co).sum();
    }
    return d_in;
}

void UpConv2::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
    out.push_back({prefix + ".w", w_.data(), gw_.data(), w_.size()});
    out.push_back({prefix + ".b", b_.data(), gb_.data(), b_.size()});
}

// ---- Conv1x1 ---------------------------------------------------------

Conv1x1::Conv1x1(int in_channels, int out_channels)
    : cin_(in_channels),
      cout_(out_channels),
      w_(static_cast<size_t>(out_channels) * in_channels, 0.0f),
      b_(out_channels, 0.0f),
      gw_(w_.size(), 0.0f),
      gb_(b_.size(), 0.0f) {}

void Conv1x1::init(Rng& rng) {
    he_init(w_, static_cast<size_t>(cin_), rng);
    std::fill(b_.begin(), b_.end(), 0.0f);
}

Tensor Conv1x1::forward(const Tensor& in) {
    if (in.c != cin_) throw std::invalid_argument("Conv1x1: channel mismatch");
    last_in_ = in;
    const size_t hw = in.plane_size();
    Tensor out(cout_, in.h, in.w);
    ConstMapRowMat imat(in.v.data(), cin_, hw);
    ConstMapRowMat wmat(w_.data(), cout_, cin_);
    MapRowMat omat(out.v.data(), cout_, hw);
    omat.noalias() = wmat * imat;
    for (int co = 0; co < cout_; ++co) {
        float* plane = out.plane(co);
        for (size_t i = 0; i < hw; ++i) plane[i] += b_[co];
    }
    return out;
}

Tensor Conv1x1::backward(const Tensor& d_out) {
    const Tensor& in = last_in_;
    if (in.c == 0) throw std::logic_error("Conv1x1: backward before forward");
    const size_t hw = in.plane_size();
    ConstMapRowMat imat(in.v.data(), cin_, hw);
    ConstMapRowMat dmat(d_out.v.data(), cout_, hw);
    ConstMapRowMat wmat(w_.data(), cout_, cin_);
    MapRowMat gwmat(gw_.data(), cout_, cin_);
    gwmat.noalias() += dmat * imat.transpose();
    for (int co = 0; co < cout_; ++co) gb_[co] += dmat.row(co).sum();

    Tensor d_in(cin_, in.h, in.w);
    MapRowMat dimat(d_in.v.data(), cin_, hw);
    dimat.noalias() = wmat.transpose() * dmat;
    return d_in;
}

void Conv1x1::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
    out.push_back({prefix + ".w", w_.data(), gw_.data(), w_.size()});
    out.push_back({prefix + ".b", b_.data(), gb_.data(), b_.size()});
}

// ---- Softmax2 --------------------------------------------------------

Tensor Softmax2::forward(const Tensor& logits) {
    if (logits.c != 2) throw std::invalid_argument("Softmax2: expected 2 channels");
    Tensor probs(2, logits.h, logits.w);
    const float* z0 = logits.plane(0);
    const float* z1 = logits.plane(1);
    float* q0 = probs.plane(0);
    float* q1 = probs.plane(1);
    const size_t hw = logits.plane_size();
    for (size_t i = 0; i < hw; ++i) {
        const float m = std::max(z0[i], z1[i]);
        const float e0 = std::exp(z0[i] - m);
        const float e1 = std::exp(z1[i] - m);
        const float inv = 1.0f / (e0 + e1);
        q0[i] = e0 * inv;
        q1[i] = e1 * inv;
    }
    last_probs_ = probs;
    return probs;
}

Tensor Softmax2::backward(const Tensor& d_probs) const {
    Tensor d_logits(2, d_probs.h, d_probs.w);
    const float* q0 = last_probs_.plane(0);
    const float* q1 = last_probs_.plane(1);
    const float* g0 = d_probs.plane(0);
    const float* g1 = d_probs.plane(1);
    float* o0 = d_logits.plane(0);
    float* o1 = d_logits.plane(1);
    const size_t hw = d_probs.plane_size();
    for (size_t i = 0; i < hw; ++i) {
        const float dot = q0[i] * g0[i] + q1[i] * g1[i];
        o0[i] = q0[i] * (g0[i] - dot);
        o1[i] = q1[i] * (g1[i] - dot);
    }
    return d_logits;
}

// ---- helpers ---------------------------------------------------------

Tensor center_crop(const Tensor& in, int out_h, int out_w) {
    if (out_h > in.h || out_w > in.w) throw std::invalid_argument("center_crop: crop larger than input");
    const int top = (in.h - out_h) / 2;
    const int left = (in.w - out_w) / 2;
    Tensor out(in.c, out_h, out_w);
    for (int ci = 0; ci < in.c; ++ci) {
        const float* src = in.plane(ci) + static_cast<size_t>(top) * in.w + left;
        float* dst = out.plane(ci);
        for (int y = 0; y < out_h; ++y) {
            std::memcpy(dst, src, sizeof(float) * out_w);
            src += in.w;
            dst += out_w;
        }
    }
    return out;
}

}  // namespace vesselpipe
