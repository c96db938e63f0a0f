#include "vesselpipe/unet.hpp"

#include <cstring>
#include <stdexcept>

namespace vesselpipe {
namespace {

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.h != b.h || a.w != b.w) throw std::invalid_argument("concat: spatial mismatch");
    Tensor out(a.c + b.c, a.h, a.w);
    std::memcpy(out.v.data(), a.v.data(), sizeof(float) * a.size());
    std::memcpy(out.v.data() + a.size(), b.v.data(), sizeof(float) * b.size());
    return out;
}

}  // namespace

UNet::UNet(const UNetGeometry& geometry, int in_channels)
    : geom_(geometry), in_channels_(in_channels) {
    const int depth = geom_.depth;
    const int base = geom_.base_channels;

    enc_.resize(depth);
    pools_.resize(depth);
    for (int l = 0; l < depth; ++l) {
        const int cin = (l == 0) ? in_channels_ : base << (l - 1);
        const int cout = base << l;
        enc_[l].conv1 = Conv3x3(cin, cout);
        enc_[l].conv2 = Conv3x3(cout, cout);
    }
    bottom_.conv1 = Conv3x3(base << (depth - 1), base << depth);
    bottom_.conv2 = Conv3x3(base << depth, base << depth);

    ups_.reserve(depth);
    dec_.resize(depth);
    for (int i = 0; i < depth; ++i) {
        const int level = depth - 1 - i;
        const int deeper = (i == 0) ? base << depth : base << (level + 1);
        const int ch = base << level;
        ups_.emplace_back(deeper, ch);
        dec_[i].conv1 = Conv3x3(2 * ch, ch);
        dec_[i].conv2 = Conv3x3(ch, ch);
    }
    head_ = Conv1x1(base, 2);
    skips_.resize(depth);
}

void UNet::init_params(Rng& rng) {
    for (auto& b : enc_) {
        b.conv1.init(rng);
        b.conv2.init(rng);
    }
    bottom_.conv1.init(rng);
    bottom_.conv2.init(rng);
    for (auto& u : ups_) u.init(rng);
    for (auto& b : dec_) {
        b.conv1.init(rng);
        b.conv2.init(rng);
    }
    head_.init(rng);
}

Tensor UNet::block_forward(Block& b, const Tensor& x) {
    return b.relu2.forward(b.conv2.forward(b.relu1.forward(b.conv1.forward(x))));
}

Tensor UNet::block_backward(Block& b, const Tensor& d) {
    return b.conv1.backward(b.relu1.backward(b.conv2.backward(b.relu2.backward(d))));
}

Tensor UNet::forward(const Tensor& input) {
    if (input.c != in_channels_ || input.h != geom_.input_size || input.w != geom_.input_size)
        throw std::invalid_argument("UNet: input shape mismatch");

    Tensor x = input;
    for (int l = 0; l < geom_.depth; ++l) {
        x = block_forward(enc_[l], x);
        skips_[l] = x;
        x = pools_[l].forward(x);
    }
    x = block_forward(bottom_, x);
    for (int i = 0; i < geom_.depth; ++i) {
        const int level = geom_.depth - 1 - i;
        x = ups_[i].forward(x);
        Tensor skip = center_crop(skips_[level], x.h, x.w);
        x = concat_channels(x, skip);
        x = block_forward(dec_[i], x);
    }
    return softmax_.forward(head_.forward(x));
}

void UNet::backward(const Tensor& d_probs) {
    Tensor d = head_.backward(softmax_.backward(d_probs));

    std::vector<Tensor> skip_grads(geom_.depth);
    for (int i = geom_.depth - 1; i >= 0; --i) {
        const int level = geom_.depth - 1 - i;
        d = block_backward(dec_[i], d);
        // Split the concat gradient: first half flows into the up-conv,
        // second half into the cropped skip feature.
        const int ch = d.c / 2;
        Tensor d_up(ch, d.h, d.w), d_skip(ch, d.h, d.w);
        std::memcpy(d_up.v.data(), d.v.data(), sizeof(float) * d_up.size());
        std::memcpy(d_skip.v.data(), d.v.data() + d_up.size(), sizeof(float) * d_skip.size());

        const Tensor& skip = skips_[level];
        Tensor padded(skip.c, skip.h, skip.w);
        const int top = (skip.h - d.h) / 2, left = (skip.w - d.w) / 2;
        for (int ci = 0; ci < ch; ++ci) {
            float* dst = padded.plane(ci) + static_cast<size_t>(top) * skip.w + left;
            const float* src = d_skip.plane(ci);
            for (int y = 0; y < d.h; ++y) {
                std::memcpy(dst, src, sizeof(float) * d.w);
                dst += skip.w;
                src += d.w;
            }
        }
        skip_grads[level] = std::move(padded);
        d = ups_[i].backward(d_up);
    }

    d = block_backward(bottom_, d);
    for (int l = geom_.depth - 1; l >= 0; --l) {
        d = pools_[l].backward(d);
        for (size_t j = 0; j < d.v.size(); ++j) d.v[j] += skip_grads[l].v[j];
        d = block_backward(enc_[l], d);
    }
}

std::vector<ParamView> UNet::params() {
    std::vector<ParamView> out;
    for (size_t l = 0; l < enc_.size(); ++l) {
        enc_[l].conv1.collect_params("enc" + std::to_string(l) + ".conv1", out);
        enc_[l].conv2.collect_params("enc" + std::to_string(l) + ".conv2", out);
    }
    bottom_.conv1.collect_params("bottom.conv1", out);
    bottom_.conv2.collect_params("bottom.conv2", out);
    for (size_t i = 0; i < ups_.size(); ++i) {
        ups_[i].collect_params("up" + std::to_string(i), out);
        dec_[i].conv1.collect_params("dec" + std::to_string(i) + ".conv1", out);
        dec_[i].conv2.collect_params("dec" + std::to_string(i) + ".conv2", out);
    }
    head_.collect_params("head", out);
    return out;
}

void UNet::zero_grads() {
    for (auto& p : params()) std::memset(p.grads, 0, sizeof(float) * p.count);
}

size_t UNet::param_count() {
    size_t n = 0;
    for (const auto& p : params()) n += p.count;
    return n;
}

void UNet::release_state() {
    for (auto& b : enc_) {
        b.conv1.release_state();
        b.conv2.release_state();
        b.relu1.release_state();
        b.relu2.release_state();
    }
    bottom_.conv1.release_state();
    bottom_.conv2.release_state();
    bottom_.relu1.release_state();
    bottom_.relu2.release_state();
    for (auto& u : ups_) u.release_state();
    for (auto& b : dec_) {
        b.conv1.release_state();
        b.conv2.release_state();
        b.relu1.release_state();
        b.relu2.release_state();
    }
    head_.release_state();
    softmax_.release_state();
    for (auto& s : skips_) s = Tensor();
    for (auto& p : pools_) p.release_state();
}

}  // namespace vesselpipe
