#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vesselpipe/rng.hpp"
#include "vesselpipe/tensor.hpp"

namespace vesselpipe {

// Named view over a parameter blob and its gradient accumulator, the
// interface the optimizer and checkpoint writer work against.
struct ParamView {
    std::string name;
    float* values = nullptr;
    float* grads = nullptr;
    size_t count = 0;
};

// 3x3 valid convolution. Forward keeps the input for the backward pass;
// backward accumulates into the weight/bias gradients and returns the
// input gradient.
class Conv3x3 {
public:
    Conv3x3() = default;
    Conv3x3(int in_channels, int out_channels);

    void init(Rng& rng);
    Tensor forward(const Tensor& in);
    Tensor backward(const Tensor& d_out);
    void collect_params(const std::string& prefix, std::vector<ParamView>& out);
    void release_state() { last_in_ = Tensor(); }

    int in_channels() const { return cin_; }
    int out_channels() const { return cout_; }

private:
    int cin_ = 0, cout_ = 0;
    std::vector<float> w_, b_, gw_, gb_;
    Tensor last_in_;
};

// Rectified linear unit; keeps its output to gate the backward pass.
class Relu {
public:
    Tensor forward(const Tensor& in);
    Tensor backward(const Tensor& d_out) const;
    void release_state() { last_out_ = Tensor(); }

private:
    Tensor last_out_;
};

// 2x2 max pooling with stride 2; argmax is remembered for routing.
class MaxPool2 {
public:
    Tensor forward(const Tensor& in);
    Tensor backward(const Tensor& d_out) const;
    void release_state() { choice_.clear(); }

private:
    int in_h_ = 0, in_w_ = 0, channels_ = 0;
    std::vector<std::uint8_t> choice_;  // 0..3 per pooled element
};

// 2x2 up-convolution with stride 2 (each input pixel expands into a
// learned 2x2 block).
class UpConv2 {
public:
    UpConv2() = default;
    UpConv2(int in_channels, int out_channels);

    void init(Rng& rng);
    Tensor forward(const Tensor& in);
    Tensor backward(const Tensor& d_out);
    void collect_params(const std::string& prefix, std::vector<ParamView>& out);
    void release_state() { last_in_ = Tensor(); }

private:
    int cin_ = 0, cout_ = 0;
    std::vector<float> w_, b_, gw_, gb_;  // w laid out [4][cout][cin]
    Tensor last_in_;
};

// 1x1 convolution (per-pixel linear map).
class Conv1x1 {
public:
    Conv1x1() = default;
    Conv1x1(int in_channels, int out_channels);

    void init(Rng& rng);
    Tensor forward(const Tensor& in);
    Tensor backward(const Tensor& d_out);
    void collect_params(const std::string& prefix, std::vector<ParamView>& out);
    void release_state() { last_in_ = Tensor(); }

private:
    int cin_ = 0, cout_ = 0;
    std::vector<float> w_, b_, gw_, gb_;
    Tensor last_in_;
};

// Per-pixel softmax over a two-channel logit tensor.
class Softmax2 {
public:
    Tensor forward(const Tensor& logits);
    Tensor backward(const Tensor& d_probs) const;
    void release_state() { last_probs_ = Tensor(); }

private:
    Tensor last_probs_;
};

Tensor center_crop(const Tensor& in, int out_h, int out_w);

}  // namespace vesselpipe
