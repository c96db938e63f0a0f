#pragma once

#include <vector>

#include "vesselpipe/geometry.hpp"
#include "vesselpipe/layers.hpp"

namespace vesselpipe {

// Valid-convolution encoder-decoder with crop-and-concatenate skip
// connections and a softmax head producing per-pixel (background, vessel)
// probabilities. The channel ladder doubles per level from
// geometry.base_channels.
class UNet {
public:
    UNet(const UNetGeometry& geometry, int in_channels);

    void init_params(Rng& rng);

    // input must be [in_channels, input_size, input_size]; returns
    // probabilities [2, output_size, output_size].
    Tensor forward(const Tensor& input);

    // d_probs is the loss gradient w.r.t. the softmax output; parameter
    // gradients accumulate until zero_grads().
    void backward(const Tensor& d_probs);

    std::vector<ParamView> params();
    void zero_grads();
    size_t param_count();

    const UNetGeometry& geometry() const { return geom_; }
    int in_channels() const { return in_channels_; }

    // Drops stored activations (between inference calls on large tiles).
    void release_state();

private:
    struct Block {
        Conv3x3 conv1, conv2;
        Relu relu1, relu2;
    };

    Tensor block_forward(Block& b, const Tensor& x);
    Tensor block_backward(Block& b, const Tensor& d);

    UNetGeometry geom_;
    int in_channels_;
    std::vector<Block> enc_;
    std::vector<MaxPool2> pools_;
    Block bottom_;
    std::vector<UpConv2> ups_;  // index 0 = deepest decoder level
    std::vector<Block> dec_;
    Conv1x1 head_;
    Softmax2 softmax_;

    std::vector<Tensor> skips_;
};

}  // namespace vesselpipe
