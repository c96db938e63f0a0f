#pragma once

#include <vector>

namespace vesselpipe {

// Size ledger of a valid-convolution U-net: two 3x3 convolutions per
// block (shrink 4), one 2x2 pooling per encoder level (halve), one 2x2
// up-convolution per decoder level (double, then the block shrinks 4).
struct UNetGeometry {
    int depth = 4;
    int base_channels = 64;
    int input_size = 572;
    int output_size = 388;
    static constexpr int convs_per_block = 2;
    static constexpr int kernel = 3;

    // Encoder block output sizes (pre-pool), shallow to deep, then the
    // bottom block's size; decoder sizes, deep to shallow.
    std::vector<int> encoder_sizes;
    int bottom_size = 0;
    std::vector<int> decoder_sizes;

    int context_margin() const { return (input_size - output_size) / 2; }
};

// Traces the size ledger for the given depth and input size, rejecting
// any input that yields an odd size before a pool or a non-positive size
// anywhere; the exception names the first failing level.
UNetGeometry receptive_geometry(int depth, int input_size, int base_channels = 64);

// Largest admissible input size not exceeding `max_input` for the given
// depth (used to pick tile sizes for small experiments).
int largest_admissible_input(int depth, int max_input);

}  // namespace vesselpipe
