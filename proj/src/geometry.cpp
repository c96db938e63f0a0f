#include "vesselpipe/geometry.hpp"

#include <stdexcept>
#include <string>

namespace vesselpipe {

UNetGeometry receptive_geometry(int depth, int input_size, int base_channels) {
    if (depth < 1) throw std::invalid_argument("receptive_geometry: depth must be >= 1");
    if (base_channels < 1)
        throw std::invalid_argument("receptive_geometry: base_channels must be >= 1");

    UNetGeometry g;
    g.depth = depth;
    g.base_channels = base_channels;
    g.input_size = input_size;

    int s = input_size;
    for (int level = 0; level < depth; ++level) {
        s -= 4;
        if (s <= 0)
            throw std::invalid_argument("receptive_geometry: encoder level " +
                                        std::to_string(level) + " collapses to " +
                                        std::to_string(s) + " pixels");
        if (s % 2 != 0)
            throw std::invalid_argument("receptive_geometry: encoder level " +
                                        std::to_string(level) + " reaches odd size " +
                                        std::to_string(s) + " before pooling");
        g.encoder_sizes.push_back(s);
        s /= 2;
    }

    s -= 4;
    if (s <= 0)
        throw std::invalid_argument("receptive_geometry: bottom block collapses to " +
                                    std::to_string(s) + " pixels");
    g.bottom_size = s;

    for (int level = depth - 1; level >= 0; --level) {
        s = 2 * s - 4;
        if (s <= 0)
            throw std::invalid_argument("receptive_geometry: decoder level " +
                                        std::to_string(level) + " collapses to " +
                                        std::to_string(s) + " pixels");
        if (s > g.encoder_sizes[level])
            throw std::invalid_argument("receptive_geometry: decoder level " +
                                        std::to_string(level) + " exceeds its skip feature");
        g.decoder_sizes.push_back(s);
    }
    g.output_size = s;
    return g;
}

int largest_admissible_input(int depth, int max_input) {
    for (int s = max_input; s >= 1; --s) {
        try {
            receptive_geometry(depth, s);
            return s;
        } catch (const std::invalid_argument&) {
        }
    }
    throw std::invalid_argument("largest_admissible_input: no admissible size <= " +
                                std::to_string(max_input));
}

}  // namespace vesselpipe
