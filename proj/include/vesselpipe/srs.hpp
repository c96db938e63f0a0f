#pragma once

#include <array>
#include <cstdint>

#include "vesselpipe/raster.hpp"

namespace vesselpipe {

// Support-resistance thresholds on the 0-255 likelihood scale. Pixels in
// [support, resistance] (both inclusive) are ambiguous.
struct SRSConfig {
    int support = 20;
    int resistance = 235;

    void validate() const;
};

enum class SRSLabel : std::uint8_t { BG_EASY = 0, AMBIG = 1, VESSEL_EASY = 2 };

struct SRSPartition {
    Raster<std::uint8_t> labels;  // SRSLabel values
    SRSConfig config;

    bool is(int r, int c, SRSLabel l) const {
        return labels(r, c) == static_cast<std::uint8_t>(l);
    }
};

SRSPartition srs_partition(const ByteRaster& likelihood, const SRSConfig& cfg);

struct BandStats {
    std::array<std::int64_t, 3> counts{};  // indexed by SRSLabel
    std::array<double, 3> fractions{};
};

BandStats band_stats(const SRSPartition& partition);

// 3-value indexed view for inspection: 0 = easy background, 128 =
// ambiguous, 255 = easy vessel.
ByteRaster partition_image(const SRSPartition& partition);

}  // namespace vesselpipe
