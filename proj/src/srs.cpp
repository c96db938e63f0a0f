#include "vesselpipe/srs.hpp"

#include <stdexcept>

namespace vesselpipe {

void SRSConfig::validate() const {
    if (support < 0 || support > 255 || resistance < 0 || resistance > 255)
        throw std::invalid_argument("SRSConfig: thresholds must lie in [0,255]");
    if (support >= resistance)
        throw std::invalid_argument("SRSConfig: support must be below resistance");
}

SRSPartition srs_partition(const ByteRaster& likelihood, const SRSConfig& cfg) {
    cfg.validate();
    SRSPartition p;
    p.config = cfg;
    p.labels = Raster<std::uint8_t>(likelihood.rows(), likelihood.cols());
    for (int r = 0; r < likelihood.rows(); ++r) {
        for (int c = 0; c < likelihood.cols(); ++c) {
            const int v = likelihood(r, c);
            SRSLabel l = SRSLabel::AMBIG;
            if (v < cfg.support)
                l = SRSLabel::BG_EASY;
            else if (v > cfg.resistance)
                l = SRSLabel::VESSEL_EASY;
            p.labels(r, c) = static_cast<std::uint8_t>(l);
        }
    }
    return p;
}

BandStats band_stats(const SRSPartition& partition) {
    BandStats s;
    for (int r = 0; r < partition.labels.rows(); ++r)
        for (int c = 0; c < partition.labels.cols(); ++c) ++s.counts[partition.labels(r, c)];
    const double total = static_cast<double>(partition.labels.size());
    if (total > 0)
        for (int i = 0; i < 3; ++i) s.fractions[i] = s.counts[i] / total;
    return s;
}

ByteRaster partition_image(const SRSPartition& partition) {
    static constexpr std::uint8_t shades[3] = {0, 128, 255};
    ByteRaster out(partition.labels.rows(), partition.labels.cols());
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) out(r, c) = shades[partition.labels(r, c)];
    return out;
}

}  // namespace vesselpipe
