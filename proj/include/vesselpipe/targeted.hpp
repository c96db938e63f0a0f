#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "vesselpipe/srs.hpp"
#include "vesselpipe/stage1.hpp"

namespace vesselpipe {

// Prediction window p, surrounding context window, and the lattice pitch
// p/2 used to place stage-2 patches.
struct PatchGeometry {
    int p = 100;
    int context = 140;
    int lattice_spacing = 50;

    void validate() const;
    // The windows must line up with the mini network's sizes.
    void validate_against(const UNetGeometry& geometry) const;
};

struct SeedSet {
    std::vector<std::pair<int, int>> seeds;  // (row, col)
    PatchGeometry geometry;
};

// High-recall binary estimate: likelihood >= support.
ByteRaster raw_estimate(const ByteRaster& likelihood, int support);

// Seeds are skeleton pixels on the lattice lines (row or column divisible
// by the spacing), deduplicated greedily in row-major order at Chebyshev
// distance p/4, then repaired until the p-by-p windows cover every
// ambiguous pixel.
SeedSet lattice_seeds(const ByteRaster& skeleton, const PatchGeometry& geometry,
                      const SRSPartition& partition);

struct TwoChannelPatch {
    FloatRaster likelihood;    // context x context, scaled to [0,1]
    FloatRaster ambiguous;     // same, zeroed outside the ambiguous band
    std::pair<int, int> seed;  // (row, col)
    ByteRaster ambig_mask;     // central p x p
    std::optional<ByteRaster> gt_window;

    Tensor to_tensor() const;
};

TwoChannelPatch extract_patch(const LikelihoodMap& map, const SRSPartition& partition,
                              std::pair<int, int> seed, const PatchGeometry& geometry,
                              const ByteRaster* gt = nullptr);

struct Stage2Result {
    UNetGeometry geometry;
    ParamSnapshot params;
    std::vector<double> epoch_loss;
    std::vector<double> drawn_betas;  // one per batch, in draw order

    std::unique_ptr<UNet> materialize() const;
};

// Mini U-net trained with the stochastic F-beta loss, beta drawn once per
// mini-batch; the loss covers the full p x p output window of each patch.
Stage2Result train_stage2(const std::vector<TwoChannelPatch>& patches,
                          const UNetGeometry& geometry, const TrainConfig& cfg);

// Per-pixel vessel probabilities for ambiguous pixels. Overlapping
// windows average; pixels no patch covers stay at the -1 sentinel.
FloatRaster predict_ambiguous(UNet& net, const std::vector<TwoChannelPatch>& patches,
                              const SRSPartition& partition);

// VESSEL_EASY -> 1, BG_EASY -> 0, AMBIG -> probability > 0.5. Pass
// nullptr for ambig_probs when stage 2 was skipped (ambiguous pixels
// become background). An ambiguous pixel left at the sentinel when stage
// 2 ran is a coverage violation and throws.
ByteRaster merge_segmentation(const SRSPartition& partition, const FloatRaster* ambig_probs);

}  // namespace vesselpipe
