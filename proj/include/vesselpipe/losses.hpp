#pragma once

#include <optional>
#include <utility>

#include "vesselpipe/raster.hpp"
#include "vesselpipe/rng.hpp"

namespace vesselpipe {

// Discretized uniform range {low, low+step, ..., low + floor((high-low)/step)*step}
// driving the per-iteration loss weights.
struct WeightSampler {
    double low = 1.0;
    double high = 1.0;
    double step = 1.0;

    void validate() const;
    size_t grid_size() const;
    double grid_value(size_t i) const { return low + static_cast<double>(i) * step; }
};

// Uniform draw from the sampler's discrete grid.
double sample_weight(const WeightSampler& sampler, Rng& rng);

struct ClassWeights {
    double background = 1.0;
    double vessel = 1.0;

    void validate() const;
};

// Two-class per-pixel prediction with an optional validity mask.
// Probabilities are (background, vessel) and must sum to one per pixel.
struct PixelPrediction {
    FloatRaster prob_bg;
    FloatRaster prob_vessel;
    ByteRaster target;                     // {0,1}, 1 = vessel
    std::optional<ByteRaster> valid_mask;  // {0,1}; absent = all valid

    void validate() const;
    size_t valid_count() const;
    bool is_valid_pixel(int r, int c) const {
        return !valid_mask || (*valid_mask)(r, c) != 0;
    }
};

// Weighted cross entropy, mean over valid pixels, with log probabilities
// clamped below at log(1e-12). Weights of (1,1) give the unweighted loss.
double weighted_cross_entropy(const PixelPrediction& pred, const ClassWeights& weights);

// d(loss)/d(prob) for both probability planes, matching the reduction of
// weighted_cross_entropy. Invalid pixels get zero gradient.
void weighted_cross_entropy_grad(const PixelPrediction& pred, const ClassWeights& weights,
                                 FloatRaster& d_bg, FloatRaster& d_vessel);

// Draws one weight per class (background first, then vessel) and
// evaluates the weighted loss; returns the drawn weights for logging.
std::pair<double, ClassWeights> dynamic_cross_entropy(const PixelPrediction& pred,
                                                      const WeightSampler& sampler, Rng& rng);

// Soft F-beta over valid pixels: P = sum(q_v*t)/(sum(q_v)+eps),
// R = sum(q_v*t)/(sum(t)+eps), F = (1+b^2)PR/(b^2 P + R + eps), eps = 1e-7.
double f_beta_score(const PixelPrediction& pred, double beta);

// dF/d(prob_vessel); F depends on the vessel plane only.
void f_beta_grad(const PixelPrediction& pred, double beta, FloatRaster& d_vessel);

// Draws beta once per invocation; loss = 1 - f_beta_score(pred, beta).
std::pair<double, double> dynamic_dice_loss(const PixelPrediction& pred,
                                            const WeightSampler& beta_sampler, Rng& rng);

}  // namespace vesselpipe
