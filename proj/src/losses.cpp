#include "vesselpipe/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace vesselpipe {
namespace {

constexpr double kLogFloor = 1e-12;
constexpr double kFBetaEps = 1e-7;

struct SoftCounts {
    double intersection = 0.0;  // sum q_v * t
    double predicted = 0.0;     // sum q_v
    double actual = 0.0;        // sum t
};

SoftCounts soft_counts(const PixelPrediction& pred) {
    SoftCounts s;
    for (int r = 0; r < pred.prob_vessel.rows(); ++r) {
        for (int c = 0; c < pred.prob_vessel.cols(); ++c) {
            if (!pred.is_valid_pixel(r, c)) continue;
            const double q = pred.prob_vessel(r, c);
            const double t = pred.target(r, c);
            s.intersection += q * t;
            s.predicted += q;
            s.actual += t;
        }
    }
    return s;
}

}  // namespace

void WeightSampler::validate() const {
    if (step <= 0.0) throw std::invalid_argument("WeightSampler: step must be > 0");
    if (high < low) throw std::invalid_argument("WeightSampler: high < low");
    if (low < 0.0) throw std::invalid_argument("WeightSampler: low must be >= 0");
}

size_t WeightSampler::grid_size() const {
    // The epsilon keeps (2-1)/0.1 from landing on 9.99... and dropping
    // the top grid value.
    return static_cast<size_t>(std::floor((high - low) / step + 1e-9)) + 1;
}

double sample_weight(const WeightSampler& sampler, Rng& rng) {
    sampler.validate();
    return sampler.grid_value(rng.uniform_index(sampler.grid_size()));
}

void ClassWeights::validate() const {
    if (background <= 0.0 || vessel <= 0.0)
        throw std::invalid_argument("ClassWeights: weights must be strictly positive");
}

void PixelPrediction::validate() const {
    if (!prob_bg.same_shape(prob_vessel) || !prob_bg.same_shape(target))
        throw std::invalid_argument("PixelPrediction: plane shapes differ");
    if (valid_mask && !valid_mask->same_shape(target))
        throw std::invalid_argument("PixelPrediction: valid_mask shape differs");
    for (int r = 0; r < prob_bg.rows(); ++r) {
        for (int c = 0; c < prob_bg.cols(); ++c) {
            const float b = prob_bg(r, c), v = prob_vessel(r, c);
            if (b < -1e-6f || b > 1.0f + 1e-6f || v < -1e-6f || v > 1.0f + 1e-6f)
                throw std::invalid_argument("PixelPrediction: probability outside [0,1]");
            if (std::fabs(1.0f - (b + v)) > 1e-6f)
                throw std::invalid_argument("PixelPrediction: probabilities do not sum to 1");
            if (target(r, c) > 1)
                throw std::invalid_argument("PixelPrediction: target outside {0,1}");
        }
    }
}

size_t PixelPrediction::valid_count() const {
    if (!valid_mask) return target.size();
    size_t n = 0;
    for (int r = 0; r < target.rows(); ++r)
        for (int c = 0; c < target.cols(); ++c)
            if ((*valid_mask)(r, c)) ++n;
    return n;
}

double weighted_cross_entropy(const PixelPrediction& pred, const ClassWeights& weights) {
    weights.validate();
    const size_t n = pred.valid_count();
    if (n == 0) throw std::runtime_error("weighted_cross_entropy: no pixels to score");

    double sum = 0.0;
    for (int r = 0; r < pred.target.rows(); ++r) {
        for (int c = 0; c < pred.target.cols(); ++c) {
            if (!pred.is_valid_pixel(r, c)) continue;
            const bool vessel = pred.target(r, c) != 0;
            const double q = vessel ? pred.prob_vessel(r, c) : pred.prob_bg(r, c);
            const double w = vessel ? weights.vessel : weights.background;
            sum -= w * std::log(std::max(q, kLogFloor));
        }
    }
    return sum / static_cast<double>(n);
}

void weighted_cross_entropy_grad(const PixelPrediction& pred, const ClassWeights& weights,
                                 FloatRaster& d_bg, FloatRaster& d_vessel) {
    weights.validate();
    const size_t n = pred.valid_count();
    if (n == 0) throw std::runtime_error("weighted_cross_entropy: no pixels to score");

    d_bg = FloatRaster(pred.target.rows(), pred.target.cols(), 0.0f);
    d_vessel = FloatRaster(pred.target.rows(), pred.target.cols(), 0.0f);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int r = 0; r < pred.target.rows(); ++r) {
        for (int c = 0; c < pred.target.cols(); ++c) {
            if (!pred.is_valid_pixel(r, c)) continue;
            const bool vessel = pred.target(r, c) != 0;
            const double q = vessel ? pred.prob_vessel(r, c) : pred.prob_bg(r, c);
            if (q <= kLogFloor) continue;  // clamped region of the log
            const double w = vessel ? weights.vessel : weights.background;
            const float g = static_cast<float>(-w * inv_n / q);
            (vessel ? d_vessel : d_bg)(r, c) = g;
        }
    }
}

std::pair<double, ClassWeights> dynamic_cross_entropy(const PixelPrediction& pred,
                                                      const WeightSampler& sampler, Rng& rng) {
    ClassWeights drawn;
    drawn.background = sample_weight(sampler, rng);
    drawn.vessel = sample_weight(sampler, rng);
    return {weighted_cross_entropy(pred, drawn), drawn};
}

double f_beta_score(const PixelPrediction& pred, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("f_beta_score: beta must be > 0");
    const SoftCounts s = soft_counts(pred);
    const double precision = s.intersection / (s.predicted + kFBetaEps);
    const double recall = s.intersection / (s.actual + kFBetaEps);
    const double b2 = beta * beta;
    return (1.0 + b2) * precision * recall / (b2 * precision + recall + kFBetaEps);
}

void f_beta_grad(const PixelPrediction& pred, double beta, FloatRaster& d_vessel) {
    if (beta <= 0.0) throw std::invalid_argument("f_beta_grad: beta must be > 0");
    const SoftCounts s = soft_counts(pred);
    const double qsum = s.predicted + kFBetaEps;
    const double tsum = s.actual + kFBetaEps;
    const double precision = s.intersection / qsum;
    const double recall = s.intersection / tsum;
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall + kFBetaEps;
    const double dF_dP = (1.0 + b2) * recall * (recall + kFBetaEps) / (denom * denom);
    const double dF_dR = (1.0 + b2) * precision * (b2 * precision + kFBetaEps) / (denom * denom);

    d_vessel = FloatRaster(pred.target.rows(), pred.target.cols(), 0.0f);
    for (int r = 0; r < pred.target.rows(); ++r) {
        for (int c = 0; c < pred.target.cols(); ++c) {
            if (!pred.is_valid_pixel(r, c)) continue;
            const double t = pred.target(r, c);
            const double dP = (t * qsum - s.intersection) / (qsum * qsum);
            const double dR = t / tsum;
            d_vessel(r, c) = static_cast<float>(dF_dP * dP + dF_dR * dR);
        }
    }
}

std::pair<double, double> dynamic_dice_loss(const PixelPrediction& pred,
                                            const WeightSampler& beta_sampler, Rng& rng) {
    const double beta = sample_weight(beta_sampler, rng);
    return {1.0 - f_beta_score(pred, beta), beta};
}

}  // namespace vesselpipe
