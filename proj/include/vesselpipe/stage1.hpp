#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vesselpipe/dataset.hpp"
#include "vesselpipe/geometry.hpp"
#include "vesselpipe/losses.hpp"
#include "vesselpipe/raster.hpp"
#include "vesselpipe/unet.hpp"

namespace vesselpipe {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 4;
    int epochs = 250;
    WeightSampler weight_sampler{1.0, 100.0, 1.0};
    // When set, every batch uses these class weights instead of sampling
    // (the fixed-weight pipeline variants).
    std::optional<ClassWeights> fixed_weights;
    std::uint64_t seed = 0;
    enum class Optimizer { Adam } optimizer = Optimizer::Adam;

    bool augment = true;
    // Desk-scale knobs: 0 means every tile of every image.
    int max_train_tiles_per_image = 0;
    int max_val_tiles_per_image = 0;

    void validate() const;
};

struct BatchDraw {
    int epoch = 0;  // 1-based
    int batch = 0;  // 0-based within the epoch
    double w_background = 1.0;
    double w_vessel = 1.0;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_precision = 0.0;
    double train_recall = 0.0;
    double val_precision = 0.0;
    double val_recall = 0.0;
    std::vector<BatchDraw> drawn_weights;

    double val_f1() const;
};

struct TrainTrace {
    std::vector<EpochRecord> records;

    // One row per epoch: epoch, train_loss, train_P, train_R, val_P,
    // val_R, w_bg, w_vessel (the epoch's first draw). The full per-batch
    // draw log goes to write_draws_csv.
    void write_csv(const std::string& path) const;
    void write_draws_csv(const std::string& path) const;
};

struct ParamSnapshot {
    std::vector<float> values;
};

ParamSnapshot snapshot_params(UNet& net);
void restore_params(UNet& net, const ParamSnapshot& snapshot);

struct Stage1Result {
    UNetGeometry geometry;
    int in_channels = 1;
    ParamSnapshot best_params;   // highest validation F1
    ParamSnapshot final_params;  // last epoch
    int best_epoch = 0;
    TrainTrace trace;

    std::unique_ptr<UNet> materialize_best() const;
    std::unique_ptr<UNet> materialize_final() const;
};

// Adam training of the full U-net with the dynamic (or fixed) weighted
// cross entropy, one weight draw per mini-batch. Samples must carry
// preprocessed `green` rasters and ground truth; loss and metrics are
// restricted to each tile's output window inside the image and FOV.
Stage1Result train_stage1(const std::vector<FundusSample>& train,
                          const std::vector<FundusSample>& val, const UNetGeometry& geometry,
                          const TrainConfig& cfg);

struct LikelihoodMap {
    ByteRaster values;  // probability * 255, round half up
    std::string source_id;
};

// Tiled, mirror-padded full-image inference producing the 8-bit vessel
// likelihood map.
LikelihoodMap infer_likelihood(UNet& net, const FundusSample& sample);

}  // namespace vesselpipe
