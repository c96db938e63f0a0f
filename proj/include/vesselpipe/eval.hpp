#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vesselpipe/dataset.hpp"
#include "vesselpipe/losses.hpp"
#include "vesselpipe/raster.hpp"

namespace vesselpipe {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

// Pixel counts over fov==1; vessel (1) is the positive class.
ConfusionCounts confusion(const ByteRaster& pred, const ByteRaster& gt, const ByteRaster& fov);

struct ImageMetrics {
    std::string id;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    bool no_positive_predictions = false;  // precision recorded as 0
};

struct MetricsReport {
    std::vector<ImageMetrics> rows;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double f1 = 0.0;  // harmonic mean of the two means
    double mean_accuracy = 0.0;
};

// Mean precision/recall/accuracy across images with the F1 taken as the
// harmonic mean of the aggregate precision and recall.
MetricsReport dataset_metrics(const std::vector<std::pair<std::string, ConfusionCounts>>& rows);

void write_metrics_csv(const MetricsReport& report, const std::string& path);

// w_background = 1, w_vessel = background:vessel pixel ratio over the
// training set within FOV.
ClassWeights estimate_class_weights(const std::vector<FundusSample>& training);

}  // namespace vesselpipe
