#pragma once

#include <cstdint>
#include <string>

#include "vesselpipe/dataset.hpp"

namespace vesselpipe::testsupport {

struct SyntheticOptions {
    int rows = 584;
    int cols = 565;
    int n_vessels = 12;   // strong, high-contrast vessels
    int n_faint = 10;     // low-contrast vessels (the ambiguous cases)
    double noise = 5.0;   // pixel noise sigma on the green channel
    bool with_fov = true;
    std::uint64_t seed = 1;
};

// Fundus-like raster: darker curvilinear vessels over a bright disc,
// with the drawn vessels as ground truth.
FundusSample make_synthetic_sample(const std::string& id, const SyntheticOptions& opt);

// DRIVE-layout tree (images/, labels/, masks/) with the predefined
// numbering: stems 01_test..20_test and 21_training..40_training.
void write_synthetic_drive(const std::string& root, int n_images = 40, std::uint64_t seed = 7,
                           int rows = 584, int cols = 565);

// Small dataset for fast integration tests (no FOV masks).
void write_synthetic_custom(const std::string& root, int n_images, int rows, int cols,
                            std::uint64_t seed);

}  // namespace vesselpipe::testsupport
