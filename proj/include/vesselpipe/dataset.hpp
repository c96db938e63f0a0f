#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vesselpipe/raster.hpp"
#include "vesselpipe/rng.hpp"

namespace vesselpipe {

enum class DatasetTag { DRIVE, STARE, CHASE_DB, AV_WIDE, VEVIO_MOSAIC, VEVIO_FRAME, CUSTOM };

DatasetTag parse_dataset_tag(const std::string& name);
std::string dataset_tag_name(DatasetTag tag);

// One retinal image with its optional field-of-view mask and ground
// truth. gt and fov_mask hold {0,1}; `green` is filled by preprocessing.
struct FundusSample {
    std::string id;
    std::array<ByteRaster, 3> rgb;  // planes R, G, B
    ByteRaster green;
    std::optional<ByteRaster> fov_mask;
    std::optional<ByteRaster> gt;
    DatasetTag tag = DatasetTag::CUSTOM;

    int rows() const { return rgb[0].rows(); }
    int cols() const { return rgb[0].cols(); }
    bool has_gt() const { return gt.has_value(); }

    // Full-frame mask of ones when the dataset ships none, so downstream
    // code has a single path.
    const ByteRaster& fov() const;
};

// Loads `<root>/images/<stem>.<ext>` plus matching-stem files from
// `labels/` and `masks/`. Per-sample dimension mismatches reject the
// sample with a diagnostic on stderr; a missing images directory throws.
std::vector<FundusSample> load_dataset(const std::string& root, DatasetTag tag);

// Copies the green plane of rgb into `green`. A sample loaded from a
// single-channel file has identical planes, so this degrades to a copy.
void extract_green(FundusSample& sample);

// Horizontal and vertical flips, each with independent probability 1/2,
// applied identically to green, gt, and fov_mask.
FundusSample random_flip(const FundusSample& sample, Rng& rng);

struct Fold {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
};

struct FoldPlan {
    std::vector<Fold> folds;
    int k = 0;
};

// k-fold planning. DRIVE uses its predefined 20/20 split (test stems are
// numbered 1-20 or carry a "test" suffix) with the training half divided
// 15 train / 5 val; other tags get k folds whose non-test ids are split
// 75% train / 25% validation.
FoldPlan make_folds(const std::vector<std::string>& ids, DatasetTag tag, int k, Rng& rng);

}  // namespace vesselpipe
