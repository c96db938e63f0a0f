#include "vesselpipe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <map>
#include <stdexcept>

#include "vesselpipe/image_io.hpp"

namespace fs = std::filesystem;

namespace vesselpipe {
namespace {

ByteRaster binarize(const ByteRaster& in) {
    ByteRaster out(in.rows(), in.cols());
    for (int r = 0; r < in.rows(); ++r)
        for (int c = 0; c < in.cols(); ++c) out(r, c) = in(r, c) >= 128 ? 1 : 0;
    return out;
}

std::map<std::string, fs::path> stems_in(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const fs::path p = entry.path();
        if (!has_raster_extension(p.string())) continue;
        out[p.stem().string()] = p;
    }
    return out;
}

// DRIVE's predefined split: stems 01..20 are the test half, 21..40 the
// training half; "_test"/"_training" suffixes take precedence.
bool is_drive_test_id(const std::string& id) {
    if (id.find("test") != std::string::npos) return true;
    if (id.find("train") != std::string::npos) return false;
    size_t i = 0;
    while (i < id.size() && std::isdigit(static_cast<unsigned char>(id[i]))) ++i;
    if (i == 0) return false;
    return std::stoi(id.substr(0, i)) <= 20;
}

void shuffle_ids(std::vector<std::string>& ids, Rng& rng) {
    for (size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[rng.uniform_index(i)]);
}

Fold split_train_val(std::vector<std::string> non_test, Rng& rng) {
    shuffle_ids(non_test, rng);
    // 75% training and 25% validation, validation rounded down but >= 1.
    size_t n_val = non_test.size() / 4;
    if (n_val == 0 && non_test.size() > 1) n_val = 1;
    Fold fold;
    fold.val_ids.assign(non_test.begin(), non_test.begin() + n_val);
    fold.train_ids.assign(non_test.begin() + n_val, non_test.end());
    std::sort(fold.val_ids.begin(), fold.val_ids.end());
    std::sort(fold.train_ids.begin(), fold.train_ids.end());
    return fold;
}

}  // namespace

DatasetTag parse_dataset_tag(const std::string& name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    std::replace(n.begin(), n.end(), '-', '_');
    if (n == "DRIVE") return DatasetTag::DRIVE;
    if (n == "STARE") return DatasetTag::STARE;
    if (n == "CHASE_DB" || n == "CHASE" || n == "CHASEDB") return DatasetTag::CHASE_DB;
    if (n == "AV_WIDE" || n == "AVWIDE" || n == "WIDE") return DatasetTag::AV_WIDE;
    if (n == "VEVIO_MOSAIC") return DatasetTag::VEVIO_MOSAIC;
    if (n == "VEVIO_FRAME" || n == "VEVIO_FRAMES") return DatasetTag::VEVIO_FRAME;
    if (n == "CUSTOM") return DatasetTag::CUSTOM;
    throw std::invalid_argument("unknown dataset tag: " + name);
}

std::string dataset_tag_name(DatasetTag tag) {
    switch (tag) {
        case DatasetTag::DRIVE: return "DRIVE";
        case DatasetTag::STARE: return "STARE";
        case DatasetTag::CHASE_DB: return "CHASE_DB";
        case DatasetTag::AV_WIDE: return "AV_WIDE";
        case DatasetTag::VEVIO_MOSAIC: return "VEVIO_MOSAIC";
        case DatasetTag::VEVIO_FRAME: return "VEVIO_FRAME";
        case DatasetTag::CUSTOM: return "CUSTOM";
    }
    return "CUSTOM";
}

const ByteRaster& FundusSample::fov() const {
    if (fov_mask) return *fov_mask;
    static thread_local ByteRaster full;
    if (!full.same_shape(rgb[0])) full = ByteRaster(rows(), cols(), 1);
    return full;
}

std::vector<FundusSample> load_dataset(const std::string& root, DatasetTag tag) {
    const fs::path images_dir = fs::path(root) / "images";
    if (!fs::is_directory(images_dir))
        throw std::runtime_error("dataset images directory not found: " + images_dir.string());

    const auto images = stems_in(images_dir);
    const auto labels = stems_in(fs::path(root) / "labels");
    const auto masks = stems_in(fs::path(root) / "masks");

    std::vector<FundusSample> samples;
    for (const auto& [stem, path] : images) {
        FundusSample s;
        s.id = stem;
        s.tag = tag;
        try {
            s.rgb = load_rgb(path.string()).plane;
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
            continue;
        }

        bool rejected = false;
        if (auto it = labels.find(stem); it != labels.end()) {
            ByteRaster gt = load_gray(it->second.string());
            if (!gt.same_shape(s.rgb[0])) {
                std::cerr << "warning: rejecting " << stem << ": label " << gt.rows() << "x"
                          << gt.cols() << " does not match image " << s.rows() << "x" << s.cols()
                          << "\n";
                rejected = true;
            } else {
                s.gt = binarize(gt);
            }
        }
        if (auto it = masks.find(stem); it != masks.end() && !rejected) {
            ByteRaster fov = load_gray(it->second.string());
            if (!fov.same_shape(s.rgb[0])) {
                std::cerr << "warning: rejecting " << stem << ": mask dimensions mismatch\n";
                rejected = true;
            } else {
                s.fov_mask = binarize(fov);
            }
        }
        if (!rejected) samples.push_back(std::move(s));
    }
    if (samples.empty())
        std::cerr << "warning: no decodable samples under " << images_dir << "\n";
    return samples;
}

void extract_green(FundusSample& sample) {
    if (sample.rgb[1].empty()) throw std::invalid_argument("extract_green: rgb not populated");
    sample.green = sample.rgb[1];
}

FundusSample random_flip(const FundusSample& sample, Rng& rng) {
    const bool horizontal = rng.coin();
    const bool vertical = rng.coin();
    FundusSample out = sample;
    auto apply = [&](ByteRaster& r) {
        if (r.empty()) return;
        if (horizontal) r = flip_horizontal(r);
        if (vertical) r = flip_vertical(r);
    };
    for (auto& plane : out.rgb) apply(plane);
    apply(out.green);
    if (out.gt) apply(*out.gt);
    if (out.fov_mask) apply(*out.fov_mask);
    return out;
}

FoldPlan make_folds(const std::vector<std::string>& ids, DatasetTag tag, int k, Rng& rng) {
    if (ids.empty()) throw std::invalid_argument("make_folds: no sample ids");

    FoldPlan plan;
    if (tag == DatasetTag::DRIVE) {
        std::vector<std::string> test, train_pool;
        for (const auto& id : ids)
            (is_drive_test_id(id) ? test : train_pool).push_back(id);
        if (test.empty() || train_pool.empty())
            throw std::runtime_error("make_folds: DRIVE ids do not form the predefined split");
        shuffle_ids(train_pool, rng);
        // 15 training / 5 validation from the 20 training images; scale
        // the 1/4 ratio when given a partial dataset.
        size_t n_val = train_pool.size() / 4;
        if (n_val == 0 && train_pool.size() > 1) n_val = 1;
        Fold fold;
        fold.val_ids.assign(train_pool.begin(), train_pool.begin() + n_val);
        fold.train_ids.assign(train_pool.begin() + n_val, train_pool.end());
        fold.test_ids = std::move(test);
        std::sort(fold.val_ids.begin(), fold.val_ids.end());
        std::sort(fold.train_ids.begin(), fold.train_ids.end());
        std::sort(fold.test_ids.begin(), fold.test_ids.end());
        plan.folds.push_back(std::move(fold));
        plan.k = 1;
        return plan;
    }

    if (k < 2) throw std::invalid_argument("make_folds: k must be >= 2 for non-DRIVE datasets");
    if (static_cast<size_t>(k) > ids.size())
        throw std::invalid_argument("make_folds: k exceeds number of samples");

    std::vector<std::string> shuffled = ids;
    shuffle_ids(shuffled, rng);

    plan.k = k;
    const size_t n = shuffled.size();
    for (int f = 0; f < k; ++f) {
        const size_t begin = n * f / k;
        const size_t end = n * (f + 1) / k;
        std::vector<std::string> test(shuffled.begin() + begin, shuffled.begin() + end);
        std::vector<std::string> rest;
        rest.insert(rest.end(), shuffled.begin(), shuffled.begin() + begin);
        rest.insert(rest.end(), shuffled.begin() + end, shuffled.end());
        Fold fold = split_train_val(std::move(rest), rng);
        fold.test_ids = std::move(test);
        std::sort(fold.test_ids.begin(), fold.test_ids.end());
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

}  // namespace vesselpipe
