#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vesselpipe/dataset.hpp"
#include "vesselpipe/srs.hpp"
#include "vesselpipe/stage1.hpp"
#include "vesselpipe/targeted.hpp"

namespace vesselpipe {

enum class PipelineVariant { DynamicTargeted, DynamicOnly, FixedOnly, FixedTargeted };

PipelineVariant parse_variant(const std::string& name);
std::string variant_name(PipelineVariant v);
bool variant_uses_targeted(PipelineVariant v);
bool variant_uses_dynamic(PipelineVariant v);

struct StageNetConfig {
    int depth = 4;
    int input_size = 572;
    int base_channels = 64;

    UNetGeometry geometry() const;
};

// One experiment = one flat key-value config file; command-line flags
// override file keys and the effective config is echoed into the output
// directory.
struct ExperimentConfig {
    DatasetTag dataset = DatasetTag::DRIVE;
    std::string root;
    PipelineVariant variant = PipelineVariant::DynamicTargeted;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int folds = 5;
    bool fov_metrics = true;

    double clahe_clip = 2.0;
    int clahe_grid = 8;

    StageNetConfig stage1_net;
    TrainConfig stage1;  // weight_sampler defaults to (1,100,1)

    StageNetConfig stage2_net{2, 140, 64};
    TrainConfig stage2;  // weight_sampler reused as the beta sampler

    SRSConfig srs;
    PatchGeometry patch;

    static ExperimentConfig defaults();
    static ExperimentConfig from_file(const std::string& path);

    // Applies one `key=value` pair; throws std::invalid_argument on an
    // unknown key or an unparsable value.
    void set(const std::string& key, const std::string& value);

    void validate() const;
    void echo(const std::string& path) const;
    std::map<std::string, std::string> to_map() const;
};

}  // namespace vesselpipe
