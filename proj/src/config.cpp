#include "vesselpipe/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vesselpipe {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": " + value);
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer value for " + key + ": " + value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    throw std::invalid_argument("config: bad boolean value for " + key + ": " + value);
}

}  // namespace

PipelineVariant parse_variant(const std::string& name) {
    if (name == "dynamic+targeted") return PipelineVariant::DynamicTargeted;
    if (name == "dynamic-only") return PipelineVariant::DynamicOnly;
    if (name == "fixed-only") return PipelineVariant::FixedOnly;
    if (name == "fixed+targeted") return PipelineVariant::FixedTargeted;
    throw std::invalid_argument(
        "unknown pipeline variant: " + name +
        " (expected dynamic+targeted, dynamic-only, fixed-only, or fixed+targeted)");
}

std::string variant_name(PipelineVariant v) {
    switch (v) {
        case PipelineVariant::DynamicTargeted: return "dynamic+targeted";
        case PipelineVariant::DynamicOnly: return "dynamic-only";
        case PipelineVariant::FixedOnly: return "fixed-only";
        case PipelineVariant::FixedTargeted: return "fixed+targeted";
    }
    return "dynamic+targeted";
}

bool variant_uses_targeted(PipelineVariant v) {
    return v == PipelineVariant::DynamicTargeted || v == PipelineVariant::FixedTargeted;
}

bool variant_uses_dynamic(PipelineVariant v) {
    return v == PipelineVariant::DynamicTargeted || v == PipelineVariant::DynamicOnly;
}

UNetGeometry StageNetConfig::geometry() const {
    return receptive_geometry(depth, input_size, base_channels);
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.stage1.epochs = 250;
    cfg.stage1.weight_sampler = {1.0, 100.0, 1.0};
    cfg.stage2.epochs = 60;
    cfg.stage2.weight_sampler = {1.0, 2.0, 0.1};
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    ExperimentConfig cfg = defaults();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key = value: " + stripped);
        cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "dataset") dataset = parse_dataset_tag(value);
    else if (key == "root") root = value;
    else if (key == "variant") variant = parse_variant(value);
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "out") out_dir = value;
    else if (key == "folds") folds = static_cast<int>(parse_int(key, value));
    else if (key == "fov_metrics") fov_metrics = parse_bool(key, value);
    else if (key == "clahe.clip") clahe_clip = parse_real(key, value);
    else if (key == "clahe.grid") clahe_grid = static_cast<int>(parse_int(key, value));
    else if (key == "stage1.depth") stage1_net.depth = static_cast<int>(parse_int(key, value));
    else if (key == "stage1.input") stage1_net.input_size = static_cast<int>(parse_int(key, value));
    else if (key == "stage1.base") stage1_net.base_channels = static_cast<int>(parse_int(key, value));
    else if (key == "stage1.lr") stage1.learning_rate = parse_real(key, value);
    else if (key == "stage1.batch") stage1.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "stage1.epochs") stage1.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "stage1.w_low") stage1.weight_sampler.low = parse_real(key, value);
    else if (key == "stage1.w_high") stage1.weight_sampler.high = parse_real(key, value);
    else if (key == "stage1.w_step") stage1.weight_sampler.step = parse_real(key, value);
    else if (key == "stage1.augment") stage1.augment = parse_bool(key, value);
    else if (key == "stage1.max_train_tiles")
        stage1.max_train_tiles_per_image = static_cast<int>(parse_int(key, value));
    else if (key == "stage1.max_val_tiles")
        stage1.max_val_tiles_per_image = static_cast<int>(parse_int(key, value));
    else if (key == "stage2.input") stage2_net.input_size = static_cast<int>(parse_int(key, value));
    else if (key == "stage2.base") stage2_net.base_channels = static_cast<int>(parse_int(key, value));
    else if (key == "stage2.lr") stage2.learning_rate = parse_real(key, value);
    else if (key == "stage2.batch") stage2.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "stage2.epochs") stage2.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "stage2.b_low") stage2.weight_sampler.low = parse_real(key, value);
    else if (key == "stage2.b_high") stage2.weight_sampler.high = parse_real(key, value);
    else if (key == "stage2.b_step") stage2.weight_sampler.step = parse_real(key, value);
    else if (key == "srs.support") srs.support = static_cast<int>(parse_int(key, value));
    else if (key == "srs.resistance") srs.resistance = static_cast<int>(parse_int(key, value));
    else if (key == "patch.p") {
        patch.p = static_cast<int>(parse_int(key, value));
        patch.lattice_spacing = patch.p / 2;
    } else if (key == "patch.context") patch.context = static_cast<int>(parse_int(key, value));
    else throw std::invalid_argument("config: unknown key: " + key);
}

void ExperimentConfig::validate() const {
    stage1.validate();
    stage2.validate();
    srs.validate();
    // Stage-2 network must line up with the patch windows.
    patch.validate_against(
        receptive_geometry(stage2_net.depth, patch.context, stage2_net.base_channels));
    if (stage2_net.input_size != patch.context)
        throw std::invalid_argument("config: stage2.input must equal patch.context");
    stage1_net.geometry();  // throws when inadmissible
    if (clahe_clip <= 0.0) throw std::invalid_argument("config: clahe.clip must be > 0");
    if (clahe_grid < 1) throw std::invalid_argument("config: clahe.grid must be >= 1");
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
    auto real = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };
    std::map<std::string, std::string> m;
    m["dataset"] = dataset_tag_name(dataset);
    m["root"] = root;
    m["variant"] = variant_name(variant);
    m["seed"] = std::to_string(seed);
    m["out"] = out_dir;
    m["folds"] = std::to_string(folds);
    m["fov_metrics"] = fov_metrics ? "1" : "0";
    m["clahe.clip"] = real(clahe_clip);
    m["clahe.grid"] = std::to_string(clahe_grid);
    m["stage1.depth"] = std::to_string(stage1_net.depth);
    m["stage1.input"] = std::to_string(stage1_net.input_size);
    m["stage1.base"] = std::to_string(stage1_net.base_channels);
    m["stage1.lr"] = real(stage1.learning_rate);
    m["stage1.batch"] = std::to_string(stage1.batch_size);
    m["stage1.epochs"] = std::to_string(stage1.epochs);
    m["stage1.w_low"] = real(stage1.weight_sampler.low);
    m["stage1.w_high"] = real(stage1.weight_sampler.high);
    m["stage1.w_step"] = real(stage1.weight_sampler.step);
    m["stage1.augment"] = stage1.augment ? "1" : "0";
    m["stage1.max_train_tiles"] = std::to_string(stage1.max_train_tiles_per_image);
    m["stage1.max_val_tiles"] = std::to_string(stage1.max_val_tiles_per_image);
    m["stage2.input"] = std::to_string(stage2_net.input_size);
    m["stage2.base"] = std::to_string(stage2_net.base_channels);
    m["stage2.lr"] = real(stage2.learning_rate);
    m["stage2.batch"] = std::to_string(stage2.batch_size);
    m["stage2.epochs"] = std::to_string(stage2.epochs);
    m["stage2.b_low"] = real(stage2.weight_sampler.low);
    m["stage2.b_high"] = real(stage2.weight_sampler.high);
    m["stage2.b_step"] = real(stage2.weight_sampler.step);
    m["srs.support"] = std::to_string(srs.support);
    m["srs.resistance"] = std::to_string(srs.resistance);
    m["patch.p"] = std::to_string(patch.p);
    m["patch.context"] = std::to_string(patch.context);
    return m;
}

void ExperimentConfig::echo(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    for (const auto& [k, v] : to_map()) out << k << " = " << v << "\n";
}

}  // namespace vesselpipe
