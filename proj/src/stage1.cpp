#include "vesselpipe/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "vesselpipe/adam.hpp"
#include "vesselpipe/tiling.hpp"

namespace vesselpipe {
namespace {

constexpr double kLogFloor = 1e-12;

struct PixelCounts {
    std::int64_t tp = 0, fp = 0, fn = 0;

    void add(bool predicted, bool actual) {
        if (predicted && actual) ++tp;
        else if (predicted && !actual) ++fp;
        else if (!predicted && actual) ++fn;
    }
    double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
    double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
};

struct PreparedImage {
    FloatRaster intensity;  // green / 255
    const ByteRaster* gt = nullptr;
    const ByteRaster* fov = nullptr;
};

FloatRaster to_unit_interval(const ByteRaster& raster) {
    FloatRaster out(raster.rows(), raster.cols());
    for (int r = 0; r < raster.rows(); ++r)
        for (int c = 0; c < raster.cols(); ++c) out(r, c) = raster(r, c) / 255.0f;
    return out;
}

Tensor tile_input(const FloatRaster& intensity, const Tile& tile, int input_size) {
    FloatRaster window = mirror_extract(intensity, tile.in_r0, tile.in_c0, input_size);
    Tensor in(1, input_size, input_size);
    std::memcpy(in.plane(0), window.data(), sizeof(float) * window.size());
    return in;
}

std::vector<int> select_tiles(size_t n_tiles, int max_tiles, Rng rng) {
    std::vector<int> idx(n_tiles);
    for (size_t i = 0; i < n_tiles; ++i) idx[i] = static_cast<int>(i);
    if (max_tiles <= 0 || static_cast<size_t>(max_tiles) >= n_tiles) return idx;
    for (size_t i = n_tiles; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    idx.resize(max_tiles);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    weight_sampler.validate();
    if (fixed_weights) fixed_weights->validate();
}

double EpochRecord::val_f1() const {
    const double s = val_precision + val_recall;
    return s == 0.0 ? 0.0 : 2.0 * val_precision * val_recall / s;
}

void TrainTrace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,train_loss,train_P,train_R,val_P,val_R,w_bg,w_vessel\n";
    for (const auto& rec : records) {
        const double wb = rec.drawn_weights.empty() ? 0.0 : rec.drawn_weights.front().w_background;
        const double wv = rec.drawn_weights.empty() ? 0.0 : rec.drawn_weights.front().w_vessel;
        out << rec.epoch << ',' << rec.train_loss << ',' << rec.train_precision << ','
            << rec.train_recall << ',' << rec.val_precision << ',' << rec.val_recall << ',' << wb
            << ',' << wv << '\n';
    }
}

void TrainTrace::write_draws_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,batch,w_bg,w_vessel\n";
    for (const auto& rec : records)
        for (const auto& d : rec.drawn_weights)
            out << d.epoch << ',' << d.batch << ',' << d.w_background << ',' << d.w_vessel << '\n';
}

ParamSnapshot snapshot_params(UNet& net) {
    ParamSnapshot s;
    for (const auto& p : net.params())
        s.values.insert(s.values.end(), p.values, p.values + p.count);
    return s;
}

void restore_params(UNet& net, const ParamSnapshot& snapshot) {
    size_t offset = 0;
    for (const auto& p : net.params()) {
        if (offset + p.count > snapshot.values.size())
            throw std::invalid_argument("restore_params: snapshot too small");
        std::memcpy(p.values, snapshot.values.data() + offset, sizeof(float) * p.count);
        offset += p.count;
    }
    if (offset != snapshot.values.size())
        throw std::invalid_argument("restore_params: snapshot size mismatch");
}

std::unique_ptr<UNet> Stage1Result::materialize_best() const {
    auto net = std::make_unique<UNet>(geometry, in_channels);
    restore_params(*net, best_params);
    return net;
}

std::unique_ptr<UNet> Stage1Result::materialize_final() const {
    auto net = std::make_unique<UNet>(geometry, in_channels);
    restore_params(*net, final_params);
    return net;
}

Stage1Result train_stage1(const std::vector<FundusSample>& train,
                          const std::vector<FundusSample>& val, const UNetGeometry& geometry,
                          const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("train_stage1: empty training set");
    for (const auto& s : train)
        if (!s.has_gt())
            throw std::invalid_argument("train_stage1: sample without ground truth: " + s.id);
    for (const auto& s : val)
        if (!s.has_gt())
            throw std::invalid_argument("train_stage1: validation sample without ground truth: " +
                                        s.id);
    for (const auto& s : train)
        if (s.green.empty())
            throw std::invalid_argument("train_stage1: sample not preprocessed: " + s.id);

    UNet net(geometry, 1);
    {
        Rng init_rng = Rng::derive(cfg.seed, {0x696e6974});  // "init"
        net.init_params(init_rng);
    }
    Adam adam(cfg.learning_rate);

    const int out = geometry.output_size;
    const int in_size = geometry.input_size;

    // Tile plans are dimension-only, so they are stable across epochs.
    std::vector<TilePlan> train_plans, val_plans;
    for (const auto& s : train) train_plans.push_back(tile_plan(s.rows(), s.cols(), geometry));
    for (const auto& s : val) val_plans.push_back(tile_plan(s.rows(), s.cols(), geometry));

    Stage1Result result;
    result.geometry = geometry;
    result.in_channels = 1;

    double best_f1 = -1.0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;

        // Per-epoch augmented copies of the training images.
        std::vector<PreparedImage> prepared(train.size());
        std::vector<FundusSample> flipped(train.size());
        for (size_t i = 0; i < train.size(); ++i) {
            if (cfg.augment) {
                Rng flip_rng = Rng::derive(cfg.seed, {0x666c6970, std::uint64_t(epoch), i});
                flipped[i] = random_flip(train[i], flip_rng);
            } else {
                flipped[i] = train[i];
            }
            prepared[i].intensity = to_unit_interval(flipped[i].green);
            prepared[i].gt = &*flipped[i].gt;
            prepared[i].fov = &flipped[i].fov();
        }

        // Work list of (image, tile) pairs, optionally thinned per image,
        // then shuffled.
        std::vector<std::pair<int, int>> work;
        for (size_t i = 0; i < train.size(); ++i) {
            Rng pick = Rng::derive(cfg.seed, {0x74696c65, std::uint64_t(epoch), i});
            for (int t : select_tiles(train_plans[i].tiles.size(), cfg.max_train_tiles_per_image,
                                      pick))
                work.emplace_back(static_cast<int>(i), t);
        }
        {
            Rng order = Rng::derive(cfg.seed, {0x6f726465, std::uint64_t(epoch)});
            for (size_t i = work.size(); i > 1; --i)
                std::swap(work[i - 1], work[order.uniform_index(i)]);
        }

        PixelCounts train_counts;
        double loss_sum = 0.0;
        int batches = 0;

        for (size_t begin = 0; begin < work.size(); begin += cfg.batch_size) {
            const size_t end = std::min(work.size(), begin + cfg.batch_size);
            const int batch_index = static_cast<int>(begin / cfg.batch_size);

            ClassWeights weights;
            if (cfg.fixed_weights) {
                weights = *cfg.fixed_weights;
            } else {
                Rng wrng = Rng::derive(cfg.seed,
                                       {0x77647261, std::uint64_t(epoch), std::uint64_t(batch_index)});
                weights.background = sample_weight(cfg.weight_sampler, wrng);
                weights.vessel = sample_weight(cfg.weight_sampler, wrng);
            }
            rec.drawn_weights.push_back({epoch, batch_index, weights.background, weights.vessel});

            // The loss is the mean over every valid pixel in the batch,
            // so count them before running the tiles.
            std::int64_t total_valid = 0;
            for (size_t j = begin; j < end; ++j) {
                const auto& [img, tix] = work[j];
                const Tile& tile = train_plans[img].tiles[tix];
                const auto& prep = prepared[img];
                for (int y = tile.out_r0; y < tile.out_r1; ++y)
                    for (int x = tile.out_c0; x < tile.out_c1; ++x)
                        if ((*prep.fov)(y, x)) ++total_valid;
            }
            if (total_valid == 0) continue;
            const double inv_n = 1.0 / static_cast<double>(total_valid);

            double batch_loss = 0.0;
            for (size_t j = begin; j < end; ++j) {
                const auto& [img, tix] = work[j];
                const Tile& tile = train_plans[img].tiles[tix];
                const auto& prep = prepared[img];

                Tensor input = tile_input(prep.intensity, tile, in_size);
                Tensor probs = net.forward(input);

                Tensor d_probs(2, out, out);
                const float* qb = probs.plane(0);
                const float* qv = probs.plane(1);
                float* db = d_probs.plane(0);
                float* dv = d_probs.plane(1);
                for (int y = 0; y < out; ++y) {
                    const int gy = tile.out_r0 + y;
                    if (gy >= tile.out_r1) break;
                    for (int x = 0; x < out; ++x) {
                        const int gx = tile.out_c0 + x;
                        if (gx >= tile.out_c1) break;
                        if (!(*prep.fov)(gy, gx)) continue;
                        const bool vessel = (*prep.gt)(gy, gx) != 0;
                        const size_t k = static_cast<size_t>(y) * out + x;
                        const double q = vessel ? qv[k] : qb[k];
                        const double w = vessel ? weights.vessel : weights.background;
                        batch_loss += -w * std::log(std::max(q, kLogFloor)) * inv_n;
                        if (q > kLogFloor) {
                            const float g = static_cast<float>(-w * inv_n / q);
                            (vessel ? dv : db)[k] = g;
                        }
                        train_counts.add(qv[k] > 0.5f, vessel);
                    }
                }
                net.backward(d_probs);
            }

            if (!std::isfinite(batch_loss))
                throw std::runtime_error(
                    "train_stage1: non-finite loss at epoch " + std::to_string(epoch) +
                    " batch " + std::to_string(batch_index) + " (weights " +
                    std::to_string(weights.background) + "," + std::to_string(weights.vessel) +
                    ")");

            adam.step(net.params());
            net.zero_grads();
            loss_sum += batch_loss;
            ++batches;
        }

        rec.train_loss = batches > 0 ? loss_sum / batches : 0.0;
        rec.train_precision = train_counts.precision();
        rec.train_recall = train_counts.recall();

        // Validation metrics: pooled pixel counts at threshold 0.5.
        PixelCounts val_counts;
        for (size_t i = 0; i < val.size(); ++i) {
            const auto& sample = val[i];
            const FloatRaster intensity = to_unit_interval(sample.green);
            const ByteRaster& fov = sample.fov();
            const ByteRaster& gt = *sample.gt;
            Rng pick = Rng::derive(cfg.seed, {0x7674696c, i});
            for (int t :
                 select_tiles(val_plans[i].tiles.size(), cfg.max_val_tiles_per_image, pick)) {
                const Tile& tile = val_plans[i].tiles[t];
                Tensor probs = net.forward(tile_input(intensity, tile, in_size));
                const float* qv = probs.plane(1);
                for (int y = 0; y < tile.out_rows(); ++y)
                    for (int x = 0; x < tile.out_cols(); ++x) {
                        const int gy = tile.out_r0 + y, gx = tile.out_c0 + x;
                        if (!fov(gy, gx)) continue;
                        val_counts.add(qv[static_cast<size_t>(y) * out + x] > 0.5f,
                                       gt(gy, gx) != 0);
                    }
            }
        }
        net.release_state();
        rec.val_precision = val_counts.precision();
        rec.val_recall = val_counts.recall();

        if (!val.empty() && rec.val_f1() > best_f1) {
            best_f1 = rec.val_f1();
            result.best_params = snapshot_params(net);
            result.best_epoch = epoch;
        }
        result.trace.records.push_back(std::move(rec));
    }

    result.final_params = snapshot_params(net);
    if (result.best_params.values.empty()) {
        result.best_params = result.final_params;
        result.best_epoch = cfg.epochs;
    }
    return result;
}

LikelihoodMap infer_likelihood(UNet& net, const FundusSample& sample) {
    if (net.in_channels() != 1)
        throw std::invalid_argument("infer_likelihood: checkpoint expects " +
                                    std::to_string(net.in_channels()) + " channels, need 1");
    if (sample.green.empty())
        throw std::invalid_argument("infer_likelihood: sample not preprocessed: " + sample.id);

    const UNetGeometry& geometry = net.geometry();
    const FloatRaster intensity = to_unit_interval(sample.green);
    const TilePlan plan = tile_plan(sample.rows(), sample.cols(), geometry);

    LikelihoodMap map;
    map.source_id = sample.id;
    map.values = ByteRaster(sample.rows(), sample.cols());

    const int out = geometry.output_size;
    for (const Tile& tile : plan.tiles) {
        Tensor probs = net.forward(tile_input(intensity, tile, geometry.input_size));
        const float* qv = probs.plane(1);
        for (int y = 0; y < tile.out_rows(); ++y) {
            for (int x = 0; x < tile.out_cols(); ++x) {
                const float p = qv[static_cast<size_t>(y) * out + x];
                const int quantized = static_cast<int>(std::floor(p * 255.0f + 0.5f));
                map.values(tile.out_r0 + y, tile.out_c0 + x) =
                    static_cast<std::uint8_t>(std::clamp(quantized, 0, 255));
            }
        }
    }
    net.release_state();
    return map;
}

}  // namespace vesselpipe
