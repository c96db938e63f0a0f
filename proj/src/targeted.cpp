#include "vesselpipe/targeted.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "vesselpipe/adam.hpp"
#include "vesselpipe/tiling.hpp"

namespace vesselpipe {
namespace {

constexpr double kFBetaEps = 1e-7;

struct SoftSums {
    double intersection = 0.0;
    double predicted = 0.0;
    double actual = 0.0;
};

}  // namespace

void PatchGeometry::validate() const {
    if (p < 4) throw std::invalid_argument("PatchGeometry: prediction window too small");
    if (context <= p) throw std::invalid_argument("PatchGeometry: context must exceed p");
    if (lattice_spacing != p / 2)
        throw std::invalid_argument("PatchGeometry: lattice_spacing must equal p/2");
}

void PatchGeometry::validate_against(const UNetGeometry& geometry) const {
    validate();
    if (geometry.input_size != context || geometry.output_size != p)
        throw std::invalid_argument(
            "PatchGeometry: (context, p) = (" + std::to_string(context) + "," +
            std::to_string(p) + ") does not match network (" +
            std::to_string(geometry.input_size) + "," + std::to_string(geometry.output_size) +
            ")");
}

ByteRaster raw_estimate(const ByteRaster& likelihood, int support) {
    if (support < 0 || support > 255)
        throw std::invalid_argument("raw_estimate: support outside [0,255]");
    ByteRaster out(likelihood.rows(), likelihood.cols());
    for (int r = 0; r < likelihood.rows(); ++r)
        for (int c = 0; c < likelihood.cols(); ++c)
            out(r, c) = likelihood(r, c) >= support ? 1 : 0;
    return out;
}

SeedSet lattice_seeds(const ByteRaster& skeleton, const PatchGeometry& geometry,
                      const SRSPartition& partition) {
    geometry.validate();
    if (!skeleton.same_shape(partition.labels))
        throw std::invalid_argument("lattice_seeds: skeleton/partition shape mismatch");

    const int rows = skeleton.rows(), cols = skeleton.cols();
    const int spacing = geometry.lattice_spacing;
    const int dedup = geometry.p / 4;

    SeedSet set;
    set.geometry = geometry;

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!skeleton(r, c)) continue;
            if (r % spacing != 0 && c % spacing != 0) continue;
            bool keep = true;
            for (const auto& [sr, sc] : set.seeds) {
                if (std::max(std::abs(sr - r), std::abs(sc - c)) < dedup) {
                    keep = false;
                    break;
                }
            }
            if (keep) set.seeds.emplace_back(r, c);
        }
    }

    // Coverage repair: one forward scan; every ambiguous pixel behind the
    // cursor is covered, so appending a window at the first uncovered one
    // keeps the pass linear.
    ByteRaster covered(rows, cols, 0);
    auto mark = [&](int sr, int sc) {
        const int r0 = std::max(0, sr - geometry.p / 2);
        const int c0 = std::max(0, sc - geometry.p / 2);
        const int r1 = std::min(rows, sr - geometry.p / 2 + geometry.p);
        const int c1 = std::min(cols, sc - geometry.p / 2 + geometry.p);
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) covered(r, c) = 1;
    };
    for (const auto& [sr, sc] : set.seeds) mark(sr, sc);

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!partition.is(r, c, SRSLabel::AMBIG) || covered(r, c)) continue;
            set.seeds.emplace_back(r, c);
            mark(r, c);
        }
    }
    return set;
}

TwoChannelPatch extract_patch(const LikelihoodMap& map, const SRSPartition& partition,
                              std::pair<int, int> seed, const PatchGeometry& geometry,
                              const ByteRaster* gt) {
    geometry.validate();
    const auto [sr, sc] = seed;
    if (sr < 0 || sr >= map.values.rows() || sc < 0 || sc >= map.values.cols())
        throw std::invalid_argument("extract_patch: seed outside image");

    const int half_ctx = geometry.context / 2;
    const int r0 = sr - half_ctx, c0 = sc - half_ctx;

    const ByteRaster window = mirror_extract(map.values, r0, c0, geometry.context);
    const ByteRaster labels = mirror_extract(partition.labels, r0, c0, geometry.context);

    TwoChannelPatch patch;
    patch.seed = seed;
    patch.likelihood = FloatRaster(geometry.context, geometry.context);
    patch.ambiguous = FloatRaster(geometry.context, geometry.context);
    for (int r = 0; r < geometry.context; ++r) {
        for (int c = 0; c < geometry.context; ++c) {
            const float v = window(r, c) / 255.0f;
            patch.likelihood(r, c) = v;
            patch.ambiguous(r, c) =
                labels(r, c) == static_cast<std::uint8_t>(SRSLabel::AMBIG) ? v : 0.0f;
        }
    }

    const int off = (geometry.context - geometry.p) / 2;
    patch.ambig_mask = ByteRaster(geometry.p, geometry.p);
    for (int r = 0; r < geometry.p; ++r)
        for (int c = 0; c < geometry.p; ++c)
            patch.ambig_mask(r, c) =
                labels(r + off, c + off) == static_cast<std::uint8_t>(SRSLabel::AMBIG) ? 1 : 0;

    if (gt) {
        const ByteRaster gt_ctx = mirror_extract(*gt, r0, c0, geometry.context);
        ByteRaster w(geometry.p, geometry.p);
        for (int r = 0; r < geometry.p; ++r)
            for (int c = 0; c < geometry.p; ++c) w(r, c) = gt_ctx(r + off, c + off);
        patch.gt_window = std::move(w);
    }
    return patch;
}

Tensor TwoChannelPatch::to_tensor() const {
    Tensor t(2, likelihood.rows(), likelihood.cols());
    std::memcpy(t.plane(0), likelihood.data(), sizeof(float) * likelihood.size());
    std::memcpy(t.plane(1), ambiguous.data(), sizeof(float) * ambiguous.size());
    return t;
}

std::unique_ptr<UNet> Stage2Result::materialize() const {
    auto net = std::make_unique<UNet>(geometry, 2);
    restore_params(*net, params);
    return net;
}

Stage2Result train_stage2(const std::vector<TwoChannelPatch>& patches,
                          const UNetGeometry& geometry, const TrainConfig& cfg) {
    cfg.validate();
    if (patches.empty()) throw std::runtime_error("stage 2 has no training data");
    for (const auto& p : patches)
        if (!p.gt_window)
            throw std::invalid_argument("train_stage2: patch without ground truth window");

    UNet net(geometry, 2);
    {
        Rng init_rng = Rng::derive(cfg.seed, {0x7332696e});
        net.init_params(init_rng);
    }
    Adam adam(cfg.learning_rate);

    const int p = geometry.output_size;
    const size_t window = static_cast<size_t>(p) * p;

    Stage2Result result;
    result.geometry = geometry;

    std::vector<size_t> order(patches.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        {
            Rng shuffle = Rng::derive(cfg.seed, {0x73326f72, std::uint64_t(epoch)});
            for (size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
        }

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const size_t end = std::min(order.size(), begin + cfg.batch_size);
            const int batch_index = static_cast<int>(begin / cfg.batch_size);

            Rng brng =
                Rng::derive(cfg.seed, {0x62647261, std::uint64_t(epoch), std::uint64_t(batch_index)});
            const double beta = sample_weight(cfg.weight_sampler, brng);
            result.drawn_betas.push_back(beta);
            const double b2 = beta * beta;

            // The soft F-beta couples every pixel of the batch, so run
            // one pass for the batch sums and a second for gradients.
            SoftSums sums;
            for (size_t j = begin; j < end; ++j) {
                const auto& patch = patches[order[j]];
                Tensor probs = net.forward(patch.to_tensor());
                const float* qv = probs.plane(1);
                const ByteRaster& gt = *patch.gt_window;
                for (size_t k = 0; k < window; ++k) {
                    const double t = gt.data()[k];
                    sums.intersection += qv[k] * t;
                    sums.predicted += qv[k];
                    sums.actual += t;
                }
            }
            const double qsum = sums.predicted + kFBetaEps;
            const double tsum = sums.actual + kFBetaEps;
            const double precision = sums.intersection / qsum;
            const double recall = sums.intersection / tsum;
            const double denom = b2 * precision + recall + kFBetaEps;
            const double fbeta = (1.0 + b2) * precision * recall / denom;
            const double loss = 1.0 - fbeta;
            if (!std::isfinite(loss))
                throw std::runtime_error("train_stage2: non-finite loss at epoch " +
                                         std::to_string(epoch) + " (beta " +
                                         std::to_string(beta) + ")");
            const double dF_dP = (1.0 + b2) * recall * (recall + kFBetaEps) / (denom * denom);
            const double dF_dR = (1.0 + b2) * precision * (b2 * precision + kFBetaEps) /
                                 (denom * denom);

            for (size_t j = begin; j < end; ++j) {
                const auto& patch = patches[order[j]];
                net.forward(patch.to_tensor());
                Tensor d_probs(2, p, p);
                float* dv = d_probs.plane(1);
                const ByteRaster& gt = *patch.gt_window;
                for (size_t k = 0; k < window; ++k) {
                    const double t = gt.data()[k];
                    const double dP = (t * qsum - sums.intersection) / (qsum * qsum);
                    const double dR = t / tsum;
                    dv[k] = static_cast<float>(-(dF_dP * dP + dF_dR * dR));
                }
                net.backward(d_probs);
            }

            adam.step(net.params());
            net.zero_grads();
            epoch_loss += loss;
            ++batches;
        }
        result.epoch_loss.push_back(batches > 0 ? epoch_loss / batches : 0.0);
    }

    result.params = snapshot_params(net);
    return result;
}

FloatRaster predict_ambiguous(UNet& net, const std::vector<TwoChannelPatch>& patches,
                              const SRSPartition& partition) {
    const int rows = partition.labels.rows(), cols = partition.labels.cols();
    const int p = net.geometry().output_size;
    if (net.in_channels() != 2)
        throw std::invalid_argument("predict_ambiguous: checkpoint expects two input channels");

    FloatRaster sum(rows, cols, 0.0f);
    Raster<std::int32_t> count(rows, cols, 0);
    for (const auto& patch : patches) {
        if (patch.likelihood.rows() != net.geometry().input_size)
            throw std::invalid_argument("predict_ambiguous: patch/network geometry mismatch");
        Tensor probs = net.forward(patch.to_tensor());
        const float* qv = probs.plane(1);
        const int r0 = patch.seed.first - p / 2;
        const int c0 = patch.seed.second - p / 2;
        for (int y = 0; y < p; ++y) {
            const int gy = r0 + y;
            if (gy < 0 || gy >= rows) continue;
            for (int x = 0; x < p; ++x) {
                const int gx = c0 + x;
                if (gx < 0 || gx >= cols) continue;
                sum(gy, gx) += qv[static_cast<size_t>(y) * p + x];
                ++count(gy, gx);
            }
        }
    }
    net.release_state();

    FloatRaster out(rows, cols, -1.0f);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (partition.is(r, c, SRSLabel::AMBIG) && count(r, c) > 0)
                out(r, c) = sum(r, c) / count(r, c);
    return out;
}

ByteRaster merge_segmentation(const SRSPartition& partition, const FloatRaster* ambig_probs) {
    const int rows = partition.labels.rows(), cols = partition.labels.cols();
    if (ambig_probs && (ambig_probs->rows() != rows || ambig_probs->cols() != cols))
        throw std::invalid_argument("merge_segmentation: probability raster shape mismatch");

    ByteRaster seg(rows, cols, 0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (partition.is(r, c, SRSLabel::VESSEL_EASY)) {
                seg(r, c) = 1;
            } else if (partition.is(r, c, SRSLabel::AMBIG)) {
                if (!ambig_probs) continue;  // stage 2 skipped: background
                const float q = (*ambig_probs)(r, c);
                if (q < 0.0f)
                    throw std::logic_error("merge_segmentation: ambiguous pixel (" +
                                           std::to_string(r) + "," + std::to_string(c) +
                                           ") has no prediction");
                seg(r, c) = q > 0.5f ? 1 : 0;
            }
        }
    }
    return seg;
}

}  // namespace vesselpipe
