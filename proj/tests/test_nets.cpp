#include <doctest.h>

#include <cmath>

#include "vesselpipe/geometry.hpp"
#include "vesselpipe/tiling.hpp"
#include "vesselpipe/unet.hpp"

using namespace vesselpipe;

namespace {

Tensor random_tensor(int c, int h, int w, Rng& rng) {
    Tensor t(c, h, w);
    for (auto& v : t.v) v = static_cast<float>(rng.uniform());
    return t;
}

// Scalar probe loss: L = sum(weights .* probs) with fixed random
// weights, so dL/dprobs is just the weight tensor.
double probe_loss(const Tensor& probs, const Tensor& weights) {
    double s = 0;
    for (size_t i = 0; i < probs.v.size(); ++i) s += double(probs.v[i]) * weights.v[i];
    return s;
}

}  // namespace

TEST_CASE("receptive geometry reproduces the published ledgers") {
    const UNetGeometry full = receptive_geometry(4, 572);
    CHECK(full.output_size == 388);
    CHECK(full.encoder_sizes == std::vector<int>{568, 280, 136, 64});
    CHECK(full.bottom_size == 28);
    CHECK(full.decoder_sizes == std::vector<int>{52, 100, 196, 388});
    CHECK(full.context_margin() == 92);

    const UNetGeometry mini = receptive_geometry(2, 140);
    CHECK(mini.output_size == 100);
    CHECK(mini.encoder_sizes == std::vector<int>{136, 64});
    CHECK(mini.bottom_size == 28);

    // Hand-traced small ledger: 20 -> 16 -> 8 -> 4 -up-> 8 -> 4.
    CHECK(receptive_geometry(1, 20).output_size == 4);
}

TEST_CASE("receptive geometry rejects inadmissible inputs naming the level") {
    CHECK_THROWS_WITH_AS(receptive_geometry(4, 571),
                         "receptive_geometry: encoder level 0 reaches odd size 567 before "
                         "pooling",
                         std::invalid_argument);
    // 16 -> 12 -> 6 -> 2, and the decoder block then collapses to zero.
    CHECK_THROWS_AS(receptive_geometry(1, 16), std::invalid_argument);
    CHECK_THROWS_AS(receptive_geometry(2, 20), std::invalid_argument);
    CHECK_THROWS_AS(receptive_geometry(0, 572), std::invalid_argument);
}

TEST_CASE("largest admissible input") {
    CHECK(largest_admissible_input(4, 572) == 572);
    CHECK(largest_admissible_input(4, 571) == 556);  // next ledger down shrinks by 16
    CHECK(largest_admissible_input(2, 140) == 140);
}

TEST_CASE("network output shapes follow the geometry") {
    Rng rng(1);

    UNet full(receptive_geometry(4, 572, 4), 1);
    full.init_params(rng);
    const Tensor out = full.forward(random_tensor(1, 572, 572, rng));
    CHECK(out.c == 2);
    CHECK(out.h == 388);
    CHECK(out.w == 388);

    UNet mini(receptive_geometry(2, 140, 4), 2);
    mini.init_params(rng);
    const Tensor mout = mini.forward(random_tensor(2, 140, 140, rng));
    CHECK(mout.c == 2);
    CHECK(mout.h == 100);
    CHECK(mout.w == 100);
}

TEST_CASE("softmax head produces normalized probabilities, even on zero input") {
    Rng rng(2);
    UNet mini(receptive_geometry(2, 140, 4), 2);
    mini.init_params(rng);
    const Tensor probs = mini.forward(Tensor(2, 140, 140, 0.0f));
    for (int y = 0; y < probs.h; ++y)
        for (int x = 0; x < probs.w; ++x) {
            const float q0 = probs.at(0, y, x), q1 = probs.at(1, y, x);
            CHECK(std::isfinite(q0));
            CHECK(std::isfinite(q1));
            CHECK(std::abs(1.0f - (q0 + q1)) < 1e-6f);
        }
}

TEST_CASE("inference is bit-deterministic") {
    Rng rng(3);
    UNet net(receptive_geometry(2, 92, 4), 1);
    net.init_params(rng);
    const Tensor in = random_tensor(1, 92, 92, rng);
    const Tensor a = net.forward(in);
    const Tensor b = net.forward(in);
    CHECK(a.v == b.v);
}

TEST_CASE("mini network has fewer parameters than the full one") {
    UNet full(receptive_geometry(4, 572, 64), 1);
    UNet mini(receptive_geometry(2, 140, 64), 2);
    CHECK(mini.param_count() < full.param_count());
    CHECK(full.param_count() > 30'000'000);  // the classic ladder is ~31M
}

TEST_CASE("whole-network analytic gradients match finite differences") {
    Rng rng(4);
    // depth 2, input 44 -> output 4 keeps the parameter count tiny.
    UNet net(receptive_geometry(2, 44, 2), 1);
    net.init_params(rng);
    const Tensor input = random_tensor(1, 44, 44, rng);
    Tensor weights = random_tensor(2, 4, 4, rng);
    for (auto& w : weights.v) w = w * 2.0f - 1.0f;

    net.zero_grads();
    net.forward(input);
    net.backward(weights);

    auto params = net.params();
    Rng pick(5);
    const float eps = 1e-2f;
    int checked = 0;
    for (auto& p : params) {
        for (int probe = 0; probe < 3; ++probe) {
            const size_t i = pick.uniform_index(p.count);
            const float saved = p.values[i];
            p.values[i] = saved + eps;
            const double up = probe_loss(net.forward(input), weights);
            p.values[i] = saved - eps;
            const double down = probe_loss(net.forward(input), weights);
            p.values[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = p.grads[i];
            // float32 forward noise bounds what a finite difference can
            // resolve; structural gradient bugs are orders off.
            const double tol = 3e-3 * std::max(1.0, std::abs(numeric));
            CHECK(std::abs(analytic - numeric) <= tol);
            ++checked;
        }
    }
    CHECK(checked >= 60);
}

TEST_CASE("parameter gradients accumulate across backward calls") {
    Rng rng(6);
    UNet net(receptive_geometry(1, 20, 2), 1);
    net.init_params(rng);
    Tensor input = random_tensor(1, 20, 20, rng);
    Tensor weights = random_tensor(2, 4, 4, rng);

    net.zero_grads();
    net.forward(input);
    net.backward(weights);
    net.forward(input);
    net.backward(weights);
    auto params = net.params();
    const float g_twice = params[0].grads[0];
    net.zero_grads();
    net.forward(input);
    net.backward(weights);
    CHECK(params[0].grads[0] == doctest::Approx(g_twice / 2).epsilon(1e-4));
}

TEST_CASE("tile plans cover the image exactly") {
    const UNetGeometry geom = receptive_geometry(4, 572);

    const TilePlan drive = tile_plan(584, 565, geom);
    CHECK(drive.tiles.size() == 4);  // ceil(584/388) * ceil(565/388)

    const TilePlan exact = tile_plan(388, 388, geom);
    CHECK(exact.tiles.size() == 1);
    CHECK(exact.tiles[0].mirrored);  // the 92px context leaves the image

    const TilePlan tiny = tile_plan(1, 1, geom);
    CHECK(tiny.tiles.size() == 1);

    for (const auto& [rows, cols] : std::vector<std::pair<int, int>>{
             {584, 565}, {605, 700}, {960, 999}, {388, 388}, {389, 777}, {1, 1}}) {
        const TilePlan plan = tile_plan(rows, cols, geom);
        Raster<std::int32_t> cover(rows, cols, 0);
        for (const Tile& t : plan.tiles) {
            CHECK(t.in_r0 == t.out_r0 - geom.context_margin());
            for (int r = t.out_r0; r < t.out_r1; ++r)
                for (int c = t.out_c0; c < t.out_c1; ++c) ++cover(r, c);
        }
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) CHECK(cover(r, c) == 1);
    }
}

TEST_CASE("mirror_extract reflects indices without duplicating the border") {
    ByteRaster ramp(6, 8);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 8; ++c) ramp(r, c) = static_cast<std::uint8_t>(10 * r + c);

    // Interior window is an exact crop.
    const ByteRaster crop = mirror_extract(ramp, 1, 2, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(crop(r, c) == ramp(r + 1, c + 2));

    // Window 3 columns past the left edge mirrors columns 1..3.
    const ByteRaster left = mirror_extract(ramp, 0, -3, 6);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            CHECK(left(r, c) == ramp(reflect_index(r, 6), reflect_index(c - 3, 8)));

    // Extraction of a symmetric image commutes with its own mirror.
    ByteRaster sym(5, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) sym(r, c) = static_cast<std::uint8_t>((r - 2) * (r - 2) + (c - 2) * (c - 2));
    const ByteRaster a = mirror_extract(sym, -2, -2, 9);
    const ByteRaster b = flip_horizontal(flip_vertical(a));
    CHECK(a == b);

    CHECK_THROWS_AS(mirror_extract(ramp, -10, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(mirror_extract(ramp, 0, 8, 4), std::invalid_argument);
}
