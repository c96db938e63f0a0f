#include <doctest.h>

#include <algorithm>
#include <set>

#include "vesselpipe/rng.hpp"
#include "vesselpipe/targeted.hpp"
#include "vesselpipe/tiling.hpp"

using namespace vesselpipe;

namespace {

// Small but valid patch geometry for fast tests: the depth-2 ledger
// 60 -> 20 means context 60, p 20, spacing 10.
PatchGeometry small_geometry() {
    PatchGeometry g;
    g.p = 20;
    g.context = 60;
    g.lattice_spacing = 10;
    return g;
}

SRSPartition all_ambig(int rows, int cols) {
    SRSPartition p;
    p.config = {20, 235};
    p.labels = Raster<std::uint8_t>(rows, cols, static_cast<std::uint8_t>(SRSLabel::AMBIG));
    return p;
}

SRSPartition no_ambig(int rows, int cols) {
    SRSPartition p;
    p.config = {20, 235};
    p.labels = Raster<std::uint8_t>(rows, cols, static_cast<std::uint8_t>(SRSLabel::BG_EASY));
    return p;
}

bool covered_by(const SeedSet& seeds, int r, int c) {
    const int p = seeds.geometry.p;
    for (const auto& [sr, sc] : seeds.seeds) {
        const int r0 = sr - p / 2, c0 = sc - p / 2;
        if (r >= r0 && r < r0 + p && c >= c0 && c < c0 + p) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("raw estimate thresholds at support") {
    ByteRaster map(2, 2, 0);
    CHECK(raw_estimate(map, 20) == ByteRaster(2, 2, 0));

    ByteRaster gtmap(2, 2);
    gtmap(0, 0) = 255;
    gtmap(0, 1) = 0;
    gtmap(1, 0) = 20;   // exactly support counts as vessel
    gtmap(1, 1) = 19;
    const ByteRaster est = raw_estimate(gtmap, 20);
    CHECK(est(0, 0) == 1);
    CHECK(est(0, 1) == 0);
    CHECK(est(1, 0) == 1);
    CHECK(est(1, 1) == 0);

    // Threshold monotonicity: recall can only drop as support rises.
    Rng rng(3);
    ByteRaster noisy(32, 32);
    ByteRaster gt(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) {
            noisy(r, c) = static_cast<std::uint8_t>(rng.uniform_index(256));
            gt(r, c) = rng.coin() ? 1 : 0;
        }
    auto recall_at = [&](int support) {
        const ByteRaster est2 = raw_estimate(noisy, support);
        int tp = 0, fn = 0;
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c) {
                if (!gt(r, c)) continue;
                (est2(r, c) ? tp : fn)++;
            }
        return double(tp) / (tp + fn);
    };
    CHECK(recall_at(20) >= recall_at(128));
}

TEST_CASE("patch geometry validation") {
    PatchGeometry g;  // defaults 100/140/50
    CHECK_NOTHROW(g.validate());
    g.lattice_spacing = 49;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = PatchGeometry{};
    g.context = 100;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);

    PatchGeometry mini;
    CHECK_NOTHROW(mini.validate_against(receptive_geometry(2, 140)));
    CHECK_THROWS_AS(mini.validate_against(receptive_geometry(2, 148)),
                    std::invalid_argument);
}

TEST_CASE("lattice seeds: brute-force enumeration oracle on a diagonal skeleton") {
    const PatchGeometry g = small_geometry();
    const int n = 200;
    ByteRaster skeleton(n, n, 0);
    for (int i = 0; i < n; ++i) skeleton(i, i) = 1;
    const SRSPartition part = no_ambig(n, n);  // no repair seeds

    const SeedSet seeds = lattice_seeds(skeleton, g, part);

    // Oracle: row-major enumeration of skeleton-lattice intersections
    // with the same greedy Chebyshev dedup.
    std::vector<std::pair<int, int>> expected;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (!skeleton(r, c)) continue;
            if (r % g.lattice_spacing != 0 && c % g.lattice_spacing != 0) continue;
            bool keep = true;
            for (const auto& [sr, sc] : expected)
                if (std::max(std::abs(sr - r), std::abs(sc - c)) < g.p / 4) keep = false;
            if (keep) expected.emplace_back(r, c);
        }
    }
    CHECK(seeds.seeds == expected);
    CHECK(!seeds.seeds.empty());
    // Diagonal pixels on the lattice are exactly the multiples of the
    // spacing; dedup at Chebyshev p/4 = 5 keeps all of them.
    CHECK(seeds.seeds.size() == n / g.lattice_spacing);
}

TEST_CASE("lattice seeds: no ambiguity and an empty skeleton give no seeds") {
    const PatchGeometry g = small_geometry();
    const ByteRaster empty_skeleton(64, 64, 0);
    const SeedSet seeds = lattice_seeds(empty_skeleton, g, no_ambig(64, 64));
    CHECK(seeds.seeds.empty());
}

TEST_CASE("lattice seeds: one far-away ambiguous pixel gets exactly one repair seed") {
    const PatchGeometry g = small_geometry();
    ByteRaster skeleton(100, 100, 0);
    skeleton(0, 0) = 1;  // on the lattice
    SRSPartition part = no_ambig(100, 100);
    part.labels(80, 90) = static_cast<std::uint8_t>(SRSLabel::AMBIG);

    const SeedSet seeds = lattice_seeds(skeleton, g, part);
    REQUIRE(seeds.seeds.size() == 2);
    CHECK(seeds.seeds[0] == std::pair<int, int>(0, 0));
    CHECK(seeds.seeds[1] == std::pair<int, int>(80, 90));
}

TEST_CASE("lattice seeds cover every ambiguous pixel") {
    const PatchGeometry g = small_geometry();
    Rng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        const int rows = 90 + static_cast<int>(rng.uniform_index(80));
        const int cols = 90 + static_cast<int>(rng.uniform_index(80));
        ByteRaster skeleton(rows, cols, 0);
        for (int i = 0; i < 60; ++i)
            skeleton(rng.uniform_index(rows), rng.uniform_index(cols)) = 1;
        SRSPartition part = no_ambig(rows, cols);
        for (int i = 0; i < 500; ++i)
            part.labels(rng.uniform_index(rows), rng.uniform_index(cols)) =
                static_cast<std::uint8_t>(SRSLabel::AMBIG);

        const SeedSet seeds = lattice_seeds(skeleton, g, part);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (part.is(r, c, SRSLabel::AMBIG)) CHECK(covered_by(seeds, r, c));
    }
}

TEST_CASE("extract_patch builds the two channels and windows") {
    const PatchGeometry g = small_geometry();
    const int n = 120;
    LikelihoodMap map;
    map.source_id = "t";
    map.values = ByteRaster(n, n);
    Rng rng(4);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) map.values(r, c) = static_cast<std::uint8_t>(rng.uniform_index(256));

    SRSPartition part = srs_partition(map.values, {20, 235});
    ByteRaster gt(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) gt(r, c) = rng.coin() ? 1 : 0;

    SUBCASE("interior seed is a plain crop") {
        const TwoChannelPatch patch = extract_patch(map, part, {60, 60}, g, &gt);
        const int r0 = 60 - g.context / 2, c0 = 60 - g.context / 2;
        for (int r = 0; r < g.context; ++r)
            for (int c = 0; c < g.context; ++c) {
                const float expected = map.values(r0 + r, c0 + c) / 255.0f;
                CHECK(patch.likelihood(r, c) == expected);
                const bool ambig = part.is(r0 + r, c0 + c, SRSLabel::AMBIG);
                CHECK(patch.ambiguous(r, c) == (ambig ? expected : 0.0f));
            }
        const int off = (g.context - g.p) / 2;
        for (int r = 0; r < g.p; ++r)
            for (int c = 0; c < g.p; ++c) {
                CHECK(patch.ambig_mask(r, c) ==
                      (part.is(r0 + off + r, c0 + off + c, SRSLabel::AMBIG) ? 1 : 0));
                CHECK((*patch.gt_window)(r, c) == gt(r0 + off + r, c0 + off + c));
            }
    }

    SUBCASE("window without ambiguous pixels zeroes channel two") {
        SRSPartition none = no_ambig(n, n);
        const TwoChannelPatch patch = extract_patch(map, none, {60, 60}, g);
        for (int r = 0; r < g.context; ++r)
            for (int c = 0; c < g.context; ++c) CHECK(patch.ambiguous(r, c) == 0.0f);
        CHECK(!patch.gt_window.has_value());
    }

    SUBCASE("seed near the left edge mirrors columns") {
        const TwoChannelPatch patch = extract_patch(map, part, {60, 10}, g);
        const int r0 = 60 - g.context / 2, c0 = 10 - g.context / 2;  // c0 = -20
        for (int r = 0; r < g.context; ++r)
            for (int c = 0; c < g.context; ++c) {
                const int sr = reflect_index(r0 + r, n), sc = reflect_index(c0 + c, n);
                CHECK(patch.likelihood(r, c) == map.values(sr, sc) / 255.0f);
            }
    }

    SUBCASE("seed outside the image is an error") {
        CHECK_THROWS_AS(extract_patch(map, part, {-1, 5}, g), std::invalid_argument);
        CHECK_THROWS_AS(extract_patch(map, part, {5, n}, g), std::invalid_argument);
    }
}

TEST_CASE("predict_ambiguous averages overlapping patches") {
    const PatchGeometry g = small_geometry();
    const UNetGeometry net_geom = receptive_geometry(2, g.context, 2);
    UNet net(net_geom, 2);
    Rng rng(5);
    net.init_params(rng);

    const int n = 80;
    LikelihoodMap map;
    map.values = ByteRaster(n, n, 130);
    SRSPartition part = all_ambig(n, n);

    const TwoChannelPatch middle = extract_patch(map, part, {40, 40}, g);

    SUBCASE("single patch passes its probabilities through") {
        const FloatRaster probs = predict_ambiguous(net, {middle}, part);
        Tensor out = net.forward(middle.to_tensor());
        const float* qv = out.plane(1);
        const int r0 = 40 - g.p / 2, c0 = 40 - g.p / 2;
        for (int r = 0; r < g.p; ++r)
            for (int c = 0; c < g.p; ++c)
                CHECK(probs(r0 + r, c0 + c) ==
                      doctest::Approx(qv[r * g.p + c]).epsilon(1e-6));
        // Pixels outside every window keep the sentinel.
        CHECK(probs(0, 0) == -1.0f);
    }

    SUBCASE("two identical patches average to the same value") {
        const FloatRaster one = predict_ambiguous(net, {middle}, part);
        const FloatRaster two = predict_ambiguous(net, {middle, middle}, part);
        CHECK(two(40, 40) == doctest::Approx(one(40, 40)).epsilon(1e-6));
    }

    SUBCASE("patch order does not matter") {
        const TwoChannelPatch other = extract_patch(map, part, {45, 45}, g);
        const FloatRaster ab = predict_ambiguous(net, {middle, other}, part);
        const FloatRaster ba = predict_ambiguous(net, {other, middle}, part);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                CHECK(ab(r, c) == doctest::Approx(ba(r, c)).epsilon(1e-6));
    }
}

TEST_CASE("merge rules") {
    SRSPartition part;
    part.config = {20, 235};
    part.labels = Raster<std::uint8_t>(1, 3);
    part.labels(0, 0) = static_cast<std::uint8_t>(SRSLabel::BG_EASY);
    part.labels(0, 1) = static_cast<std::uint8_t>(SRSLabel::VESSEL_EASY);
    part.labels(0, 2) = static_cast<std::uint8_t>(SRSLabel::AMBIG);

    SUBCASE("ambiguous follows the averaged probability") {
        FloatRaster probs(1, 3, -1.0f);
        probs(0, 2) = 0.9f;
        const ByteRaster seg = merge_segmentation(part, &probs);
        CHECK(seg(0, 0) == 0);
        CHECK(seg(0, 1) == 1);
        CHECK(seg(0, 2) == 1);

        probs(0, 2) = 0.5f;  // not strictly above 0.5
        CHECK(merge_segmentation(part, &probs)(0, 2) == 0);
    }

    SUBCASE("skipped stage 2 sends ambiguous pixels to background") {
        const ByteRaster seg = merge_segmentation(part, nullptr);
        CHECK(seg(0, 0) == 0);
        CHECK(seg(0, 1) == 1);
        CHECK(seg(0, 2) == 0);
    }

    SUBCASE("uncovered ambiguous pixel is a coverage violation") {
        FloatRaster probs(1, 3, -1.0f);
        CHECK_THROWS_AS(merge_segmentation(part, &probs), std::logic_error);
    }

    SUBCASE("easy labels are never altered by probabilities") {
        Rng rng(6);
        for (int trial = 0; trial < 20; ++trial) {
            FloatRaster probs(1, 3, static_cast<float>(rng.uniform()));
            const ByteRaster seg = merge_segmentation(part, &probs);
            CHECK(seg(0, 0) == 0);
            CHECK(seg(0, 1) == 1);
        }
    }
}

TEST_CASE("merge with no ambiguous pixels reproduces the easy labels") {
    Rng rng(7);
    SRSPartition part;
    part.config = {20, 235};
    part.labels = Raster<std::uint8_t>(10, 10);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c)
            part.labels(r, c) = rng.coin() ? static_cast<std::uint8_t>(SRSLabel::VESSEL_EASY)
                                           : static_cast<std::uint8_t>(SRSLabel::BG_EASY);
    const ByteRaster seg = merge_segmentation(part, nullptr);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c)
            CHECK(seg(r, c) == (part.is(r, c, SRSLabel::VESSEL_EASY) ? 1 : 0));
}
