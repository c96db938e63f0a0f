#include <doctest.h>

#include "vesselpipe/rng.hpp"
#include "vesselpipe/srs.hpp"

using namespace vesselpipe;

TEST_CASE("partition thresholds: paper defaults") {
    ByteRaster map(1, 4);
    map(0, 0) = 10;
    map(0, 1) = 240;
    map(0, 2) = 20;
    map(0, 3) = 235;
    const SRSPartition p = srs_partition(map, {20, 235});
    CHECK(p.is(0, 0, SRSLabel::BG_EASY));
    CHECK(p.is(0, 1, SRSLabel::VESSEL_EASY));
    CHECK(p.is(0, 2, SRSLabel::AMBIG));   // both thresholds are inclusive
    CHECK(p.is(0, 3, SRSLabel::AMBIG));
}

TEST_CASE("invalid threshold configurations") {
    ByteRaster map(1, 1, 0);
    CHECK_THROWS_AS(srs_partition(map, {235, 20}), std::invalid_argument);
    CHECK_THROWS_AS(srs_partition(map, {20, 20}), std::invalid_argument);
    CHECK_THROWS_AS(srs_partition(map, {-1, 20}), std::invalid_argument);
    CHECK_THROWS_AS(srs_partition(map, {0, 256}), std::invalid_argument);
}

TEST_CASE("partition is exhaustive and mutually exclusive on random maps") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        ByteRaster map(40, 50);
        for (int r = 0; r < 40; ++r)
            for (int c = 0; c < 50; ++c)
                map(r, c) = static_cast<std::uint8_t>(rng.uniform_index(256));
        const int support = static_cast<int>(rng.uniform_index(100));
        const int resistance = support + 1 + static_cast<int>(rng.uniform_index(255 - support - 1));
        const SRSPartition p = srs_partition(map, {support, resistance});
        for (int r = 0; r < 40; ++r)
            for (int c = 0; c < 50; ++c) {
                const int v = map(r, c);
                const int expected = v < support ? 0 : (v > resistance ? 2 : 1);
                CHECK(int(p.labels(r, c)) == expected);
            }
    }
}

TEST_CASE("widening the band never shrinks the ambiguous set") {
    Rng rng(9);
    ByteRaster map(64, 64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) map(r, c) = static_cast<std::uint8_t>(rng.uniform_index(256));

    const auto ambig_count = [&](int s, int t) {
        return band_stats(srs_partition(map, {s, t})).counts[1];
    };
    CHECK(ambig_count(20, 235) <= ambig_count(10, 235));  // lower support
    CHECK(ambig_count(20, 235) <= ambig_count(20, 245));  // higher resistance
    CHECK(ambig_count(20, 235) <= ambig_count(0, 255));
}

TEST_CASE("the widest band marks every pixel ambiguous") {
    Rng rng(10);
    ByteRaster map(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) map(r, c) = static_cast<std::uint8_t>(rng.uniform_index(256));
    const BandStats stats = band_stats(srs_partition(map, {0, 255}));
    CHECK(stats.counts[1] == 32 * 32);
}

TEST_CASE("band stats: degenerate maps and the uniform-random fraction") {
    const SRSConfig cfg{20, 235};

    const BandStats zeros = band_stats(srs_partition(ByteRaster(10, 10, 0), cfg));
    CHECK(zeros.counts[0] == 100);
    CHECK(zeros.fractions[0] == doctest::Approx(1.0));

    const BandStats ones = band_stats(srs_partition(ByteRaster(10, 10, 255), cfg));
    CHECK(ones.counts[2] == 100);

    // Uniform bytes: P(20 <= v <= 235) = 216/256.
    Rng rng(11);
    ByteRaster map(1000, 1000);
    for (int r = 0; r < 1000; ++r)
        for (int c = 0; c < 1000; ++c)
            map(r, c) = static_cast<std::uint8_t>(rng.uniform_index(256));
    const BandStats stats = band_stats(srs_partition(map, cfg));
    CHECK(stats.fractions[0] + stats.fractions[1] + stats.fractions[2] ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(stats.fractions[1] - 216.0 / 256.0) < 0.02);
}

TEST_CASE("partition image encodes the three labels") {
    ByteRaster map(1, 3);
    map(0, 0) = 0;
    map(0, 1) = 100;
    map(0, 2) = 255;
    const ByteRaster img = partition_image(srs_partition(map, {20, 235}));
    CHECK(img(0, 0) == 0);
    CHECK(img(0, 1) == 128);
    CHECK(img(0, 2) == 255);
}
