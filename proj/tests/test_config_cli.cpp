#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vesselpipe/cache.hpp"
#include "vesselpipe/config.hpp"
#include "vesselpipe/experiment.hpp"

using namespace vesselpipe;
namespace fs = std::filesystem;

TEST_CASE("variant names round-trip") {
    for (const auto v : {PipelineVariant::DynamicTargeted, PipelineVariant::DynamicOnly,
                         PipelineVariant::FixedOnly, PipelineVariant::FixedTargeted})
        CHECK(parse_variant(variant_name(v)) == v);
    CHECK_THROWS_AS(parse_variant("bogus"), std::invalid_argument);
    CHECK(variant_uses_targeted(PipelineVariant::FixedTargeted));
    CHECK(!variant_uses_targeted(PipelineVariant::DynamicOnly));
    CHECK(variant_uses_dynamic(PipelineVariant::DynamicTargeted));
    CHECK(!variant_uses_dynamic(PipelineVariant::FixedOnly));
}

TEST_CASE("defaults carry the published protocol") {
    const ExperimentConfig cfg = ExperimentConfig::defaults();
    CHECK(cfg.stage1.epochs == 250);
    CHECK(cfg.stage1.weight_sampler.high == 100.0);
    CHECK(cfg.stage2.epochs == 60);
    CHECK(cfg.stage2.weight_sampler.high == 2.0);
    CHECK(cfg.stage2.weight_sampler.step == doctest::Approx(0.1));
    CHECK(cfg.srs.support == 20);
    CHECK(cfg.srs.resistance == 235);
    CHECK(cfg.patch.p == 100);
    CHECK(cfg.patch.context == 140);
    CHECK(cfg.stage1_net.input_size == 572);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config files parse, override, and echo") {
    const fs::path dir = fs::temp_directory_path() / "vesselpipe_cfg_test";
    fs::create_directories(dir);
    const fs::path path = dir / "exp.cfg";
    std::ofstream(path) << "# comment line\n"
                        << "dataset = STARE\n"
                        << "variant = fixed-only\n"
                        << "seed = 42\n"
                        << "srs.support = 30\n"
                        << "stage1.epochs = 7\n";
    ExperimentConfig cfg = ExperimentConfig::from_file(path.string());
    CHECK(cfg.dataset == DatasetTag::STARE);
    CHECK(cfg.variant == PipelineVariant::FixedOnly);
    CHECK(cfg.seed == 42);
    CHECK(cfg.srs.support == 30);
    CHECK(cfg.stage1.epochs == 7);

    cfg.set("srs.support", "25");
    CHECK(cfg.srs.support == 25);
    CHECK_THROWS_AS(cfg.set("definitely.unknown", "1"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.set("seed", "not-a-number"), std::invalid_argument);

    const fs::path echo = dir / "echo.cfg";
    cfg.echo(echo.string());
    const ExperimentConfig back = ExperimentConfig::from_file(echo.string());
    CHECK(back.to_map() == cfg.to_map());
}

TEST_CASE("config validation catches inconsistent windows and thresholds") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.set("srs.support", "240");
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    ExperimentConfig geo = ExperimentConfig::defaults();
    geo.set("patch.context", "130");  // 130 is not a valid depth-2 ledger for p=100
    CHECK_THROWS_AS(geo.validate(), std::invalid_argument);
}

TEST_CASE("scale presets") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    apply_scale_preset(cfg, "smoke");
    CHECK(cfg.stage1_net.input_size == 284);
    CHECK(cfg.stage1.epochs <= 40);
    CHECK(cfg.stage2.epochs <= 20);
    CHECK_NOTHROW(cfg.validate());

    apply_scale_preset(cfg, "full");
    CHECK(cfg.stage1_net.input_size == 572);
    CHECK(cfg.stage1.epochs == 250);
    CHECK(cfg.stage2.epochs == 60);
    CHECK_NOTHROW(cfg.validate());

    CHECK_THROWS_AS(apply_scale_preset(cfg, "medium"), std::invalid_argument);
}

TEST_CASE("stage cache freshness tracks content hashes") {
    const fs::path dir = fs::temp_directory_path() / "vesselpipe_cache_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string artifact = (dir / "artifact.bin").string();

    StageCache cache(dir.string());
    CHECK(!cache.fresh(artifact, 1));
    std::ofstream(artifact) << "data";
    cache.record(artifact, 1);
    cache.save();
    CHECK(cache.fresh(artifact, 1));
    CHECK(!cache.fresh(artifact, 2));

    StageCache reloaded(dir.string());
    CHECK(reloaded.fresh(artifact, 1));

    fs::remove(artifact);
    CHECK(!reloaded.fresh(artifact, 1));
}

TEST_CASE("fnv1a and file hashing are stable") {
    const std::string s = "vesselpipe";
    CHECK(fnv1a(s.data(), s.size()) == fnv1a(s.data(), s.size()));
    CHECK(fnv1a(s.data(), s.size()) != fnv1a(s.data(), s.size() - 1));

    const fs::path dir = fs::temp_directory_path() / "vesselpipe_cache_test";
    fs::create_directories(dir);
    const fs::path f = dir / "h.bin";
    std::ofstream(f) << "abc";
    const auto h1 = hash_file(f.string());
    std::ofstream(f) << "abd";
    CHECK(hash_file(f.string()) != h1);
}
