#include "vesselpipe/cache.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace fs = std::filesystem;

namespace vesselpipe {

std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("hash_file: cannot open " + path);
    std::vector<char> buf(1 << 16);
    std::uint64_t h = 0xcbf29ce484222325ull;
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a(buf.data(), static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

StageCache::StageCache(const std::string& out_dir) {
    const char* override_dir = std::getenv("VESSELPIPE_CACHE");
    dir_ = override_dir && *override_dir ? override_dir : out_dir;
    fs::create_directories(dir_);
    manifest_path_ = (fs::path(dir_) / "cache_manifest.json").string();
    if (fs::exists(manifest_path_)) {
        std::ifstream in(manifest_path_);
        nlohmann::json j;
        in >> j;
        for (auto it = j.begin(); it != j.end(); ++it)
            entries_[it.key()] = it.value().get<std::uint64_t>();
    }
}

bool StageCache::fresh(const std::string& artifact_path, std::uint64_t inputs_hash) const {
    if (!fs::exists(artifact_path)) return false;
    const auto it = entries_.find(artifact_path);
    return it != entries_.end() && it->second == inputs_hash;
}

void StageCache::record(const std::string& artifact_path, std::uint64_t inputs_hash) {
    entries_[artifact_path] = inputs_hash;
}

void StageCache::save() const {
    nlohmann::json j;
    for (const auto& [k, v] : entries_) j[k] = v;
    std::ofstream out(manifest_path_);
    if (!out) throw std::runtime_error("StageCache: cannot write " + manifest_path_);
    out << j.dump(2) << "\n";
}

}  // namespace vesselpipe
