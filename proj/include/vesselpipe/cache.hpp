#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace vesselpipe {

std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_file(const std::string& path);

// Content-hash manifest used to skip up-to-date stage artifacts. The
// manifest lives next to the artifacts (or under $VESSELPIPE_CACHE when
// set) and maps artifact keys to the hash of their inputs.
class StageCache {
public:
    explicit StageCache(const std::string& out_dir);

    // True when the artifact file exists and the recorded input hash
    // matches.
    bool fresh(const std::string& artifact_path, std::uint64_t inputs_hash) const;
    void record(const std::string& artifact_path, std::uint64_t inputs_hash);
    void save() const;

    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::string manifest_path_;
    std::map<std::string, std::uint64_t> entries_;
};

}  // namespace vesselpipe
