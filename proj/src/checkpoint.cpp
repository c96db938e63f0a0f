#include "vesselpipe/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vesselpipe {
namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(UNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);

    out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    out.put('\n');
    const auto& g = net.geometry();
    write_u32(out, static_cast<std::uint32_t>(net.in_channels()));
    write_u32(out, static_cast<std::uint32_t>(g.depth));
    write_u32(out, static_cast<std::uint32_t>(g.base_channels));
    write_u32(out, static_cast<std::uint32_t>(g.input_size));

    const auto params = net.params();
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        write_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u32(out, static_cast<std::uint32_t>(p.count));
        out.write(reinterpret_cast<const char*>(p.values),
                  static_cast<std::streamsize>(p.count * sizeof(float)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::unique_ptr<UNet> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

    char magic[sizeof(kCheckpointMagic)];  // includes room for the newline
    in.read(magic, sizeof(kCheckpointMagic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(kCheckpointMagic) - 1) != 0 ||
        magic[sizeof(kCheckpointMagic) - 1] != '\n')
        throw std::runtime_error("checkpoint: bad magic in " + path);

    const int in_channels = static_cast<int>(read_u32(in));
    const int depth = static_cast<int>(read_u32(in));
    const int base_channels = static_cast<int>(read_u32(in));
    const int input_size = static_cast<int>(read_u32(in));

    auto net = std::make_unique<UNet>(receptive_geometry(depth, input_size, base_channels),
                                      in_channels);
    auto params = net->params();
    const std::uint32_t n = read_u32(in);
    if (n != params.size()) throw std::runtime_error("checkpoint: parameter list mismatch");
    for (auto& p : params) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t count = read_u32(in);
        if (name != p.name || count != p.count)
            throw std::runtime_error("checkpoint: parameter " + name + " does not match " +
                                     p.name);
        in.read(reinterpret_cast<char*>(p.values),
                static_cast<std::streamsize>(p.count * sizeof(float)));
        if (!in) throw std::runtime_error("checkpoint: truncated parameter data");
    }
    return net;
}

}  // namespace vesselpipe
