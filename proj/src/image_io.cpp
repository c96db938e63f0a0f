#include "vesselpipe/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace vesselpipe {
namespace {

std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// --- Minimal GIF decoder (first frame, GIF87a/89a, LZW) ---------------
//
// DRIVE ships its labels and FOV masks as GIF, which cv::imread cannot
// decode. Interlacing and transparency-as-background are handled;
// animation disposal is not (only the first image descriptor is read).

struct GifReader {
    const std::uint8_t* p;
    const std::uint8_t* end;

    std::uint8_t u8() {
        if (p >= end) throw std::runtime_error("GIF: truncated file");
        return *p++;
    }
    std::uint16_t u16() {
        const std::uint16_t lo = u8(), hi = u8();
        return static_cast<std::uint16_t>(lo | (hi << 8));
    }
    void skip(size_t n) {
        if (static_cast<size_t>(end - p) < n) throw std::runtime_error("GIF: truncated file");
        p += n;
    }
};

void skip_sub_blocks(GifReader& r) {
    for (std::uint8_t n = r.u8(); n != 0; n = r.u8()) r.skip(n);
}

RgbImage decode_gif(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 13 || std::memcmp(bytes.data(), "GIF", 3) != 0)
        throw std::runtime_error("GIF: bad signature");
    GifReader r{bytes.data() + 6, bytes.data() + bytes.size()};

    const int screen_w = r.u16();
    const int screen_h = r.u16();
    const std::uint8_t flags = r.u8();
    r.skip(2);  // background color index, aspect ratio

    std::vector<std::array<std::uint8_t, 3>> global_palette;
    if (flags & 0x80) {
        global_palette.resize(size_t(2) << (flags & 0x07));
        for (auto& c : global_palette) {
            c[0] = r.u8();
            c[1] = r.u8();
            c[2] = r.u8();
        }
    }

    while (true) {
        const std::uint8_t block = r.u8();
        if (block == 0x3B) throw std::runtime_error("GIF: no image data");
        if (block == 0x21) {  // extension
            r.u8();
            skip_sub_blocks(r);
            continue;
        }
        if (block != 0x2C) throw std::runtime_error("GIF: unknown block");

        const int left = r.u16(), top = r.u16();
        const int w = r.u16(), h = r.u16();
        const std::uint8_t iflags = r.u8();
        std::vector<std::array<std::uint8_t, 3>> palette = global_palette;
        if (iflags & 0x80) {
            palette.assign(size_t(2) << (iflags & 0x07), {});
            for (auto& c : palette) {
                c[0] = r.u8();
                c[1] = r.u8();
                c[2] = r.u8();
            }
        }
        if (palette.empty()) throw std::runtime_error("GIF: missing palette");
        const bool interlaced = (iflags & 0x40) != 0;

        // Collect the LZW stream.
        const int min_code_size = r.u8();
        std::vector<std::uint8_t> stream;
        for (std::uint8_t n = r.u8(); n != 0; n = r.u8()) {
            for (int i = 0; i < n; ++i) stream.push_back(r.u8());
        }

        // LZW decode.
        const int clear_code = 1 << min_code_size;
        const int end_code = clear_code + 1;
        std::vector<std::int32_t> prefix(4096, -1);
        std::vector<std::uint8_t> suffix(4096), first(4096);
        int code_size = min_code_size + 1;
        int next_code = end_code + 1;
        for (int i = 0; i < clear_code; ++i) {
            suffix[i] = first[i] = static_cast<std::uint8_t>(i);
        }

        std::vector<std::uint8_t> indices;
        indices.reserve(size_t(w) * h);
        std::uint32_t bits = 0;
        int nbits = 0;
        size_t pos = 0;
        int prev = -1;
        std::vector<std::uint8_t> expand;
        while (indices.size() < size_t(w) * h) {
            while (nbits < code_size && pos < stream.size()) {
                bits |= std::uint32_t(stream[pos++]) << nbits;
                nbits += 8;
            }
            if (nbits < code_size) break;  // stream exhausted
            const int code = static_cast<int>(bits & ((1u << code_size) - 1));
            bits >>= code_size;
            nbits -= code_size;

            if (code == clear_code) {
                code_size = min_code_size + 1;
                next_code = end_code + 1;
                prev = -1;
                continue;
            }
            if (code == end_code) break;

            if (prev < 0) {
                if (code >= clear_code) throw std::runtime_error("GIF: corrupt LZW stream");
                indices.push_back(suffix[code]);
                prev = code;
                continue;
            }

            expand.clear();
            int cur = code;
            if (code >= next_code) {  // KwKwK case
                if (code > next_code) throw std::runtime_error("GIF: corrupt LZW stream");
                expand.push_back(first[prev]);
                cur = prev;
            }
            while (cur >= clear_code) {
                expand.push_back(suffix[cur]);
                cur = prefix[cur];
            }
            expand.push_back(suffix[cur]);
            const std::uint8_t first_char = expand.back();
            for (auto it = expand.rbegin(); it != expand.rend(); ++it) indices.push_back(*it);

            if (next_code < 4096) {
                prefix[next_code] = prev;
                suffix[next_code] = first_char;
                first[next_code] = first[prev];
                ++next_code;
                if (next_code == (1 << code_size) && code_size < 12) ++code_size;
            }
            prev = code;
        }
        if (indices.size() < size_t(w) * h)
            throw std::runtime_error("GIF: incomplete pixel data");

        RgbImage out;
        for (auto& pl : out.plane) pl = ByteRaster(screen_h, screen_w, 0);

        auto put_row = [&](int src_row, int dst_row) {
            for (int x = 0; x < w; ++x) {
                const std::uint8_t idx = indices[size_t(src_row) * w + x];
                const auto& c = palette[idx < palette.size() ? idx : 0];
                const int rr = top + dst_row, cc = left + x;
                if (rr < 0 || rr >= screen_h || cc < 0 || cc >= screen_w) continue;
                out.plane[0](rr, cc) = c[0];
                out.plane[1](rr, cc) = c[1];
                out.plane[2](rr, cc) = c[2];
            }
        };
        if (interlaced) {
            static const int start[4] = {0, 4, 2, 1};
            static const int step[4] = {8, 8, 4, 2};
            int src = 0;
            for (int pass = 0; pass < 4; ++pass)
                for (int y = start[pass]; y < h; y += step[pass]) put_row(src++, y);
        } else {
            for (int y = 0; y < h; ++y) put_row(y, y);
        }
        return out;
    }
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

RgbImage from_mat(const cv::Mat& m) {
    cv::Mat bgr;
    if (m.channels() == 1)
        cv::cvtColor(m, bgr, cv::COLOR_GRAY2BGR);
    else if (m.channels() == 4)
        cv::cvtColor(m, bgr, cv::COLOR_BGRA2BGR);
    else
        bgr = m;
    if (bgr.depth() != CV_8U) bgr.convertTo(bgr, CV_8U);

    RgbImage out;
    for (auto& pl : out.plane) pl = ByteRaster(bgr.rows, bgr.cols);
    for (int r = 0; r < bgr.rows; ++r) {
        const auto* src = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < bgr.cols; ++c) {
            out.plane[0](r, c) = src[c][2];
            out.plane[1](r, c) = src[c][1];
            out.plane[2](r, c) = src[c][0];
        }
    }
    return out;
}

}  // namespace

RgbImage load_rgb(const std::string& path) {
    if (lower_ext(path) == "gif") return decode_gif(read_file(path));
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw std::runtime_error("cannot decode " + path);
    return from_mat(m);
}

ByteRaster load_gray(const std::string& path) {
    return load_rgb(path).plane[1];
}

void save_gray_png(const ByteRaster& image, const std::string& path) {
    cv::Mat m(image.rows(), image.cols(), CV_8UC1);
    for (int r = 0; r < image.rows(); ++r)
        std::memcpy(m.ptr(r), image.row(r), image.cols());
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write " + path);
}

void save_rgb_png(const RgbImage& image, const std::string& path) {
    cv::Mat m(image.rows(), image.cols(), CV_8UC3);
    for (int r = 0; r < image.rows(); ++r) {
        auto* dst = m.ptr<cv::Vec3b>(r);
        for (int c = 0; c < image.cols(); ++c) {
            dst[c][0] = image.plane[2](r, c);
            dst[c][1] = image.plane[1](r, c);
            dst[c][2] = image.plane[0](r, c);
        }
    }
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write " + path);
}

bool has_raster_extension(const std::string& path) {
    const std::string e = lower_ext(path);
    return e == "png" || e == "tif" || e == "tiff" || e == "ppm" || e == "pgm" || e == "gif";
}

}  // namespace vesselpipe
