#pragma once

#include <array>
#include <string>

#include "vesselpipe/raster.hpp"

namespace vesselpipe {

struct RgbImage {
    // Planes in channel order R, G, B.
    std::array<ByteRaster, 3> plane;
    int rows() const { return plane[0].rows(); }
    int cols() const { return plane[0].cols(); }
};

// Decodes PNG/TIFF/PPM via OpenCV and GIF via the built-in decoder
// (OpenCV 4.x imgcodecs has no GIF support). Grayscale files are
// replicated across the three planes. Throws std::runtime_error on
// undecodable input.
RgbImage load_rgb(const std::string& path);

// Single-channel load; color inputs are reduced to their green plane.
ByteRaster load_gray(const std::string& path);

void save_gray_png(const ByteRaster& image, const std::string& path);
void save_rgb_png(const RgbImage& image, const std::string& path);

bool has_raster_extension(const std::string& path);

}  // namespace vesselpipe
