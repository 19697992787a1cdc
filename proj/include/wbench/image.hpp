#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wbench {

/// Interleaved 8-bit image, row-major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Reads binary PPM (P6), PGM (P5) or PNG by extension. Throws FormatError.
Image read_image(const std::string& path);

/// Writes P6 for 3 channels and P5 for 1 channel.
void write_netpbm(const std::string& path, const Image& img);

/// PNG file bytes for the image.
std::string encode_png(const Image& img);

}  // namespace wbench
