#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fploc {

/// 8-bit single-channel raster, row-major, row 0 first.
struct GrayImage
{
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Reads an 8-bit grayscale PGM (P2/P5) or PNG. Color PNGs are converted to gray.
/// Throws LoadError on missing or corrupt files.
GrayImage read_gray_image(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

/// Dispatches on extension (.png, otherwise PGM).
void write_gray_image(const std::filesystem::path& path, const GrayImage& image);

}  // namespace fploc
