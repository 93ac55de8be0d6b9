#include "fploc/image_io.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <png.h>

#include "fploc/error.hpp"

namespace fploc {

namespace {

bool has_png_signature(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), sizeof(sig));
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

GrayImage read_png(const std::filesystem::path& path)
{
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw LoadError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw LoadError("corrupt PNG '" + path.string() + "': " + msg);
  }
  return out;
}

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::istream& in)
{
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

int read_pnm_int(std::istream& in, const std::filesystem::path& path)
{
  skip_pnm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) {
    throw LoadError("malformed PGM header in '" + path.string() + "'");
  }
  return v;
}

GrayImage read_pgm(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LoadError("cannot open '" + path.string() + "'");
  }
  char magic[2] = {};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    throw LoadError("'" + path.string() + "' is neither PGM nor PNG");
  }
  const int w = read_pnm_int(in, path);
  const int h = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw LoadError("unsupported PGM geometry or depth in '" + path.string() + "' (8-bit only)");
  }
  GrayImage out(w, h);
  if (magic[1] == '5') {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(out.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(out.pixels.size())) {
      throw LoadError("truncated PGM data in '" + path.string() + "'");
    }
  } else {
    for (auto& p : out.pixels) {
      const int v = read_pnm_int(in, path);
      if (v > maxval) {
        throw LoadError("PGM sample out of range in '" + path.string() + "'");
      }
      p = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& p : out.pixels) {
      p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
    }
  }
  return out;
}

}  // namespace

GrayImage read_gray_image(const std::filesystem::path& path)
{
  if (!std::filesystem::is_regular_file(path)) {
    throw LoadError("image file not found: '" + path.string() + "'");
  }
  return has_png_signature(path) ? read_png(path) : read_pgm(path);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) {
    throw Error("write failed for '" + path.string() + "'");
  }
}

void write_png(const std::filesystem::path& path, const GrayImage& image)
{
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw Error("cannot write PNG '" + path.string() + "': " + png.message);
  }
}

void write_gray_image(const std::filesystem::path& path, const GrayImage& image)
{
  std::string ext = path.extension().string();
  for (auto& c : ext) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (ext == ".png") {
    write_png(path, image);
  } else {
    write_pgm(path, image);
  }
}

}  // namespace fploc
