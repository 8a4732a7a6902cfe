#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rdd {

/// 8-bit RGB, row-major, interleaved. data.size() == width * height * 3.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, std::uint8_t fill = 0);

  bool valid() const noexcept;

  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// Decodes any PNG into 8-bit RGB. Throws Error on failure.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

}  // namespace rdd
