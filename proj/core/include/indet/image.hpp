#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "indet/types.hpp"

namespace indet {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kRed{255, 0, 0};

/// Interleaved 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // width * height * 3 bytes

  static Image solid(int width, int height, Rgb color);

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[i] = c.r;
    rgb[i + 1] = c.g;
    rgb[i + 2] = c.b;
  }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool operator==(const Image&) const = default;
};

// Binary PPM (P6) is the engine's lossless interchange format.
std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(std::span<const std::uint8_t> bytes);
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);

/// Pixel rectangle in continuous coordinates; pixel (x, y) is covered when
/// its center (x + 0.5, y + 0.5) lies inside.
struct RectF {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

RectF denormalize(const BBoxNorm& bbox, int width, int height);

/// Separable Gaussian blur, double accumulation, one quantization at the
/// end. Kernel radius is max(1, lround(3 * sigma)); edges clamp.
Image gaussian_blur(const Image& img, double sigma);

/// Axis-aligned rectangular stroke centered on the rect edge: pixels within
/// stroke_px/2 of the boundary (inside or outside) take the color.
Image draw_rect_outline(const Image& img, const RectF& rect, double stroke_px, Rgb color);

/// Elliptic stroke: the annulus between the ellipses inscribed in the rect
/// shrunk/grown by stroke_px/2 on each semi-axis.
Image draw_ellipse_outline(const Image& img, const RectF& rect, double stroke_px, Rgb color);

bool ellipse_stroke_covers(const RectF& rect, double stroke_px, double px, double py);

Image crop(const Image& img, int x1, int y1, int x2, int y2);

/// Desaturates pixels where keep is 0 (ITU-R 601 luma).
Image gray_outside(const Image& img, const std::vector<std::uint8_t>& keep);

/// Dims pixels where keep is 0 by the given factor.
Image dim_outside(const Image& img, const std::vector<std::uint8_t>& keep, double factor = 0.5);

/// Traces the 4-connected outer boundary of the mask with the color.
Image draw_mask_boundary(const Image& img, const std::vector<std::uint8_t>& mask, Rgb color);

}  // namespace indet
