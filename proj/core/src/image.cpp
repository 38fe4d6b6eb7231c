#include "indet/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace indet {

Image Image::solid(int width, int height, Rgb color) {
  Image img;
  img.width = width;
  img.height = height;
  img.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = color.r;
    img.rgb[i + 1] = color.g;
    img.rgb[i + 2] = color.b;
  }
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width, img.height);
  std::vector<std::uint8_t> out(header, header + n);
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

namespace {

int parse_ppm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  // skip whitespace and '#' comments
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  int value = 0;
  bool any = false;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    ++pos;
    any = true;
  }
  if (!any) throw PipelineError("malformed PPM header");
  return value;
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw PipelineError("not a binary PPM (P6) image");
  }
  std::size_t pos = 2;
  Image img;
  img.width = parse_ppm_int(bytes, pos);
  img.height = parse_ppm_int(bytes, pos);
  const int maxval = parse_ppm_int(bytes, pos);
  if (maxval != 255) throw PipelineError("unsupported PPM maxval");
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(img.width) * img.height * 3;
  if (bytes.size() < pos + need) throw PipelineError("truncated PPM payload");
  img.rgb.assign(bytes.begin() + pos, bytes.begin() + pos + need);
  return img;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError("cannot write image " + path.string());
  const auto bytes = encode_ppm(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RectF denormalize(const BBoxNorm& bbox, int width, int height) {
  return {bbox.x1 * width, bbox.y1 * height, bbox.x2 * width, bbox.y2 * height};
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::lround(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& k : kernel) k /= sum;

  const int w = img.width;
  const int h = img.height;
  std::vector<double> horiz(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const int sx = std::clamp(x + i, 0, w - 1);
        const double k = kernel[static_cast<std::size_t>(i + radius)];
        const std::size_t s = (static_cast<std::size_t>(y) * w + sx) * 3;
        acc[0] += k * img.rgb[s];
        acc[1] += k * img.rgb[s + 1];
        acc[2] += k * img.rgb[s + 2];
      }
      const std::size_t d = (static_cast<std::size_t>(y) * w + x) * 3;
      horiz[d] = acc[0];
      horiz[d + 1] = acc[1];
      horiz[d + 2] = acc[2];
    }
  }
  Image out;
  out.width = w;
  out.height = h;
  out.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const int sy = std::clamp(y + i, 0, h - 1);
        const double k = kernel[static_cast<std::size_t>(i + radius)];
        const std::size_t s = (static_cast<std::size_t>(sy) * w + x) * 3;
        acc[0] += k * horiz[s];
        acc[1] += k * horiz[s + 1];
        acc[2] += k * horiz[s + 2];
      }
      const std::size_t d = (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) {
        out.rgb[d + c] =
            static_cast<std::uint8_t>(std::clamp<long>(std::lround(acc[c]), 0, 255));
      }
    }
  }
  return out;
}

Image draw_rect_outline(const Image& img, const RectF& rect, double stroke_px, Rgb color) {
  if (stroke_px <= 0.0) throw PipelineError("degenerate stroke");
  Image out = img;
  const double half = stroke_px / 2.0;
  const double ox1 = rect.x1 - half, oy1 = rect.y1 - half;
  const double ox2 = rect.x2 + half, oy2 = rect.y2 + half;
  const double ix1 = rect.x1 + half, iy1 = rect.y1 + half;
  const double ix2 = rect.x2 - half, iy2 = rect.y2 - half;
  const int px1 = std::max(0, static_cast<int>(std::floor(ox1 - 0.5)));
  const int py1 = std::max(0, static_cast<int>(std::floor(oy1 - 0.5)));
  const int px2 = std::min(img.width - 1, static_cast<int>(std::ceil(ox2)));
  const int py2 = std::min(img.height - 1, static_cast<int>(std::ceil(oy2)));
  for (int y = py1; y <= py2; ++y) {
    for (int x = px1; x <= px2; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool in_outer = cx >= ox1 && cx <= ox2 && cy >= oy1 && cy <= oy2;
      const bool in_inner = ix1 < ix2 && iy1 < iy2 && cx > ix1 && cx < ix2 && cy > iy1 && cy < iy2;
      if (in_outer && !in_inner) out.set(x, y, color);
    }
  }
  return out;
}

bool ellipse_stroke_covers(const RectF& rect, double stroke_px, double px, double py) {
  const double cx = (rect.x1 + rect.x2) / 2.0;
  const double cy = (rect.y1 + rect.y2) / 2.0;
  const double a = (rect.x2 - rect.x1) / 2.0;
  const double b = (rect.y2 - rect.y1) / 2.0;
  const double half = stroke_px / 2.0;
  const double ao = a + half, bo = b + half;
  const double ai = a - half, bi = b - half;
  const double dx = px - cx, dy = py - cy;
  const double fo = (dx * dx) / (ao * ao) + (dy * dy) / (bo * bo);
  if (fo > 1.0) return false;
  if (ai <= 0.0 || bi <= 0.0) return true;  // stroke fills the whole interior
  const double fi = (dx * dx) / (ai * ai) + (dy * dy) / (bi * bi);
  return fi >= 1.0;
}

Image draw_ellipse_outline(const Image& img, const RectF& rect, double stroke_px, Rgb color) {
  if (stroke_px <= 0.0) throw PipelineError("degenerate stroke");
  Image out = img;
  const double half = stroke_px / 2.0;
  const int px1 = std::max(0, static_cast<int>(std::floor(rect.x1 - half - 1)));
  const int py1 = std::max(0, static_cast<int>(std::floor(rect.y1 - half - 1)));
  const int px2 = std::min(img.width - 1, static_cast<int>(std::ceil(rect.x2 + half + 1)));
  const int py2 = std::min(img.height - 1, static_cast<int>(std::ceil(rect.y2 + half + 1)));
  for (int y = py1; y <= py2; ++y) {
    for (int x = px1; x <= px2; ++x) {
      if (ellipse_stroke_covers(rect, stroke_px, x + 0.5, y + 0.5)) out.set(x, y, color);
    }
  }
  return out;
}

Image crop(const Image& img, int x1, int y1, int x2, int y2) {
  x1 = std::clamp(x1, 0, img.width);
  y1 = std::clamp(y1, 0, img.height);
  x2 = std::clamp(x2, x1, img.width);
  y2 = std::clamp(y2, y1, img.height);
  Image out;
  out.width = x2 - x1;
  out.height = y2 - y1;
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  for (int y = y1; y < y2; ++y) {
    const std::size_t src = (static_cast<std::size_t>(y) * img.width + x1) * 3;
    const std::size_t dst = (static_cast<std::size_t>(y - y1) * out.width) * 3;
    std::copy_n(img.rgb.begin() + src, static_cast<std::size_t>(out.width) * 3,
                out.rgb.begin() + dst);
  }
  return out;
}

Image gray_outside(const Image& img, const std::vector<std::uint8_t>& keep) {
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      if (keep[i]) continue;
      const Rgb c = img.at(x, y);
      const auto luma = static_cast<std::uint8_t>(
          std::clamp<long>(std::lround(0.299 * c.r + 0.587 * c.g + 0.114 * c.b), 0, 255));
      out.set(x, y, {luma, luma, luma});
    }
  }
  return out;
}

Image dim_outside(const Image& img, const std::vector<std::uint8_t>& keep, double factor) {
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      if (keep[i]) continue;
      const Rgb c = img.at(x, y);
      out.set(x, y, {static_cast<std::uint8_t>(std::lround(c.r * factor)),
                     static_cast<std::uint8_t>(std::lround(c.g * factor)),
                     static_cast<std::uint8_t>(std::lround(c.b * factor))});
    }
  }
  return out;
}

Image draw_mask_boundary(const Image& img, const std::vector<std::uint8_t>& mask, Rgb color) {
  Image out = img;
  auto at = [&](int x, int y) -> std::uint8_t {
    if (x < 0 || x >= img.width || y < 0 || y >= img.height) return 0;
    return mask[static_cast<std::size_t>(y) * img.width + x];
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!at(x, y)) continue;
      if (!at(x - 1, y) || !at(x + 1, y) || !at(x, y - 1) || !at(x, y + 1)) {
        out.set(x, y, color);
      }
    }
  }
  return out;
}

}  // namespace indet
