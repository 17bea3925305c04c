#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace latentface {

/// Row-major H x W x C image of doubles. Used for UV maps, renders and
/// gradients with respect to either.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, int c = 3, double fill = 0.0)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * width + col) * channels + ch;
  }
  double& at(int row, int col, int ch) { return pixels[index(row, col, ch)]; }
  double at(int row, int col, int ch) const { return pixels[index(row, col, ch)]; }

  std::size_t size() const { return pixels.size(); }
  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
  bool all_finite() const;
  double mean() const;
};

// Bilinear resample to side x side (align-corners = false). Linear in the
// input, so the adjoint maps output gradients back onto the source grid.
Image resize_bilinear(const Image& src, int out_height, int out_width);
Image resize_bilinear_adjoint(const Image& grad_out, int src_height, int src_width);

} // namespace latentface
