#include "latentface/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentface/error.hpp"

namespace latentface {

bool Image::all_finite() const {
  return std::all_of(pixels.begin(), pixels.end(), [](double v) { return std::isfinite(v); });
}

double Image::mean() const {
  if (pixels.empty()) {
    return 0.0;
  }
  return std::accumulate(pixels.begin(), pixels.end(), 0.0) / static_cast<double>(pixels.size());
}

namespace {

struct Tap {
  int lo;
  int hi;
  double t; // weight of hi
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    double s = (o + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, src - 1);
    taps[o] = {lo, hi, s - lo};
  }
  return taps;
}

} // namespace

Image resize_bilinear(const Image& src, int out_height, int out_width) {
  require(src.height > 0 && src.width > 0, "resize_bilinear: empty source");
  require(out_height > 0 && out_width > 0, "resize_bilinear: empty target");
  if (src.height == out_height && src.width == out_width) {
    return src;
  }
  const auto ty = bilinear_taps(src.height, out_height);
  const auto tx = bilinear_taps(src.width, out_width);
  Image out(out_height, out_width, src.channels);
  for (int r = 0; r < out_height; ++r) {
    for (int c = 0; c < out_width; ++c) {
      for (int ch = 0; ch < src.channels; ++ch) {
        const double top = (1 - tx[c].t) * src.at(ty[r].lo, tx[c].lo, ch) + tx[c].t * src.at(ty[r].lo, tx[c].hi, ch);
        const double bottom = (1 - tx[c].t) * src.at(ty[r].hi, tx[c].lo, ch) + tx[c].t * src.at(ty[r].hi, tx[c].hi, ch);
        out.at(r, c, ch) = (1 - ty[r].t) * top + ty[r].t * bottom;
      }
    }
  }
  return out;
}

Image resize_bilinear_adjoint(const Image& grad_out, int src_height, int src_width) {
  if (grad_out.height == src_height && grad_out.width == src_width) {
    return grad_out;
  }
  const auto ty = bilinear_taps(src_height, grad_out.height);
  const auto tx = bilinear_taps(src_width, grad_out.width);
  Image grad(src_height, src_width, grad_out.channels);
  for (int r = 0; r < grad_out.height; ++r) {
    for (int c = 0; c < grad_out.width; ++c) {
      for (int ch = 0; ch < grad_out.channels; ++ch) {
        const double g = grad_out.at(r, c, ch);
        const double wy0 = 1 - ty[r].t, wy1 = ty[r].t;
        const double wx0 = 1 - tx[c].t, wx1 = tx[c].t;
        grad.at(ty[r].lo, tx[c].lo, ch) += g * wy0 * wx0;
        grad.at(ty[r].lo, tx[c].hi, ch) += g * wy0 * wx1;
        grad.at(ty[r].hi, tx[c].lo, ch) += g * wy1 * wx0;
        grad.at(ty[r].hi, tx[c].hi, ch) += g * wy1 * wx1;
      }
    }
  }
  return grad;
}

} // namespace latentface
