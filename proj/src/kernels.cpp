#include "latentface/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "latentface/error.hpp"

namespace latentface::kernels {

namespace {

void check_sizes(
    const SplatParams& params,
    std::span<const double> screen,
    std::span<const double> colors,
    std::size_t image_size,
    std::size_t denominator_size) {
  require(params.size > 0, "splat: image size must be positive");
  require(params.sigma > 0.0, "splat: sigma must be positive");
  require(screen.size() % 2 == 0 && colors.size() == screen.size() / 2 * 3, "splat: screen/colors size mismatch");
  const std::size_t pixels = static_cast<std::size_t>(params.size) * params.size;
  require(image_size == pixels * 3 && denominator_size == pixels, "splat: output buffer size mismatch");
}

// Serial and parallel forward share this per-pixel body so the arithmetic
// order is the same in both.
inline void shade_pixel(
    const SplatParams& params,
    int row,
    int col,
    std::span<const double> screen,
    std::span<const double> colors,
    const int* candidates,
    std::size_t candidate_count,
    double* out_rgb,
    double* out_den) {
  const double px = col + 0.5;
  const double py = row + 0.5;
  const double inv_two_var = 1.0 / (2.0 * params.sigma * params.sigma);
  const double cutoff2 = params.cutoff_sigmas * params.cutoff_sigmas * params.sigma * params.sigma;
  double num[3] = {0.0, 0.0, 0.0};
  double den = 0.0;
  for (std::size_t k = 0; k < candidate_count; ++k) {
    const int v = candidates[k];
    const double dx = px - screen[2 * v];
    const double dy = py - screen[2 * v + 1];
    const double d2 = dx * dx + dy * dy;
    if (d2 > cutoff2) {
      continue;
    }
    const double w = std::exp(-d2 * inv_two_var);
    num[0] += w * colors[3 * v];
    num[1] += w * colors[3 * v + 1];
    num[2] += w * colors[3 * v + 2];
    den += w;
  }
  const double total = den + params.background_weight;
  const double bg = params.background_weight * params.background;
  out_rgb[0] = (num[0] + bg) / total;
  out_rgb[1] = (num[1] + bg) / total;
  out_rgb[2] = (num[2] + bg) / total;
  *out_den = total;
}

} // namespace

void splat_forward(
    Execution exec,
    const SplatParams& params,
    std::span<const double> screen,
    std::span<const double> colors,
    std::span<double> image,
    std::span<double> denominator) {
  check_sizes(params, screen, colors, image.size(), denominator.size());
  const int vertex_count = static_cast<int>(screen.size() / 2);
  const int size = params.size;

  if (exec == Execution::serial) {
    std::vector<int> all(vertex_count);
    for (int v = 0; v < vertex_count; ++v) {
      all[v] = v;
    }
    for (int row = 0; row < size; ++row) {
      for (int col = 0; col < size; ++col) {
        const std::size_t p = static_cast<std::size_t>(row) * size + col;
        shade_pixel(params, row, col, screen, colors, all.data(), all.size(), &image[3 * p], &denominator[p]);
      }
    }
    return;
  }

  // Rows only see vertices whose splat reaches them; the candidates stay in
  // ascending order, so every pixel sums the same terms as the serial path.
  const double reach = params.cutoff_sigmas * params.sigma;
#pragma omp parallel
  {
    std::vector<int> candidates;
    candidates.reserve(vertex_count);
#pragma omp for schedule(static)
    for (int row = 0; row < size; ++row) {
      const double py = row + 0.5;
      candidates.clear();
      for (int v = 0; v < vertex_count; ++v) {
        if (std::abs(py - screen[2 * v + 1]) <= reach) {
          candidates.push_back(v);
        }
      }
      for (int col = 0; col < size; ++col) {
        const std::size_t p = static_cast<std::size_t>(row) * size + col;
        shade_pixel(params, row, col, screen, colors, candidates.data(), candidates.size(), &image[3 * p],
                    &denominator[p]);
      }
    }
  }
}

void splat_backward(
    Execution exec,
    const SplatParams& params,
    std::span<const double> screen,
    std::span<const double> colors,
    std::span<const double> image,
    std::span<const double> denominator,
    std::span<const double> grad_image,
    std::span<double> grad_screen,
    std::span<double> grad_colors) {
  check_sizes(params, screen, colors, image.size(), denominator.size());
  require(grad_image.size() == image.size(), "splat_backward: gradient image size mismatch");
  require(grad_screen.size() == screen.size() && grad_colors.size() == colors.size(),
          "splat_backward: gradient buffer size mismatch");
  const int vertex_count = static_cast<int>(screen.size() / 2);
  const int size = params.size;
  const double var = params.sigma * params.sigma;
  const double inv_two_var = 1.0 / (2.0 * var);
  const double cutoff2 = params.cutoff_sigmas * params.cutoff_sigmas * var;

  std::fill(grad_screen.begin(), grad_screen.end(), 0.0);
  std::fill(grad_colors.begin(), grad_colors.end(), 0.0);

  // Contribution of pixel p to vertex v.
  auto accumulate = [&](std::size_t p, double dx, double dy, int v, double* g_screen, double* g_color) {
    const double d2 = dx * dx + dy * dy;
    if (d2 > cutoff2) {
      return;
    }
    const double w = std::exp(-d2 * inv_two_var);
    const double inv_den = 1.0 / denominator[p];
    double dl_dw = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double g = grad_image[3 * p + ch];
      g_color[ch] += g * w * inv_den;
      dl_dw += g * (colors[3 * v + ch] - image[3 * p + ch]) * inv_den;
    }
    // dw/ds = w * (p - s) / sigma^2
    g_screen[0] += dl_dw * w * dx / var;
    g_screen[1] += dl_dw * w * dy / var;
  };

  if (exec == Execution::serial) {
    for (int row = 0; row < size; ++row) {
      for (int col = 0; col < size; ++col) {
        const std::size_t p = static_cast<std::size_t>(row) * size + col;
        for (int v = 0; v < vertex_count; ++v) {
          const double dx = col + 0.5 - screen[2 * v];
          const double dy = row + 0.5 - screen[2 * v + 1];
          accumulate(p, dx, dy, v, &grad_screen[2 * v], &grad_colors[3 * v]);
        }
      }
    }
    return;
  }

  const double reach = params.cutoff_sigmas * params.sigma;
#pragma omp parallel for schedule(dynamic, 16)
  for (int v = 0; v < vertex_count; ++v) {
    const double sx = screen[2 * v];
    const double sy = screen[2 * v + 1];
    const int row_lo = std::max(0, static_cast<int>(std::floor(sy - reach - 0.5)));
    const int row_hi = std::min(size - 1, static_cast<int>(std::ceil(sy + reach - 0.5)));
    const int col_lo = std::max(0, static_cast<int>(std::floor(sx - reach - 0.5)));
    const int col_hi = std::min(size - 1, static_cast<int>(std::ceil(sx + reach - 0.5)));
    double g_screen[2] = {0.0, 0.0};
    double g_color[3] = {0.0, 0.0, 0.0};
    for (int row = row_lo; row <= row_hi; ++row) {
      for (int col = col_lo; col <= col_hi; ++col) {
        const std::size_t p = static_cast<std::size_t>(row) * size + col;
        accumulate(p, col + 0.5 - sx, row + 0.5 - sy, v, g_screen, g_color);
      }
    }
    grad_screen[2 * v] = g_screen[0];
    grad_screen[2 * v + 1] = g_screen[1];
    grad_colors[3 * v] = g_color[0];
    grad_colors[3 * v + 1] = g_color[1];
    grad_colors[3 * v + 2] = g_color[2];
  }
}

void matvec(Execution exec, int rows, int cols, std::span<const double> a, std::span<const double> x, std::span<double> y) {
  require(a.size() == static_cast<std::size_t>(rows) * cols && x.size() == static_cast<std::size_t>(cols) &&
              y.size() == static_cast<std::size_t>(rows),
          "matvec: size mismatch");
  auto row_dot = [&](int r) {
    const double* ar = a.data() + static_cast<std::size_t>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) {
      acc += ar[c] * x[c];
    }
    y[r] = acc;
  };
  if (exec == Execution::serial) {
    for (int r = 0; r < rows; ++r) {
      row_dot(r);
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    row_dot(r);
  }
}

void matvec_transposed(
    Execution exec,
    int rows,
    int cols,
    std::span<const double> a,
    std::span<const double> x,
    std::span<double> y) {
  require(a.size() == static_cast<std::size_t>(rows) * cols && x.size() == static_cast<std::size_t>(rows) &&
              y.size() == static_cast<std::size_t>(cols),
          "matvec_transposed: size mismatch");
  if (exec == Execution::serial) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int r = 0; r < rows; ++r) {
      const double* ar = a.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) {
        y[c] += ar[c] * x[r];
      }
    }
    return;
  }
  // Threads own tiles of columns and stream rows through them, so each y[c]
  // still sums rows in ascending order and matches the serial result.
  constexpr int kTile = 256;
  const int tiles = (cols + kTile - 1) / kTile;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < tiles; ++t) {
    const int begin = t * kTile;
    const int end = std::min(cols, begin + kTile);
    std::fill(y.begin() + begin, y.begin() + end, 0.0);
    for (int r = 0; r < rows; ++r) {
      const double* ar = a.data() + static_cast<std::size_t>(r) * cols;
      for (int c = begin; c < end; ++c) {
        y[c] += ar[c] * x[r];
      }
    }
  }
}

} // namespace latentface::kernels
