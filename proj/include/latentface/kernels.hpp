#pragma once

#include <span>

namespace latentface {

// Which implementation of a data-parallel kernel to run. `serial` is the
// reference path the tests compare against; `parallel` uses OpenMP.
enum class Execution { serial, parallel };

namespace kernels {

struct SplatParams {
  int size = 0;               // square image side in pixels
  double sigma = 1.5;         // splat standard deviation in pixels
  double background = 0.5;    // background gray level
  double background_weight = 0.05;
  double cutoff_sigmas = 8.0; // weights below exp(-cutoff^2/2) are dropped
};

/// Normalized Gaussian vertex splatting.
///
///   I(p) = (sum_v w_v(p) c_v + b_w * bg) / (sum_v w_v(p) + b_w),
///   w_v(p) = exp(-|p - s_v|^2 / (2 sigma^2)),
///
/// with pixel centers at (col + 0.5, row + 0.5). `screen` is V x 2
/// (x = column, y = row), `colors` V x 3, `image` size^2 x 3 and
/// `denominator` size^2 (receives sum_v w_v + b_w for the backward pass).
///
/// Both executions visit vertices in ascending order per pixel, so their
/// outputs are bit-identical.
void splat_forward(
    Execution exec,
    const SplatParams& params,
    std::span<const double> screen,
    std::span<const double> colors,
    std::span<double> image,
    std::span<double> denominator);

/// Adjoint of splat_forward. Writes (overwrites) dL/dscreen (V x 2) and
/// dL/dcolors (V x 3) given dL/dimage. The serial path scatters pixel by
/// pixel; the parallel path gathers per vertex, so results agree up to
/// summation order.
void splat_backward(
    Execution exec,
    const SplatParams& params,
    std::span<const double> screen,
    std::span<const double> colors,
    std::span<const double> image,
    std::span<const double> denominator,
    std::span<const double> grad_image,
    std::span<double> grad_screen,
    std::span<double> grad_colors);

/// y = A x for a row-major rows x cols matrix.
void matvec(Execution exec, int rows, int cols, std::span<const double> a, std::span<const double> x, std::span<double> y);

/// y = A^T x for a row-major rows x cols matrix.
void matvec_transposed(
    Execution exec,
    int rows,
    int cols,
    std::span<const double> a,
    std::span<const double> x,
    std::span<double> y);

} // namespace kernels
} // namespace latentface
