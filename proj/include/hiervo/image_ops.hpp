#pragma once

#include <array>

#include "hiervo/grid.hpp"

namespace hiervo {

// Pixel centers sit at integer coordinates; (u, v) = (column, row).
// A sample point is in bounds when it lies inside [0, W-1] x [0, H-1].

/// Weights and neighbor indices for one bilinear lookup.
struct BilinearTap {
  bool valid = false;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double wx = 0.0, wy = 0.0;  // fractional offsets toward (x1, y1)
};

BilinearTap bilinear_tap(int height, int width, double u, double v);

/// Sample `img` at fractional (u, v). Out-of-bounds points give value 0 and
/// valid = false; values are never clamped onto the border.
bool bilinear_sample(const Grid& img, double u, double v, double* out_channels);

/// Sample at a whole grid of coordinates. Output has img's channel count and
/// the coordinate grids' spatial size; `valid` is 1 where the tap was in bounds.
void sample_grid(const Grid& img, const Grid& u, const Grid& v, Grid* out, Mask* valid);

/// Bilinear upsample to (out_h, out_w) >= source size. Constant maps remain
/// constant and affine ramps stay affine (corner-aligned mapping).
Grid upsample(const Grid& src, int out_h, int out_w);

/// 2x box downsample (average of 2x2 blocks); dimensions must be even.
Grid downsample_half(const Grid& src);

/// Forward differences; last column (grad_x) / last row (grad_y) are zero.
Grid grad_x(const Grid& img);
Grid grad_y(const Grid& img);

/// Morphological dilation of the 1-region with a (2r+1)^2 structuring
/// element, applied `iterations` times. Input is treated as binary (> 0.5).
Mask dilate(const Mask& m, int radius, int iterations);

/// Local mean over a (2r+1)^2 window with edge replication.
Grid box_mean(const Grid& img, int radius);

/// Per-pixel mean over channels (C -> 1).
Grid channel_mean(const Grid& img);

double min_value(const Grid& g, size_t* argmin = nullptr);
double mean_value(const Grid& g);
double sum_value(const Grid& g);

}  // namespace hiervo
