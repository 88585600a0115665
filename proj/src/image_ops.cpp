#include "hiervo/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hiervo {

BilinearTap bilinear_tap(int height, int width, double u, double v) {
  BilinearTap t;
  if (!(u >= 0.0 && u <= width - 1 && v >= 0.0 && v <= height - 1)) {
    return t;  // invalid
  }
  t.valid = true;
  // Clamp the base cell so that points on the max edge still use an
  // interior cell (weight 1 on the far neighbor).
  t.x0 = std::min(static_cast<int>(std::floor(u)), std::max(width - 2, 0));
  t.y0 = std::min(static_cast<int>(std::floor(v)), std::max(height - 2, 0));
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  t.wx = u - t.x0;
  t.wy = v - t.y0;
  return t;
}

bool bilinear_sample(const Grid& img, double u, double v, double* out_channels) {
  const BilinearTap t = bilinear_tap(img.height(), img.width(), u, v);
  const int C = img.channels();
  if (!t.valid) {
    for (int c = 0; c < C; ++c) out_channels[c] = 0.0;
    return false;
  }
  const double w00 = (1.0 - t.wx) * (1.0 - t.wy);
  const double w10 = t.wx * (1.0 - t.wy);
  const double w01 = (1.0 - t.wx) * t.wy;
  const double w11 = t.wx * t.wy;
  for (int c = 0; c < C; ++c) {
    out_channels[c] = w00 * img.at(t.y0, t.x0, c) + w10 * img.at(t.y0, t.x1, c) +
                      w01 * img.at(t.y1, t.x0, c) + w11 * img.at(t.y1, t.x1, c);
  }
  return true;
}

void sample_grid(const Grid& img, const Grid& u, const Grid& v, Grid* out, Mask* valid) {
  if (!u.same_shape(v) || u.channels() != 1) {
    throw std::invalid_argument("sample_grid: coordinate grids must be single-channel and same shape");
  }
  const int H = u.height(), W = u.width(), C = img.channels();
  *out = Grid(H, W, C);
  if (valid) *valid = Mask(H, W, 1);
  std::array<double, 8> buf{};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const bool ok = bilinear_sample(img, u.at(y, x), v.at(y, x), buf.data());
      for (int c = 0; c < C; ++c) out->at(y, x, c) = buf[c];
      if (valid) valid->at(y, x) = ok ? 1.0 : 0.0;
    }
  }
}

Grid upsample(const Grid& src, int out_h, int out_w) {
  if (out_h < src.height() || out_w < src.width()) {
    throw std::invalid_argument("upsample: target smaller than source");
  }
  const int H = src.height(), W = src.width(), C = src.channels();
  Grid out(out_h, out_w, C);
  const double sy = out_h > 1 ? static_cast<double>(H - 1) / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(W - 1) / (out_w - 1) : 0.0;
  std::array<double, 8> buf{};
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      bilinear_sample(src, x * sx, y * sy, buf.data());
      for (int c = 0; c < C; ++c) out.at(y, x, c) = buf[c];
    }
  }
  return out;
}

Grid downsample_half(const Grid& src) {
  if (src.height() % 2 != 0 || src.width() % 2 != 0) {
    throw std::invalid_argument("downsample_half: dimensions must be even");
  }
  const int H = src.height() / 2, W = src.width() / 2, C = src.channels();
  Grid out(H, W, C);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        out.at(y, x, c) = 0.25 * (src.at(2 * y, 2 * x, c) + src.at(2 * y, 2 * x + 1, c) +
                                  src.at(2 * y + 1, 2 * x, c) + src.at(2 * y + 1, 2 * x + 1, c));
      }
    }
  }
  return out;
}

Grid grad_x(const Grid& img) {
  const int H = img.height(), W = img.width(), C = img.channels();
  Grid out(H, W, C);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x + 1 < W; ++x) {
      for (int c = 0; c < C; ++c) out.at(y, x, c) = img.at(y, x + 1, c) - img.at(y, x, c);
    }
  }
  return out;
}

Grid grad_y(const Grid& img) {
  const int H = img.height(), W = img.width(), C = img.channels();
  Grid out(H, W, C);
  for (int y = 0; y + 1 < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) out.at(y, x, c) = img.at(y + 1, x, c) - img.at(y, x, c);
    }
  }
  return out;
}

Mask dilate(const Mask& m, int radius, int iterations) {
  if (m.channels() != 1) throw std::invalid_argument("dilate: mask must be single-channel");
  if (radius < 0 || iterations < 0) throw std::invalid_argument("dilate: negative parameter");
  const int H = m.height(), W = m.width();
  Mask cur(H, W, 1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) cur.at(y, x) = m.at(y, x) > 0.5 ? 1.0 : 0.0;
  for (int it = 0; it < iterations; ++it) {
    Mask next(H, W, 1);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double v = 0.0;
        for (int dy = -radius; dy <= radius && v == 0.0; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= W) continue;
            if (cur.at(yy, xx) > 0.5) {
              v = 1.0;
              break;
            }
          }
        }
        next.at(y, x) = v;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Grid box_mean(const Grid& img, int radius) {
  if (radius < 0) throw std::invalid_argument("box_mean: negative radius");
  const int H = img.height(), W = img.width(), C = img.channels();
  const double norm = 1.0 / ((2 * radius + 1) * (2 * radius + 1));
  Grid out(H, W, C);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int dy = -radius; dy <= radius; ++dy) {
          const int yy = std::clamp(y + dy, 0, H - 1);
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = std::clamp(x + dx, 0, W - 1);
            acc += img.at(yy, xx, c);
          }
        }
        out.at(y, x, c) = acc * norm;
      }
    }
  }
  return out;
}

Grid channel_mean(const Grid& img) {
  const int H = img.height(), W = img.width(), C = img.channels();
  Grid out(H, W, 1);
  const double inv = 1.0 / C;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int c = 0; c < C; ++c) acc += img.at(y, x, c);
      out.at(y, x) = acc * inv;
    }
  }
  return out;
}

double min_value(const Grid& g, size_t* argmin) {
  if (g.empty()) throw std::invalid_argument("min_value: empty grid");
  size_t best = 0;
  double m = g.data()[0];
  for (size_t i = 1; i < g.size(); ++i) {
    if (g.data()[i] < m) {
      m = g.data()[i];
      best = i;
    }
  }
  if (argmin) *argmin = best;
  return m;
}

double mean_value(const Grid& g) {
  if (g.empty()) throw std::invalid_argument("mean_value: empty grid");
  return sum_value(g) / static_cast<double>(g.size());
}

double sum_value(const Grid& g) {
  double acc = 0.0;
  for (double v : g.data()) acc += v;
  return acc;
}

}  // namespace hiervo
