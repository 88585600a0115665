#pragma once

#include <cassert>
#include <stdexcept>
#include <vector>

namespace hiervo {

/// Dense row-major H x W x C grid of doubles. The one storage type behind
/// images (C = 1 or 3, values in [0,1]), depth maps (C = 1, meters) and
/// masks (C = 1, values in [0,1]). A 1x1x1 grid doubles as a scalar.
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels = 1, double fill = 0.0)
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1) {
      throw std::invalid_argument("Grid: bad dimensions");
    }
    data_.assign(static_cast<size_t>(height) * width * channels, fill);
  }

  static Grid scalar(double v) {
    Grid g(1, 1, 1);
    g.data_[0] = v;
    return g;
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool same_shape(const Grid& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool is_scalar() const { return height_ == 1 && width_ == 1 && channels_ == 1; }

  double& at(int y, int x, int c = 0) {
    assert(y >= 0 && y < height_ && x >= 0 && x < width_ && c >= 0 && c < channels_);
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int y, int x, int c = 0) const {
    assert(y >= 0 && y < height_ && x >= 0 && x < width_ && c >= 0 && c < channels_);
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  double scalar_value() const {
    if (!is_scalar()) throw std::logic_error("Grid: not a scalar");
    return data_[0];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

using Image = Grid;     // photometric, values in [0,1]
using DepthMap = Grid;  // single channel, meters
using Mask = Grid;      // single channel, values in [0,1]

}  // namespace hiervo
