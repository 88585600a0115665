#pragma once

#include <vector>

#include "hiervo/geometry.hpp"
#include "hiervo/grid.hpp"

namespace hiervo {

struct DepthMetrics {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0;
  double delta1 = 0, delta2 = 0, delta3 = 0;  // fractions under 1.25^k
};

enum class DepthScaling { Median, None };

/// Standard monocular depth metrics over the valid pixels. Median scaling
/// rescales the prediction by median(gt)/median(pred) first; both maps are
/// clamped to [1e-3, cap]. Throws std::invalid_argument on an empty valid set.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& valid,
                           DepthScaling scaling, double cap);

/// Camera-to-world pose sequence.
struct Trajectory {
  std::vector<Pose> poses;
  std::vector<int> frame_indices;  // defaults to 0..N-1 when loaded

  static Trajectory from_poses(std::vector<Pose> poses);
};

struct OdomMetrics {
  double t_rel = 0;  // average translational drift, percent
  double r_rel = 0;  // average rotational drift, degrees per 100 m
  double ate = 0;    // RMSE after 7-DoF alignment, meters
  bool length_sufficient = false;  // gt path reached 100 m
};

enum class OdomScale { None, PathRatio };

/// KITTI-style evaluation: every start frame, subsequence lengths
/// 100..800 m by ground-truth arc length. ATE always uses Umeyama similarity
/// alignment; t_rel/r_rel run on unaligned trajectories, optionally after a
/// global path-length-ratio scale correction of the prediction.
OdomMetrics odom_metrics(const Trajectory& pred, const Trajectory& gt,
                         OdomScale scale = OdomScale::None);

}  // namespace hiervo
